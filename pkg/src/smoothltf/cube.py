"""Bit vectors over {-1,+1}^n, distributions on the cube, halfspaces and noise channels.

Points are stored as ``int8`` arrays with entries in {-1, +1}; a batch of
points is a 2-D array with one point per row. Exact-enumeration helpers list
the cube in the index order used by :mod:`smoothltf.kernels` (coordinate i is
-1 iff bit i of the index is set).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy import stats

from . import kernels
from .rng import make_rng

ENUMERATION_CAP = 20


class ConfigurationError(ValueError):
    """Invalid distribution, noise model or experiment configuration."""


def _frozen(a, dtype=np.float64):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def check_bits(x) -> np.ndarray:
    """Validate and return ``x`` as an int8 array of +-1 entries."""
    arr = np.asarray(x)
    if arr.size and not np.all((arr == 1) | (arr == -1)):
        raise ValueError("bit vectors must contain only -1 and +1")
    return arr.astype(np.int8, copy=False)


def check_enumerable(n: int, cap: int | None = None) -> None:
    cap = ENUMERATION_CAP if cap is None else cap
    if n > cap:
        raise ValueError(f"exact enumeration needs n <= {cap}, got n={n}")


@lru_cache(maxsize=32)
def _cube_points(n: int) -> np.ndarray:
    k = np.arange(1 << n, dtype=np.int64)
    bits = (k[:, None] >> np.arange(n)) & 1
    pts = np.where(bits == 1, -1, 1).astype(np.int8)
    pts.setflags(write=False)
    return pts


def cube_points(n: int, cap: int | None = None) -> np.ndarray:
    """All ``2**n`` points of the cube as a read-only ``(2**n, n)`` int8 array."""
    check_enumerable(n, cap)
    return _cube_points(n)


def point_index(x) -> np.ndarray | int:
    """Cube index of a point (or of each row of a batch)."""
    x = check_bits(x)
    weights = 1 << np.arange(x.shape[-1], dtype=np.int64)
    idx = (x == -1).astype(np.int64) @ weights
    return int(idx) if np.ndim(idx) == 0 else idx


# ---------------------------------------------------------------- distributions


@dataclass(frozen=True, eq=False)
class ProductDistribution:
    """Independent coordinates, ``flip_probs[i] = P[x_i = -1]``."""

    flip_probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.flip_probs)
        if p.ndim != 1 or p.size == 0:
            raise ConfigurationError("flip_probs must be a non-empty 1-D sequence")
        if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
            raise ConfigurationError("every flip probability must lie in [0, 1]")
        object.__setattr__(self, "flip_probs", p)

    @classmethod
    def uniform(cls, n: int) -> "ProductDistribution":
        return cls(np.full(n, 0.5))

    @classmethod
    def bitflip(cls, n: int, sigma: float) -> "ProductDistribution":
        """The smoothing law N_sigma: each coordinate is -1 with probability sigma."""
        return cls(np.full(n, float(sigma)))

    @property
    def n(self) -> int:
        return self.flip_probs.size

    @property
    def means(self) -> np.ndarray:
        return 1.0 - 2.0 * self.flip_probs

    def sample(self, count: int, seed=None) -> np.ndarray:
        rng = make_rng(seed)
        u = rng.random((count, self.n))
        return np.where(u < self.flip_probs, -1, 1).astype(np.int8)

    def law(self, cap: int | None = None) -> np.ndarray:
        check_enumerable(self.n, cap)
        return kernels.product_law(self.flip_probs)

    def pmf(self, x) -> np.ndarray | float:
        x = check_bits(x)
        probs = np.where(x == -1, self.flip_probs, 1.0 - self.flip_probs)
        out = np.prod(probs, axis=-1)
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class MixtureDistribution:
    """Finite mixture of product distributions (not a product law in general)."""

    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        w = _frozen(self.weights)
        comps = tuple(self.components)
        if len(comps) == 0:
            raise ConfigurationError("a mixture needs at least one component")
        if w.shape != (len(comps),):
            raise ConfigurationError("one weight per mixture component is required")
        if np.any(w < 0) or not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-9):
            raise ConfigurationError("mixture weights must be non-negative and sum to 1")
        comps = tuple(c if isinstance(c, ProductDistribution) else ProductDistribution(c) for c in comps)
        if len({c.n for c in comps}) != 1:
            raise ConfigurationError("mixture components must share a dimension")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def n(self) -> int:
        return self.components[0].n

    @property
    def means(self) -> np.ndarray:
        return sum(wk * c.means for wk, c in zip(self.weights, self.components))

    def sample(self, count: int, seed=None) -> np.ndarray:
        rng = make_rng(seed)
        which = rng.choice(len(self.components), size=count, p=self.weights)
        probs = np.stack([c.flip_probs for c in self.components])[which]
        u = rng.random((count, self.n))
        return np.where(u < probs, -1, 1).astype(np.int8)

    def law(self, cap: int | None = None) -> np.ndarray:
        return sum(wk * c.law(cap) for wk, c in zip(self.weights, self.components))

    def pmf(self, x):
        return sum(wk * c.pmf(x) for wk, c in zip(self.weights, self.components))


def as_distribution(dist) -> ProductDistribution | MixtureDistribution:
    if isinstance(dist, (ProductDistribution, MixtureDistribution)):
        return dist
    if isinstance(dist, (list, tuple)) and len(dist) == 0:
        raise ConfigurationError("empty mixture")
    return ProductDistribution(dist)


# ------------------------------------------------------------------ halfspaces


@dataclass(frozen=True, eq=False)
class LinearThresholdFunction:
    """``f(x) = sign(<w, x> - theta)`` with sign(0) = +1.

    Margins within ``1e-12 * (|w|_1 + |theta|)`` of zero count as zero, so the
    label is stable under positive rescaling of ``(w, theta)`` despite rounding.
    """

    w: np.ndarray
    theta: float = 0.0

    def __post_init__(self):
        w = _frozen(self.w)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weight vector must be non-empty and 1-D")
        if not np.all(np.isfinite(w)) or not np.isfinite(self.theta):
            raise ValueError("weights and threshold must be finite")
        if not np.any(w != 0):
            raise ValueError("the all-zero weight vector does not define a halfspace")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "theta", float(self.theta))

    @classmethod
    def majority(cls, n: int) -> "LinearThresholdFunction":
        return cls(np.ones(n), 0.0)

    @property
    def n(self) -> int:
        return self.w.size

    @property
    def tol(self) -> float:
        return 1e-12 * (np.abs(self.w).sum() + abs(self.theta))

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.shape[1] != self.n:
            raise ValueError(f"dimension mismatch: halfspace has n={self.n}, input has {X2.shape[1]}")
        out = kernels.ltf_signs(X2, self.w, self.theta, self.tol)
        return int(out[0]) if single else out

    def margin(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.w - self.theta


def ltf_eval(f: LinearThresholdFunction, x):
    """Label of a point (int) or of each row of a batch (int8 array)."""
    return f(check_bits(x))


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    rho: float

    def __post_init__(self):
        for name in ("sigma", "rho"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {v}")


# -------------------------------------------------------------- noise channels


def _check_rate(name, v):
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {v}")


def flip_noise(x, sigma: float, seed=None) -> np.ndarray:
    """Bit-flip smoothing ``x * z`` with ``z_i = -1`` independently w.p. ``sigma``."""
    _check_rate("sigma", sigma)
    x = check_bits(x)
    rng = make_rng(seed)
    z = np.where(rng.random(x.shape) < sigma, -1, 1).astype(np.int8)
    return x * z


def noisy_copy(z, rho: float, mu, seed=None) -> np.ndarray:
    """Keep each coordinate of ``z`` w.p. ``rho``, otherwise redraw it from ``mu``."""
    _check_rate("rho", rho)
    z = check_bits(z)
    mu = as_distribution(mu)
    if not isinstance(mu, ProductDistribution):
        raise ValueError("noisy copies are defined for product base measures")
    if z.shape[-1] != mu.n:
        raise ValueError(f"dimension mismatch: z has n={z.shape[-1]}, mu has n={mu.n}")
    rng = make_rng(seed)
    keep = rng.random(z.shape) < rho
    fresh = np.where(rng.random(z.shape) < mu.flip_probs, -1, 1).astype(np.int8)
    return np.where(keep, z, fresh).astype(np.int8)


def flip_noise_law(x, sigma: float, cap: int | None = None) -> np.ndarray:
    """Exact law of :func:`flip_noise` over the cube."""
    x = check_bits(x)
    check_enumerable(x.size, cap)
    # output_i = -1 iff exactly one of (x_i = -1, z_i = -1)
    p_minus = np.where(x == -1, 1.0 - sigma, sigma)
    return kernels.product_law(p_minus)


def noisy_copy_law(z, rho: float, mu, cap: int | None = None) -> np.ndarray:
    """Exact law of :func:`noisy_copy` over the cube."""
    z = check_bits(z)
    mu = as_distribution(mu)
    check_enumerable(z.size, cap)
    p_minus = rho * (z == -1) + (1.0 - rho) * mu.flip_probs
    return kernels.product_law(p_minus)


# ------------------------------------------------------------------- datasets


class LabeledSample(NamedTuple):
    x: np.ndarray
    y: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled points: ``X`` is ``(m, n)`` int8, ``y`` is ``(m,)`` int8, all entries +-1."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = check_bits(np.atleast_2d(self.X))
        y = check_bits(np.atleast_1d(self.y))
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y must have the same number of rows")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.y.shape[0]

    def __getitem__(self, idx) -> "Dataset":
        if isinstance(idx, (int, np.integer)):
            idx = slice(idx, idx + 1)
        return Dataset(self.X[idx], self.y[idx])

    def __iter__(self) -> Iterator[LabeledSample]:
        for x, y in zip(self.X, self.y):
            yield LabeledSample(x, int(y))

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @classmethod
    def concat(cls, parts: Sequence["Dataset"]) -> "Dataset":
        return cls(np.concatenate([p.X for p in parts]), np.concatenate([p.y for p in parts]))


@dataclass(frozen=True)
class LabelNoise:
    """Label corruption: ``none``, random classification noise at rate ``eta``,
    or ``boundary`` (every label within normalized margin ``width`` is flipped)."""

    kind: str = "none"
    eta: float = 0.0
    width: float = 0.0

    def __post_init__(self):
        if self.kind not in {"none", "rcn", "boundary"}:
            raise ConfigurationError(f"unknown label noise kind {self.kind!r}")
        if self.kind == "rcn" and not 0.0 <= self.eta < 0.5:
            raise ConfigurationError(f"RCN rate must lie in [0, 1/2), got {self.eta}")
        if self.kind == "boundary" and self.width < 0:
            raise ConfigurationError("boundary band width must be non-negative")


@dataclass(frozen=True, eq=False)
class PlantedDataConfig:
    n: int
    marginal: ProductDistribution | MixtureDistribution
    planted: LinearThresholdFunction
    label_noise: LabelNoise = field(default_factory=LabelNoise)

    def __post_init__(self):
        if self.marginal.n != self.n or self.planted.n != self.n:
            raise ConfigurationError("marginal, planted halfspace and n must agree on the dimension")


def generate_dataset(cfg: PlantedDataConfig, count: int, seed=None) -> Dataset:
    """Draw ``count`` labeled samples from the planted model."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = make_rng(seed)
    X = cfg.marginal.sample(count, rng)
    y = cfg.planted(X)
    noise = cfg.label_noise
    if noise.kind == "rcn":
        flip = rng.random(count) < noise.eta
        y = np.where(flip, -y, y)
    elif noise.kind == "boundary":
        m = np.abs(cfg.planted.margin(X)) / np.linalg.norm(cfg.planted.w)
        y = np.where(m <= noise.width, -y, y)
    return Dataset(X, y.astype(np.int8))


def sample_marginal(dist, count: int, seed=None) -> np.ndarray:
    """``count`` i.i.d. draws from a product distribution or a finite mixture."""
    if count < 1:
        raise ValueError("count must be positive")
    return as_distribution(dist).sample(count, seed)


# ------------------------------------------------------------------ tail probe


@dataclass
class TailProbeReport:
    lam: float
    alpha_tail: float
    directions: np.ndarray
    t_grid: np.ndarray
    empirical: np.ndarray  # (n_directions, len(t_grid)) survival P[|<x,v>| > t]
    half_width: np.ndarray
    bound: np.ndarray
    worst_excess: np.ndarray  # per direction: max(empirical - half_width - bound)

    @property
    def violated(self) -> bool:
        return bool(np.any(self.worst_excess > 0))


def subexp_tail_probe(dist, lam: float, alpha_tail: float, n_directions: int = 8,
                      n_samples: int = 20_000, seed=None, directions=None,
                      t_grid=None, level: float = 0.99) -> TailProbeReport:
    """Compare empirical projection tails against ``2 exp(-(t/lam)^(1+alpha))``.

    Directions are random unit vectors unless given. A violation is reported
    only when the empirical survival exceeds the bound by more than the
    Hoeffding half-width at ``level`` (per grid point).
    """
    if lam <= 0 or alpha_tail <= 0:
        raise ValueError("lam and alpha_tail must be positive")
    dist = as_distribution(dist)
    rng = make_rng(seed)
    X = dist.sample(n_samples, rng).astype(np.float64)
    if directions is None:
        V = rng.standard_normal((n_directions, dist.n))
    else:
        V = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    proj = np.abs(X @ V.T)
    if t_grid is None:
        t_grid = np.linspace(0.0, max(proj.max(), lam) * 1.05, 64)[1:]
    t_grid = np.asarray(t_grid, dtype=np.float64)
    emp = (proj[:, :, None] > t_grid[None, None, :]).mean(axis=0)
    hw = np.full_like(emp, np.sqrt(np.log(2.0 / (1.0 - level)) / (2.0 * n_samples)))
    bound = 2.0 * np.exp(-(t_grid / lam) ** (1.0 + alpha_tail))
    excess = (emp - hw - bound[None, :]).max(axis=1)
    return TailProbeReport(lam, alpha_tail, V, t_grid, emp, hw, bound, excess)


def normal_quantile(level: float) -> float:
    """Two-sided normal critical value for a confidence ``level``."""
    return float(stats.norm.ppf(0.5 + level / 2.0))
