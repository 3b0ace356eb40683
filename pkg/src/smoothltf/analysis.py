"""Noise operator, noise stability/sensitivity and smoothed-error functionals.

Each functional has an exact path (enumeration of the cube, capped in ``n``)
and a Monte Carlo path returning a normal-approximation confidence band.
Functions ``f`` are vectorized: they take a ``(m, n)`` array of +-1 rows and
return ``m`` values. :class:`~smoothltf.cube.LinearThresholdFunction` already
behaves this way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .cube import (
    ENUMERATION_CAP,
    Dataset,
    LinearThresholdFunction,
    ProductDistribution,
    as_distribution,
    check_bits,
    check_enumerable,
    cube_points,
    noisy_copy,
    normal_quantile,
)
from .rng import make_rng

PAIR_ENUMERATION_CAP = 12
DEFAULT_LEVEL = 0.99


@dataclass(frozen=True)
class EstimateWithCI:
    value: float
    half_width: float
    method: str  # "exact" | "monte-carlo"
    n_samples: int
    level: float = DEFAULT_LEVEL

    def __post_init__(self):
        if self.method not in {"exact", "monte-carlo"}:
            raise ValueError(f"unknown method {self.method!r}")
        if self.half_width < 0:
            raise ValueError("half_width must be non-negative")
        if self.method == "exact" and self.half_width != 0:
            raise ValueError("exact estimates carry no half-width")

    @property
    def lo(self) -> float:
        return self.value - self.half_width

    @property
    def hi(self) -> float:
        return self.value + self.half_width

    def covers(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack


def _exact(value: float) -> EstimateWithCI:
    return EstimateWithCI(float(value), 0.0, "exact", 0)


def _mc(samples, level) -> EstimateWithCI:
    samples = np.asarray(samples, dtype=np.float64)
    k = samples.size
    sd = samples.std(ddof=1) if k > 1 else 0.0
    return EstimateWithCI(float(samples.mean()), float(normal_quantile(level) * sd / np.sqrt(k)),
                          "monte-carlo", int(k), level)


def function_table(f, n: int, cap: int | None = None) -> np.ndarray:
    """Values of ``f`` on every cube point, in kernel index order."""
    pts = cube_points(n, cap)
    vals = np.asarray(f(pts), dtype=np.float64)
    if vals.shape != (pts.shape[0],):
        vals = np.array([float(f(p)) for p in pts])
    return vals


def _require_boolean(table):
    if not np.all(np.abs(table) == 1.0):
        raise ValueError("noise sensitivity needs a +-1 valued function")


def _product(mu, n=None) -> ProductDistribution:
    mu = as_distribution(mu)
    if not isinstance(mu, ProductDistribution):
        raise ValueError("the noise operator needs a product base measure")
    if n is not None and mu.n != n:
        raise ValueError(f"dimension mismatch: expected n={n}, base measure has n={mu.n}")
    return mu


def t_rho_table(table, rho: float, mu) -> np.ndarray:
    """``T_rho f`` at every cube point, given the full table of ``f``."""
    mu = _product(mu)
    if len(table) != 1 << mu.n:
        raise ValueError("table length must be 2**n")
    return kernels.noise_transform(table, rho, mu.flip_probs)


def t_rho(f, rho: float, mu, z, mode: str = "exact", budget: int = 10_000, seed=None,
          level: float = DEFAULT_LEVEL, cap: int | None = None) -> EstimateWithCI:
    """``(T_rho f)(z) = E[f(y)]`` for ``y`` a rho-noisy copy of ``z`` under ``mu``."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    z = check_bits(z)
    mu = _product(mu, z.size)
    if mode == "exact":
        check_enumerable(mu.n, cap)
        # y is itself a product law: P[y_i=-1] = rho*[z_i=-1] + (1-rho)*mu_i(-1)
        law = kernels.product_law(rho * (z == -1) + (1.0 - rho) * mu.flip_probs)
        return _exact(law @ function_table(f, mu.n, cap))
    if mode == "mc":
        rng = make_rng(seed)
        Y = noisy_copy(np.broadcast_to(z, (budget, z.size)), rho, mu, rng)
        return _mc(np.asarray(f(Y), dtype=np.float64), level)
    raise ValueError(f"unknown mode {mode!r}")


def noise_stability(f, rho: float, mu, cap: int | None = None) -> float:
    """``S_rho(f) = <f, T_rho f>_mu`` by exact enumeration."""
    mu = _product(mu)
    table = function_table(f, mu.n, cap)
    return float(mu.law(cap) @ (table * t_rho_table(table, rho, mu)))


def noise_sensitivity(f, delta: float, mu, mode: str = "exact", budget: int = 100_000,
                      seed=None, level: float = DEFAULT_LEVEL,
                      cap: int = PAIR_ENUMERATION_CAP) -> EstimateWithCI:
    """``NS_delta(f) = P[f(x) != f(y)]``, x ~ mu, y a (1-delta)-noisy copy of x.

    The exact path sums over all pairs (x, y) directly; the spectral identity
    ``1/2 - S_{1-delta}(f)/2`` is available separately via :func:`noise_stability`.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    mu = _product(mu)
    if mode == "exact":
        check_enumerable(mu.n, cap)
        table = function_table(f, mu.n, cap)
        _require_boolean(table)
        return _exact(kernels.pair_disagreement(table, mu.flip_probs, 1.0 - delta))
    if mode == "mc":
        rng = make_rng(seed)
        X = mu.sample(budget, rng)
        Y = noisy_copy(X, 1.0 - delta, mu, rng)
        fx = np.asarray(f(X), dtype=np.float64)
        fy = np.asarray(f(Y), dtype=np.float64)
        _require_boolean(np.concatenate([fx, fy]))
        return _mc(fx != fy, level)
    raise ValueError(f"unknown mode {mode!r}")


def smoothing_l1_gap(f, rho: float, sigma: float, mode: str = "exact", budget: int = 4_000,
                     seed=None, level: float = DEFAULT_LEVEL, inner: int = 256,
                     cap: int | None = None) -> EstimateWithCI:
    """``E_{z ~ N_sigma} |T_{1-rho} f(z) - f(z)|`` with base measure ``N_sigma``.

    The Monte Carlo path nests ``inner`` noisy copies per outer draw of z; its
    band covers the outer sampling only (the inner estimate of ``|.|`` is biased
    upward by at most ``E|inner error|``).
    """
    n = f.n if isinstance(f, LinearThresholdFunction) else None
    if n is None:
        raise ValueError("smoothing_l1_gap needs a halfspace (or an object with .n)")
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    mu = ProductDistribution.bitflip(n, sigma)
    if mode == "exact":
        table = function_table(f, n, cap)
        smooth = t_rho_table(table, 1.0 - rho, mu)
        return _exact(mu.law(cap) @ np.abs(smooth - table))
    if mode == "mc":
        rng = make_rng(seed)
        Z = mu.sample(budget, rng)
        fz = np.asarray(f(Z), dtype=np.float64)
        Y = noisy_copy(np.repeat(Z, inner, axis=0), 1.0 - rho, mu, rng)
        smooth = np.asarray(f(Y), dtype=np.float64).reshape(budget, inner).mean(axis=1)
        return _mc(np.abs(smooth - fz), level)
    raise ValueError(f"unknown mode {mode!r}")


def smoothed_error(f: LinearThresholdFunction, data: Dataset, sigma: float, mode: str = "exact",
                   budget: int = 100_000, seed=None, level: float = DEFAULT_LEVEL,
                   cap: int | None = None) -> EstimateWithCI:
    """Empirical smoothed 0/1 error ``P[f(x * z) != y]``, (x, y) uniform over ``data``,
    ``z ~ N_sigma``. The exact path sums over all ``2**n`` flip patterns per sample."""
    if len(data) == 0:
        raise ValueError("smoothed_error needs a non-empty dataset")
    if not 0.0 <= sigma <= 1.0:
        raise ValueError("sigma must lie in [0, 1]")
    if data.n != f.n:
        raise ValueError("dimension mismatch between data and halfspace")
    if mode == "exact":
        check_enumerable(f.n, ENUMERATION_CAP if cap is None else cap)
        U = data.X * f.w[None, :]
        rates = kernels.flip_error_rates(U, f.theta, data.y, sigma, f.tol)
        return _exact(rates.mean())
    if mode == "mc":
        rng = make_rng(seed)
        reps = max(1, -(-budget // len(data)))
        X = np.repeat(data.X, reps, axis=0)
        y = np.repeat(data.y, reps)
        Z = np.where(rng.random(X.shape) < sigma, -1, 1).astype(np.int8)
        return _mc(f(X * Z) != y, level)
    raise ValueError(f"unknown mode {mode!r}")
