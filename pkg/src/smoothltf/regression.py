"""Polynomial threshold learner: monomial features, L1 regression, threshold sweep,
and the repeat-and-validate wrapper that boosts the success probability."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from . import kernels
from .cube import ConfigurationError, Dataset, PlantedDataConfig, check_bits, generate_dataset
from .lp import L1Fit, solve_l1
from .rng import derive_seed, make_rng

BASIS_CAP = 200_000
MODEL_SCHEMA = "smoothltf.model/1"


class InsufficientSamples(RuntimeError):
    pass


# ---------------------------------------------------------------------- basis


class MonomialBasis:
    """All subsets ``S`` of ``range(n)`` with ``|S| <= d``, sorted by (size, lex)."""

    def __init__(self, n: int, d: int, cap: int = BASIS_CAP):
        if n < 1 or d < 0:
            raise ValueError("need n >= 1 and d >= 0")
        d = min(d, n)
        size = sum(math.comb(n, k) for k in range(d + 1))
        if size > cap:
            raise ConfigurationError(f"basis of {size} monomials exceeds the cap {cap}")
        self.n = n
        self.d = d
        self.monomials = tuple(S for k in range(d + 1) for S in combinations(range(n), k))
        self._index = {S: j for j, S in enumerate(self.monomials)}
        # column of S = column of S[:-1] times x[S[-1]]; the prefix always comes earlier
        self.parent = np.array([self._index[S[:-1]] if S else -1 for S in self.monomials], dtype=np.int64)
        self.var = np.array([S[-1] if S else -1 for S in self.monomials], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.monomials)

    def __eq__(self, other) -> bool:
        return isinstance(other, MonomialBasis) and (self.n, self.d) == (other.n, other.d)

    def __hash__(self) -> int:
        return hash((self.n, self.d))

    def __repr__(self) -> str:
        return f"MonomialBasis(n={self.n}, d={self.d}, size={len(self)})"

    def index(self, S) -> int:
        return self._index[tuple(sorted(S))]


def expand_features(x, basis: MonomialBasis) -> np.ndarray:
    """``chi_S(x) = prod_{i in S} x_i`` for every monomial; rows in, rows out."""
    x = check_bits(x)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != basis.n:
        raise ValueError(f"dimension mismatch: basis has n={basis.n}, input has {X.shape[1]}")
    F = kernels.monomial_features(X, basis.parent, basis.var)
    return F[0] if single else F


# ------------------------------------------------------------ fitting & threshold


def l1_fit(features, labels, tol: float = 1e-8, polish: bool = True, max_iter: int = 100) -> L1Fit:
    """Minimize ``sum_j |<c, features_j> - y_j|`` with a certified gap (see :func:`solve_l1`)."""
    return solve_l1(features, np.asarray(labels, dtype=np.float64), tol=tol, max_iter=max_iter,
                    polish=polish)


def _threshold_errors(predictions, labels, candidates):
    """0/1 error counts of ``sign(p - t)`` (p >= t means +1) for each candidate t."""
    order = np.argsort(predictions, kind="stable")
    p = predictions[order]
    pos = np.concatenate([[0], np.cumsum(labels[order] == 1)])
    below = np.searchsorted(p, candidates, side="left")  # predicted -1
    pos_below = pos[below]
    neg_above = (len(p) - below) - (pos[-1] - pos_below)
    return pos_below + neg_above


def threshold_candidates(predictions) -> np.ndarray:
    u = np.unique(np.asarray(predictions, dtype=np.float64))
    mids = np.clip((u[:-1] + u[1:]) / 2.0, -1.0, 1.0)
    return np.unique(np.concatenate([[-1.0, 1.0], mids]))


def select_threshold(predictions, labels) -> float:
    """The ``t`` in [-1, 1] minimizing the 0/1 error of ``sign(p - t)``; ties go to the smallest t."""
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels)
    if p.size == 0 or p.shape != y.shape:
        raise ValueError("need equal-length, non-empty predictions and labels")
    cand = threshold_candidates(p)
    errs = _threshold_errors(p, y, cand)
    return float(cand[int(np.argmin(errs))])


# ------------------------------------------------------------------ hypothesis


@dataclass(eq=False)
class PolynomialHypothesis:
    basis: MonomialBasis
    coeffs: np.ndarray
    t: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.coeffs.shape != (len(self.basis),):
            raise ValueError("one coefficient per monomial required")
        if not -1.0 <= self.t <= 1.0:
            raise ValueError("threshold must lie in [-1, 1]")

    def polynomial(self, X) -> np.ndarray:
        return expand_features(X, self.basis) @ self.coeffs

    def __call__(self, X) -> np.ndarray:
        return np.where(self.polynomial(X) - self.t >= 0, 1, -1).astype(np.int8)


def evaluate(h: PolynomialHypothesis, data: Dataset) -> float:
    """Fraction of samples with ``sign(p(x) - t) != y``."""
    if len(data) == 0:
        raise ValueError("evaluate needs a non-empty dataset")
    return float(np.mean(h(data.X) != data.y))


def fit_once(data: Dataset, basis: MonomialBasis, tol: float = 1e-8,
             polish: bool = True) -> tuple[PolynomialHypothesis, L1Fit]:
    """One run of the base algorithm: expand, fit in L1, pick the threshold."""
    F = expand_features(data.X, basis)
    fit = l1_fit(F, data.y, tol=tol, polish=polish)
    pred = F @ fit.coeffs
    t = select_threshold(pred, data.y)
    h = PolynomialHypothesis(basis, fit.coeffs, t)
    return h, fit


# ------------------------------------------------------------------- learner


@dataclass(frozen=True)
class LearnConfig:
    d: int
    epsilon: float
    delta: float
    N: int
    r: int
    V: int
    tol: float = 1e-8
    polish: bool = False

    def __post_init__(self):
        if self.d < 0:
            raise ConfigurationError("degree must be non-negative")
        if not (0 < self.epsilon < 1 and 0 < self.delta < 1):
            raise ConfigurationError("epsilon and delta must lie in (0, 1)")
        if self.N < 1 or self.r < 1 or self.V < 1:
            raise ConfigurationError("N, r and V must be positive")

    @staticmethod
    def repetitions(epsilon: float, delta: float) -> int:
        return math.ceil(4.0 * math.log(2.0 / delta) / epsilon)

    @staticmethod
    def validation_size(epsilon: float, delta: float, r: int) -> int:
        return math.ceil(8.0 * math.log(4.0 * r / delta) / epsilon**2)

    @classmethod
    def from_targets(cls, d: int, epsilon: float, delta: float, N: int, r: int | None = None,
                     V: int | None = None, **kw) -> "LearnConfig":
        if not (0 < epsilon < 1 and 0 < delta < 1):
            raise ConfigurationError("epsilon and delta must lie in (0, 1)")
        r = cls.repetitions(epsilon, delta) if r is None else r
        V = cls.validation_size(epsilon, delta, r) if V is None else V
        return cls(d, epsilon, delta, N, r, V, **kw)

    def check_basis(self, n: int) -> MonomialBasis:
        basis = MonomialBasis(n, self.d)
        if self.N < len(basis):
            raise ConfigurationError(f"N={self.N} is below the basis size {len(basis)}")
        return basis


class PlantedSource:
    """Fresh samples from a planted model; each request draws from its own stream."""

    def __init__(self, cfg: PlantedDataConfig):
        self.cfg = cfg
        self.n = cfg.n

    def draw(self, count: int, seed) -> Dataset:
        return generate_dataset(self.cfg, count, seed)


class FiniteSource:
    """Disjoint consecutive chunks of a fixed dataset, after one seeded shuffle."""

    def __init__(self, data: Dataset, seed=None, shuffle: bool = True):
        if shuffle:
            perm = make_rng(seed, "shuffle").permutation(len(data))
            data = Dataset(data.X[perm], data.y[perm])
        self.data = data
        self.n = data.n
        self._pos = 0

    @property
    def remaining(self) -> int:
        return len(self.data) - self._pos

    def draw(self, count: int, seed=None) -> Dataset:
        if count > self.remaining:
            raise InsufficientSamples(f"requested {count} samples, only {self.remaining} left")
        out = self.data[self._pos:self._pos + count]
        self._pos += count
        return out


def learn(source, cfg: LearnConfig, seed=0) -> PolynomialHypothesis:
    """Run the base algorithm on ``r`` disjoint batches and keep the hypothesis with the
    lowest error on a separate validation set of size ``V`` (ties go to the first)."""
    basis = cfg.check_basis(source.n)
    if hasattr(source, "remaining") and source.remaining < cfg.r * cfg.N + cfg.V:
        raise InsufficientSamples(f"need r*N + V = {cfg.r * cfg.N + cfg.V} samples, "
                                  f"source has {source.remaining}")
    batch_seeds = [derive_seed(seed, "batch", k) for k in range(cfg.r)]
    val_seed = derive_seed(seed, "validation")
    candidates, train_err, gaps, objectives = [], [], [], []
    for k in range(cfg.r):
        batch = source.draw(cfg.N, batch_seeds[k])
        h, fit = fit_once(batch, basis, tol=cfg.tol, polish=cfg.polish)
        candidates.append(h)
        train_err.append(evaluate(h, batch))
        gaps.append(fit.gap)
        objectives.append(fit.objective / cfg.N)
    val = source.draw(cfg.V, val_seed)
    val_err = [evaluate(h, val) for h in candidates]
    best = int(np.argmin(val_err))
    h = candidates[best]
    h.metadata = {
        "d": cfg.d, "epsilon": cfg.epsilon, "delta": cfg.delta, "N": cfg.N, "r": cfg.r, "V": cfg.V,
        "seed": seed, "batch_seeds": batch_seeds, "validation_seed": val_seed,
        "chosen": best, "train_errors": train_err, "validation_errors": val_err,
        "l1_objectives": objectives, "certified_gaps": gaps,
    }
    return h


# ------------------------------------------------------------------------- IO


def hypothesis_to_dict(h: PolynomialHypothesis) -> dict:
    return {
        "schema": MODEL_SCHEMA,
        "n": h.basis.n,
        "d": h.basis.d,
        "monomials": [list(S) for S in h.basis.monomials],
        "coeffs": [float(c) for c in h.coeffs],
        "t": float(h.t),
        "metadata": h.metadata,
    }


def hypothesis_from_dict(obj: dict) -> PolynomialHypothesis:
    if obj.get("schema") != MODEL_SCHEMA:
        raise ValueError(f"unsupported model schema {obj.get('schema')!r}")
    basis = MonomialBasis(int(obj["n"]), int(obj["d"]))
    if [list(S) for S in basis.monomials] != obj["monomials"]:
        raise ValueError("monomial list does not match the canonical basis ordering")
    return PolynomialHypothesis(basis, np.array(obj["coeffs"], dtype=np.float64), float(obj["t"]),
                                obj.get("metadata", {}))


def save_hypothesis(h: PolynomialHypothesis, path) -> None:
    # json writes floats with repr, which round-trips exactly
    Path(path).write_text(json.dumps(hypothesis_to_dict(h), indent=1) + "\n")


def load_hypothesis(path) -> PolynomialHypothesis:
    return hypothesis_from_dict(json.loads(Path(path).read_text()))
