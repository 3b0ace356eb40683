"""Regularity, the critical index, head/tail decomposition and the concentration
checks used for the regular-tail and dominated-head cases.

Sorted positions are 1-based, matching the usual statement of the critical
index (``ell = 1`` means the whole vector is already regular). Index arrays
such as ``perm``, ``head`` and ``tail`` hold 0-based original coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .analysis import DEFAULT_LEVEL, EstimateWithCI, _exact, _mc
from .cube import (
    ConfigurationError,
    ProductDistribution,
    as_distribution,
    check_bits,
    check_enumerable,
    noisy_copy,
    normal_quantile,
)
from .rng import make_rng

REGULAR_TAIL = "regular-tail"
DOMINATED_HEAD = "dominated-head"


def _nonzero_vector(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 1 or u.size == 0:
        raise ValueError("expected a non-empty 1-D vector")
    if not np.any(u):
        raise ValueError("the zero vector has no regularity or critical index")
    return u


def regularity(w) -> float:
    """Smallest ``alpha`` with ``||w||_inf <= alpha ||w||_2``."""
    w = _nonzero_vector(w)
    scale = np.max(np.abs(w))
    return float(1.0 / np.linalg.norm(w / scale))


@dataclass(frozen=True)
class CriticalIndexReport:
    perm: np.ndarray  # original coordinates sorted by |u| non-increasing (stable)
    sorted_u: np.ndarray
    tail_norms: np.ndarray  # tail_norms[i-1] = sigma_i = ||(u_i, ..., u_n)||_2 after sorting
    alpha_reg: float
    ell: int | None  # 1-based critical index, None if no position qualifies
    H: int
    case: str | None = None

    @property
    def n(self) -> int:
        return self.perm.size

    @property
    def head(self) -> np.ndarray:
        return self.perm[:self.H]

    @property
    def tail(self) -> np.ndarray:
        return self.perm[self.H:]

    @property
    def tail_is_zero(self) -> bool:
        return not np.any(self.sorted_u[self.H:])

    def sigma(self, i: int) -> float:
        """``sigma_i`` for a 1-based sorted position; ``sigma_{n+1} = 0``."""
        return float(self.tail_norms[i - 1]) if i <= self.n else 0.0


def _tail_norms(s):
    # reverse cumulative sum keeps sigma_i^2 = sigma_{i+1}^2 + u_i^2 up to rounding
    return np.sqrt(np.cumsum((s * s)[::-1])[::-1])


def critical_index(u, alpha_reg: float) -> CriticalIndexReport:
    """First sorted position ``i`` with ``|u_i| <= alpha * sigma_i``.

    Zero entries always qualify (``0 <= alpha * 0``), so a vector with an
    all-zero sorted tail has a critical index at or before its first zero.
    Without a qualifying position ``ell`` is None. ``H`` is set to
    ``ell - 1`` (or ``n`` when ``ell`` is None).
    """
    u = _nonzero_vector(u)
    if not 0.0 < alpha_reg <= 1.0:
        raise ValueError("alpha_reg must lie in (0, 1]")
    perm = np.argsort(-np.abs(u), kind="stable")
    s = u[perm]
    sig = _tail_norms(s)
    hits = np.flatnonzero(np.abs(s) <= alpha_reg * sig)
    ell = int(hits[0]) + 1 if hits.size else None
    H = ell - 1 if ell is not None else u.size
    return CriticalIndexReport(perm, s, sig, float(alpha_reg), ell, H)


@dataclass(frozen=True)
class DecompositionBudget:
    K: int
    eps: float = 0.1
    rho: float = 0.1
    sigma: float = 0.1

    def __post_init__(self):
        if self.K < 1:
            raise ConfigurationError("K must be at least 1")


def suggested_K(alpha_reg: float, eps: float, rho: float, sigma: float, lam: float = 1.0) -> int:
    """``log(1+lam)/alpha^2 + log(1/eps) log(1/alpha) / (rho sigma alpha^2)`` with unit constants."""
    a2 = alpha_reg * alpha_reg
    k = math.log1p(lam) / a2 + math.log(1.0 / eps) * math.log(1.0 / alpha_reg) / (rho * sigma * a2)
    return max(1, math.ceil(k))


def decompose(u, alpha_reg: float, budget: DecompositionBudget) -> CriticalIndexReport:
    """Split ``u`` into head and tail.

    ``ell < K``: ``H = ell - 1`` and the tail is alpha-regular (or all zero).
    Otherwise ``H = min(K, n)`` and the head carries a geometrically decaying
    prefix (see :func:`tail_decay_bound`).
    """
    rep = critical_index(u, alpha_reg)
    if rep.ell is not None and rep.ell < budget.K:
        H, case = rep.ell - 1, REGULAR_TAIL
    else:
        H, case = min(budget.K, rep.n), DOMINATED_HEAD
    return CriticalIndexReport(rep.perm, rep.sorted_u, rep.tail_norms, rep.alpha_reg, rep.ell, H, case)


def tail_decay_bound(report: CriticalIndexReport, i: int) -> float:
    """Upper bound ``(1 - alpha^2)^((H+1-i)/2) |u_i| / alpha`` on ``sigma_{H+1}``.

    Valid for every sorted position ``i <= H`` that is not itself critical:
    each such step shrinks ``sigma^2`` by a factor below ``1 - alpha^2``.
    """
    if not 1 <= i <= report.H:
        raise ValueError("i must be a head position")
    a = report.alpha_reg
    return float((1.0 - a * a) ** ((report.H + 1 - i) / 2.0) * abs(report.sorted_u[i - 1]) / a)


# ------------------------------------------------------- sign agreement (case 2)


def _resample_probs(z, rho, sigma):
    """P[y_i = -1] for y drawn from N_{1-rho}(z) with base measure N_sigma."""
    return (1.0 - rho) * (z == -1) + rho * sigma


def _signs(v, theta, tol):
    return np.where(v - theta >= -tol, 1, -1)


def case2_sign_agreement(u, theta: float, H: int, rho: float, sigma: float, z, mode: str = "exact",
                         budget: int = 100_000, seed=None, level: float = DEFAULT_LEVEL,
                         cap: int | None = None) -> EstimateWithCI:
    """``P_y[sign(<u_H, y_H> + <u_T, y_T> - theta) != sign(<u_H, y_H> - theta)]``.

    The head is the ``H`` largest-magnitude coordinates (stable order); ``y``
    keeps each ``z_i`` with probability ``1 - rho`` and otherwise draws it from
    ``N_sigma``.
    """
    u = _nonzero_vector(u)
    z = check_bits(z)
    if z.shape != u.shape:
        raise ValueError("u and z must have the same length")
    if not 1 <= H <= u.size:
        raise ValueError("H must lie in [1, n]")
    head = np.argsort(-np.abs(u), kind="stable")[:H]
    u_head = np.zeros_like(u)
    u_head[head] = u[head]
    tol = 1e-12 * (np.abs(u).sum() + abs(theta))
    if mode == "exact":
        check_enumerable(u.size, cap)
        law = kernels.product_law(_resample_probs(z, rho, sigma))
        full = _signs(kernels.subset_sums(u), theta, tol)
        part = _signs(kernels.subset_sums(u_head), theta, tol)
        return _exact(law @ (full != part))
    if mode == "mc":
        Y = noisy_copy(np.broadcast_to(z, (budget, z.size)), 1.0 - rho,
                       ProductDistribution.bitflip(z.size, sigma), make_rng(seed))
        Yf = Y.astype(np.float64)
        return _mc(_signs(Yf @ u, theta, tol) != _signs(Yf @ u_head, theta, tol), level)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------- regular subsample check


@dataclass(frozen=True)
class SubsampleReport:
    frequency: float  # fraction of masks meeting the norm threshold
    threshold: float  # sqrt(rho - sqrt(log(1/delta)/2) alpha) ||w||_2
    required: float  # 1 - delta
    std_error: float  # binomial SE at p = 1 - delta
    trials: int

    @property
    def passed(self) -> bool:
        return self.frequency >= self.required - 3.0 * self.std_error


def regular_subsample_check(w, alpha_reg: float, rho_eff: float, delta: float, trials: int = 10_000,
                            seed=None) -> SubsampleReport:
    """Keep each coordinate with probability ``rho_eff`` and test how often the kept
    part retains squared norm at least ``(rho - sqrt(log(1/delta)/2) alpha) ||w||^2``."""
    w = _nonzero_vector(w)
    if not (0 < rho_eff <= 1 and 0 < delta < 1 and alpha_reg > 0):
        raise ConfigurationError("need rho_eff in (0, 1], delta in (0, 1), alpha_reg > 0")
    slack = math.sqrt(math.log(1.0 / delta) / 2.0)
    if alpha_reg > rho_eff / slack:
        raise ConfigurationError(f"alpha_reg={alpha_reg} exceeds rho_eff/sqrt(log(1/delta)/2)="
                                 f"{rho_eff / slack:.6g}")
    if regularity(w) > alpha_reg * (1 + 1e-12):
        raise ConfigurationError(f"w is only {regularity(w):.6g}-regular, not {alpha_reg}-regular")
    rng = make_rng(seed)
    w2 = w * w
    need = (rho_eff - slack * alpha_reg) * w2.sum()
    hits = 0
    chunk = max(1, 2_000_000 // w.size)
    for start in range(0, trials, chunk):
        m = min(chunk, trials - start)
        masks = rng.random((m, w.size)) < rho_eff
        hits += int(np.count_nonzero(masks @ w2 >= need))
    return SubsampleReport(hits / trials, math.sqrt(need), 1.0 - delta,
                           math.sqrt(delta * (1.0 - delta) / trials), trials)


# ------------------------------------------------- tail concentration check


def tail_constant(rho: float, sigma: float, lam: float, alpha_tail: float, eps: float,
                  variant: int = 4) -> float:
    """``(1 - 2 rho sigma) lam log^(1/(1+alpha))(variant/eps) + sqrt(2 log(2/eps))``.

    ``variant`` selects the argument of the first logarithm (4 or 2); both
    occur in the literature for the same statement.
    """
    if variant not in (2, 4):
        raise ValueError("variant must be 2 or 4")
    return ((1.0 - 2.0 * rho * sigma) * lam * math.log(variant / eps) ** (1.0 / (1.0 + alpha_tail))
            + math.sqrt(2.0 * math.log(2.0 / eps)))


@dataclass(frozen=True)
class TailConcentrationReport:
    C: float
    C_alt: float  # the other variant, for reference
    variant: int
    inner_rates: np.ndarray  # per x: fraction of y with |<u_T, y_T>| <= C ||u_T||
    good_fraction: float  # fraction of x whose inner rate clears 1 - eps (within its band)
    eps: float
    half_width: float  # band on good_fraction

    @property
    def passed(self) -> bool:
        return self.good_fraction >= 1.0 - self.eps - self.half_width


def tail_concentration_check(w, T_indices, z, rho: float, sigma: float, lam: float,
                             alpha_tail: float, eps: float, trials: int = 200, inner: int = 2000,
                             seed=None, marginal=None, variant: int = 4,
                             level: float = DEFAULT_LEVEL) -> TailConcentrationReport:
    """Two-level check: for at least ``1 - eps`` of x, ``|<u_T, y_T>| <= C ||u_T||_2``
    holds for at least ``1 - eps`` of ``y ~ N_{1-rho}(z)``, where ``u = w * x``."""
    w = np.asarray(w, dtype=np.float64)
    z = check_bits(z)
    T = np.asarray(T_indices, dtype=np.int64)
    if z.shape != w.shape:
        raise ValueError("w and z must have the same length")
    marginal = ProductDistribution.uniform(w.size) if marginal is None else as_distribution(marginal)
    C = tail_constant(rho, sigma, lam, alpha_tail, eps, variant)
    C_alt = tail_constant(rho, sigma, lam, alpha_tail, eps, 6 - variant)
    rng = make_rng(seed)
    wT = w[T]
    norm = float(np.linalg.norm(wT))  # ||u_T|| = ||w_T|| on the cube
    rates = np.ones(trials)
    if norm > 0:
        X = marginal.sample(trials, rng)[:, T].astype(np.float64)
        mu_T = ProductDistribution.bitflip(T.size, sigma)
        for k in range(trials):
            Y = noisy_copy(np.broadcast_to(z[T], (inner, T.size)), 1.0 - rho, mu_T, rng)
            rates[k] = np.mean(np.abs(Y @ (wT * X[k])) <= C * norm)
    q = normal_quantile(level)
    inner_hw = q * math.sqrt(eps * (1 - eps) / inner)
    good = float(np.mean(rates >= 1.0 - eps - inner_hw))
    outer_hw = q * math.sqrt(eps * (1 - eps) / trials)
    return TailConcentrationReport(C, C_alt, variant, rates, good, eps, outer_hw)
