"""Polynomial approximators and probabilistic inequalities: Taylor truncations of
``e^x``, Chebyshev approximators of ``e^-x``, a tilting moment, Berry-Esseen
gaps of Rademacher sums, sub-exponential moment and MGF bounds, and the
rerandomized form of the noisy-copy channel."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from scipy import integrate, special, stats

from . import kernels
from .analysis import DEFAULT_LEVEL
from .cube import ConfigurationError, ProductDistribution, check_bits, noisy_copy_law, point_index
from .rng import make_rng

BERRY_ESSEEN_CAP = 24


# ------------------------------------------------------------------ polynomials


@dataclass(frozen=True, eq=False)
class DensePolynomial:
    """``sum_i coeffs[i] x^i``; trailing zeros are stripped (the zero polynomial is ``[0]``)."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=np.float64))
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1 if np.any(self.coeffs) else 0

    def __call__(self, x):
        out = np.zeros_like(np.asarray(x, dtype=np.float64))
        for c in self.coeffs[::-1]:
            out = out * x + c
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, DensePolynomial) and np.array_equal(self.coeffs, other.coeffs)

    def to_text(self) -> str:
        """One ``power coefficient`` pair per line, coefficients in full precision."""
        return "".join(f"{i} {c!r}\n" for i, c in enumerate(self.coeffs.tolist()))


@dataclass(frozen=True)
class TailProfile:
    lam: float
    alpha_tail: float

    def __post_init__(self):
        if self.lam <= 0 or self.alpha_tail <= 0:
            raise ConfigurationError("lam and alpha_tail must be positive")

    def survival_bound(self, t):
        return 2.0 * np.exp(-(np.asarray(t, dtype=np.float64) / self.lam) ** (1.0 + self.alpha_tail))


def taylor_exp(k: int) -> DensePolynomial:
    """Degree ``k - 1`` Taylor polynomial of ``e^x`` at 0."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return DensePolynomial(np.array([1.0 / math.factorial(i) for i in range(k)]))


def taylor_remainder_bound(x, k: int):
    """``e^|x| |x|^k / k!``, which dominates ``|p_k(x) - e^x|``."""
    ax = np.abs(np.asarray(x, dtype=np.float64))
    return np.exp(ax) * ax**k / math.factorial(k)


# ------------------------------------------------------------ e^-x on [0, T]


class DegreeCapExceeded(RuntimeError):
    def __init__(self, message, errors):
        super().__init__(message)
        self.errors = errors  # sup error per tried degree


@dataclass(frozen=True)
class ExpApprox:
    T: float
    eps: float
    degree: int
    sup_error: float
    cheb: Chebyshev
    poly: DensePolynomial  # monomial coefficients in x
    errors: np.ndarray  # sup error of every degree tried, 0..degree

    @property
    def max_coeff(self) -> float:
        return float(np.max(np.abs(self.poly.coeffs)))

    @property
    def coeff_exponent(self) -> float:
        """Fitted ``C`` in ``max |c_i| = exp(C sqrt(T log(1/eps)))``."""
        return math.log(max(self.max_coeff, 1.0)) / math.sqrt(self.T * math.log(1.0 / self.eps))


def exp_neg_chebyshev_coeffs(T: float, m: int) -> np.ndarray:
    """Chebyshev coefficients of ``e^-x`` on [0, T] up to degree ``m``.

    With ``x = T(t+1)/2``, ``e^-x = e^(-T/2) e^(-(T/2) t)`` and the expansion of
    ``e^(a t)`` has coefficients ``(2 - [k=0]) I_k(a)``; ``ive`` folds in the scale.
    """
    k = np.arange(m + 1)
    c = 2.0 * (-1.0) ** k * special.ive(k, T / 2.0)
    c[0] /= 2.0
    return c


def sup_grid(T: float, points: int = 10_000) -> np.ndarray:
    return np.linspace(0.0, T, points + 1)


def exp_neg_approx(T: float, eps: float, max_degree: int = 400, grid_points: int = 10_000) -> ExpApprox:
    """Shortest truncated Chebyshev expansion of ``e^-x`` on [0, T] with grid sup error <= eps.

    The error is measured on ``grid_points + 1`` equispaced points including
    both endpoints, evaluated in the Chebyshev form (the monomial form is
    ill-conditioned for large ``T``).
    """
    if T <= 0 or not 0 < eps < 1:
        raise ValueError("need T > 0 and eps in (0, 1)")
    x = sup_grid(T, grid_points)
    target = np.exp(-x)
    full = exp_neg_chebyshev_coeffs(T, max_degree)
    errors = []
    for m in range(max_degree + 1):
        cheb = Chebyshev(full[: m + 1], domain=[0.0, T])
        errors.append(float(np.max(np.abs(cheb(x) - target))))
        if errors[-1] <= eps:
            mono = cheb.convert(kind=Polynomial, domain=[-1.0, 1.0], window=[-1.0, 1.0])
            return ExpApprox(T, eps, m, errors[-1], cheb, DensePolynomial(mono.coef), np.array(errors))
    raise DegreeCapExceeded(f"no degree <= {max_degree} reaches sup error {eps:g} on [0, {T:g}] "
                            f"(best {min(errors):.3e})", np.array(errors))


# ----------------------------------------------------------------- tilting


@dataclass(frozen=True)
class TiltingMoment:
    b: float
    value: float  # exact closed form of the integral
    quadrature: float
    quad_error: float  # estimate reported by the integrator
    intermediate: float  # (e^(b+1/4) + e^(-b+1/4)) / sqrt(pi), an upper bound
    bound: float  # C e^|b| with C = 2 e^(1/4) / sqrt(pi)


TILTING_C = 2.0 * math.exp(0.25) / math.sqrt(math.pi)


def _tilting_integrand(s, b):
    return math.exp(-((s - b) ** 2) + abs(s)) / math.pi


def tilting_second_moment(b: float) -> TiltingMoment:
    """``E_{s~Q}[(N(s; b, 1) / Q(s))^2]`` for the Laplace density ``Q(s) = e^-|s| / 2``.

    The integrand is ``e^(-(s-b)^2 + |s|) / pi``. Splitting at 0 and completing
    the square on each half line gives
    ``(e^(b+1/4) erfc(-(b+1/2)) + e^(-b+1/4) erfc(b-1/2)) / (2 sqrt(pi))``.
    Extending both halves to the whole line drops the erfc factors and gives the
    larger ``(e^(b+1/4) + e^(-b+1/4)) / sqrt(pi)``.
    """
    b = float(b)
    value = (math.exp(b + 0.25) * special.erfc(-(b + 0.5))
             + math.exp(-b + 0.25) * special.erfc(b - 0.5)) / (2.0 * math.sqrt(math.pi))
    total, err = 0.0, 0.0
    # peaks sit at b + 1/2 (right half) and b - 1/2 (left half)
    for lo, hi in ((-np.inf, 0.0), (0.0, np.inf)):
        centre = b - 0.5 if hi == 0.0 else b + 0.5
        if lo < centre < hi:
            parts = [(lo, centre), (centre, hi)]
        else:
            parts = [(lo, hi)]
        for a, c in parts:
            v, e = integrate.quad(_tilting_integrand, a, c, args=(b,), epsabs=0.0, epsrel=1e-13,
                                  limit=200)
            total += v
            err += e
    if not np.isfinite(total):
        raise ArithmeticError(f"quadrature did not converge at b={b}")
    intermediate = (math.exp(b + 0.25) + math.exp(-b + 0.25)) / math.sqrt(math.pi)
    return TiltingMoment(b, value, total, err, intermediate, TILTING_C * math.exp(abs(b)))


# ---------------------------------------------------------------- Berry-Esseen


@dataclass(frozen=True)
class BerryEsseenReport:
    gap: float
    lyapunov: float  # ||u||_3^3 / ||u||_2^3
    method: str
    half_width: float = 0.0  # DKW band for the Monte Carlo path

    @property
    def ratio(self) -> float:
        return self.gap / self.lyapunov


def cdf_gap(atoms, probs) -> float:
    """``sup_x |F(x) - Phi(x)|`` for a finite law; checked on both sides of every atom."""
    order = np.argsort(atoms, kind="stable")
    a = np.asarray(atoms, dtype=np.float64)[order]
    p = np.asarray(probs, dtype=np.float64)[order]
    uniq, start = np.unique(a, return_index=True)
    F = np.cumsum(p)
    F_right = F[np.r_[start[1:] - 1, a.size - 1]]
    F_left = np.r_[0.0, F_right[:-1]]
    phi = special.ndtr(uniq)
    return float(max(np.max(np.abs(F_right - phi)), np.max(np.abs(F_left - phi))))


def berry_esseen_gap(u, mode: str = "exact", budget: int = 200_000, seed=None,
                     level: float = DEFAULT_LEVEL, cap: int = BERRY_ESSEEN_CAP) -> BerryEsseenReport:
    """Kolmogorov distance between ``<u, eps> / ||u||_2`` (Rademacher ``eps``) and N(0, 1)."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 1 or not np.any(u):
        raise ValueError("u must be a nonzero vector")
    norm2 = float(np.linalg.norm(u))
    lyapunov = float(np.sum(np.abs(u) ** 3) / norm2**3)
    if mode == "exact":
        if u.size > cap:
            raise ValueError(f"exact mode supports n <= {cap}, got n={u.size}")
        sums = kernels.subset_sums(u / norm2)
        return BerryEsseenReport(cdf_gap(sums, np.full(sums.size, 1.0 / sums.size)), lyapunov, "exact")
    if mode == "mc":
        rng = make_rng(seed)
        S = np.empty(budget)
        chunk = max(1, 4_000_000 // u.size)
        for lo in range(0, budget, chunk):
            m = min(chunk, budget - lo)
            eps = 1.0 - 2.0 * (rng.random((m, u.size)) < 0.5)
            S[lo:lo + m] = eps @ (u / norm2)
        hw = math.sqrt(math.log(2.0 / (1.0 - level)) / (2.0 * budget))
        return BerryEsseenReport(cdf_gap(S, np.full(budget, 1.0 / budget)), lyapunov, "monte-carlo", hw)
    raise ValueError(f"unknown mode {mode!r}")


# ------------------------------------------------------- sub-exponential bounds


def moment_bound_gamma(k: float, profile: TailProfile) -> float:
    """``2 k lam^k / (1+alpha) * Gamma(k / (1+alpha))``: the layer-cake integral of the tail bound."""
    x = k / (1.0 + profile.alpha_tail)
    return float(2.0 * k * profile.lam**k / (1.0 + profile.alpha_tail) * special.gamma(x))


def moment_bound(k: float, profile: TailProfile) -> float:
    """``C lam^k x^(x+1/2) e^(-x + 1/(12x))`` with ``x = k/(1+alpha)`` and ``C = 2 sqrt(2 pi)``.

    This is the Gamma form after Stirling's upper bound
    ``Gamma(x) <= sqrt(2 pi) x^(x-1/2) e^(-x + 1/(12x))``.
    """
    x = k / (1.0 + profile.alpha_tail)
    return float(2.0 * math.sqrt(2.0 * math.pi) * profile.lam**k
                 * x ** (x + 0.5) * math.exp(-x + 1.0 / (12.0 * x)))


def mgf_bound(a: float, profile: TailProfile) -> float:
    """``3 exp(2^(1/alpha) (a lam)^(1 + 1/alpha))``."""
    al = profile.alpha_tail
    return float(3.0 * math.exp(2.0 ** (1.0 / al) * (a * profile.lam) ** (1.0 + 1.0 / al)))


@dataclass(frozen=True)
class BoundCheck:
    empirical: float
    half_width: float  # 0 for exact (weighted) laws
    bound: float

    @property
    def passed(self) -> bool:
        return self.empirical - self.half_width <= self.bound

    @property
    def slack_ratio(self) -> float:
        return self.empirical / self.bound


def _weighted_mean(values, weights, level):
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("need at least one sample")
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != values.shape or np.any(w < 0) or not np.isclose(w.sum(), 1.0):
            raise ValueError("weights must be a probability vector matching the samples")
        return float(w @ values), 0.0
    sd = values.std(ddof=1) if values.size > 1 else 0.0
    q = stats.norm.ppf(0.5 + level / 2.0)
    return float(values.mean()), float(q * sd / math.sqrt(values.size))


def subexp_moment_check(samples, k: int, profile: TailProfile, weights=None,
                        level: float = DEFAULT_LEVEL) -> BoundCheck:
    """Empirical (or exact, with ``weights``) ``E|x|^k`` against :func:`moment_bound`."""
    if k < 1:
        raise ValueError("k must be at least 1")
    m, hw = _weighted_mean(np.abs(np.asarray(samples, dtype=np.float64)) ** k, weights, level)
    return BoundCheck(m, hw, moment_bound(k, profile))


def subexp_mgf_check(samples, a: float, profile: TailProfile, weights=None,
                     level: float = DEFAULT_LEVEL) -> BoundCheck:
    """Empirical (or exact) ``E e^(a|x|)`` against :func:`mgf_bound`."""
    if a <= 0:
        raise ValueError("a must be positive")
    m, hw = _weighted_mean(np.exp(a * np.abs(np.asarray(samples, dtype=np.float64))), weights, level)
    return BoundCheck(m, hw, mgf_bound(a, profile))


def rademacher_average_law(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact law of ``(eps_1 + ... + eps_m) / sqrt(m)``: a bounded, sub-Gaussian proxy."""
    j = np.arange(m + 1)
    return (2.0 * j - m) / math.sqrt(m), stats.binom.pmf(j, m, 0.5)


# ------------------------------------------------------------ rerandomization


@dataclass(frozen=True)
class RerandomizedDraw:
    l: np.ndarray  # noqa: E741
    m: np.ndarray
    eps: np.ndarray
    y: np.ndarray


def _check_rerandomize(rho, sigma):
    if not 0.0 <= rho <= 1.0 or not 0.0 <= sigma <= 1.0:
        raise ConfigurationError("rho and sigma must lie in [0, 1]")
    if sigma > 0.5:
        raise ConfigurationError("the decomposition needs m ~ Bernoulli(2 sigma), so sigma <= 1/2")


def assemble(z, l, m, eps):  # noqa: E741
    """``y_i = (1 - l_i) z_i + l_i (1 - m_i) + l_i m_i eps_i``."""
    return ((1 - l) * z + l * (1 - m) + l * m * eps).astype(np.int8)


def rerandomize(z, rho: float, sigma: float, seed=None) -> RerandomizedDraw:
    """Draw the masks ``l ~ Bern(rho)``, ``m ~ Bern(2 sigma)`` and signs ``eps`` and assemble ``y``."""
    _check_rerandomize(rho, sigma)
    z = check_bits(z)
    rng = make_rng(seed)
    l = (rng.random(z.shape) < rho).astype(np.int8)  # noqa: E741
    m = (rng.random(z.shape) < 2.0 * sigma).astype(np.int8)
    eps = np.where(rng.random(z.shape) < 0.5, -1, 1).astype(np.int8)
    return RerandomizedDraw(l, m, eps, assemble(z.astype(np.int8), l, m, eps))


def rerandomize_law(z, rho: float, sigma: float) -> np.ndarray:
    """Exact law of ``y`` in cube index order, by enumerating every ``(l, m, eps)``."""
    _check_rerandomize(rho, sigma)
    z = check_bits(z)
    n = z.size
    if n > 6:
        raise ValueError("joint enumeration is limited to n <= 6")
    law = np.zeros(1 << n)
    for l in product((0, 1), repeat=n):  # noqa: E741
        pl = np.prod([rho if b else 1 - rho for b in l])
        if pl == 0:
            continue
        for m in product((0, 1), repeat=n):
            pm = np.prod([2 * sigma if b else 1 - 2 * sigma for b in m])
            if pm == 0:
                continue
            for eps in product((-1, 1), repeat=n):
                y = assemble(z, np.array(l), np.array(m), np.array(eps))
                law[point_index(y)] += pl * pm * 0.5**n
    return law


def resample_channel_law(z, rho: float, sigma: float) -> np.ndarray:
    """Law of ``y_i = z_i`` w.p. ``1 - rho``, else a fresh ``N_sigma`` draw."""
    z = check_bits(z)
    return noisy_copy_law(z, 1.0 - rho, ProductDistribution.bitflip(z.size, sigma))


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def conditional_law(z, rho: float, sigma: float, l, m) -> np.ndarray:  # noqa: E741
    """Exact law of ``y_S`` on ``S = {i : l_i m_i = 1}`` given the masks, as a ``2^|S|`` table."""
    _check_rerandomize(rho, sigma)
    z = check_bits(z)
    l = np.asarray(l)  # noqa: E741
    m = np.asarray(m)
    S = np.flatnonzero(l * m)
    law = np.zeros(1 << S.size)
    for eps in product((-1, 1), repeat=z.size):
        y = assemble(z, l, m, np.array(eps))
        law[point_index(y[S]) if S.size else 0] += 0.5**z.size
    return law


def conditional_uniformity_pvalue(z, rho: float, sigma: float, draws: int = 20_000, bins: int = 20,
                                  seed=None) -> float:
    """Chi-square p-value for ``y_S`` being uniform on ``{-1,1}^S`` given ``(l, m)``.

    Each draw's ``y_S`` is mapped to its cube index ``j`` and then to
    ``(j + U) / 2^|S|`` with ``U`` uniform; under the hypothesis this is exactly
    Uniform(0, 1) whatever the masks, so all draws pool into one test.
    """
    _check_rerandomize(rho, sigma)
    z = check_bits(z)
    rng = make_rng(seed)
    shape = (draws, z.size)
    l = (rng.random(shape) < rho).astype(np.int8)  # noqa: E741
    m = (rng.random(shape) < 2.0 * sigma).astype(np.int8)
    eps = np.where(rng.random(shape) < 0.5, -1, 1).astype(np.int8)
    y = assemble(z.astype(np.int8), l, m, eps)
    S = (l * m).astype(bool)
    size = S.sum(axis=1)
    # bit of y_i within y_S sits at the rank of i among the selected coordinates
    rank = np.cumsum(S, axis=1) - 1
    j = np.sum(np.where(S & (y == -1), 1 << np.maximum(rank, 0), 0), axis=1)
    keep = size > 0
    vals = (j[keep] + rng.random(int(keep.sum()))) / (1 << size[keep])
    if vals.size < 5 * bins:
        raise ValueError("too few draws with a nonempty resampled set")
    counts = np.histogram(vals, bins=bins, range=(0.0, 1.0))[0]
    return float(stats.chisquare(counts).pvalue)
