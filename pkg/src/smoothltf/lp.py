"""Least-absolute-deviation fitting via a primal-dual interior point method.

``min_c sum_j |y_j - <A_j, c>|`` is the LP ``min sum(s)`` s.t.
``-s <= y - A c <= s``. We iterate on its dual

    max  y^T lam   s.t.  A^T lam = 0,  -1 <= lam <= 1

(written with ``a = lam + 1`` in the box [0, 2]) using Mehrotra's
predictor-corrector. The coefficient vector ``c`` is the multiplier of the
equality constraint. Every iterate yields a certificate: the dual iterate is
projected onto ``{A^T lam = 0}`` and shrunk into the box, so ``y^T lam`` is a
true lower bound on the optimum by weak duality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

STEP_FRACTION = 0.99995


@dataclass
class L1Fit:
    coeffs: np.ndarray
    objective: float  # sum_j |y_j - <A_j, coeffs>|
    lower_bound: float  # certified: the optimum is >= lower_bound
    iterations: int
    polished: bool = False

    @property
    def gap(self) -> float:
        return max(self.objective - self.lower_bound, 0.0)


class L1FitError(RuntimeError):
    """The solver hit its iteration cap; ``best`` holds the best certified iterate."""

    def __init__(self, message: str, best: L1Fit):
        super().__init__(message)
        self.best = best


class _RangeProjector:
    """Projection onto range(B) for a full-column-rank B, via its Gram matrix."""

    def __init__(self, B, factor):
        self.B = B
        self.factor = factor

    def coeffs(self, v):
        return linalg.cho_solve(self.factor, self.B.T @ v, check_finite=False)

    def residual(self, v):
        return v - self.B @ self.coeffs(v)


def _independent_columns(A, rtol=1e-10):
    """Indices of a maximal independent column subset and a projector for it."""
    G = A.T @ A
    try:
        factor = linalg.cho_factor(G, lower=False, check_finite=False)
        d = np.abs(np.diag(factor[0]))
        if d.min() > np.sqrt(rtol) * d.max():
            return np.arange(A.shape[1]), _RangeProjector(A, factor)
    except linalg.LinAlgError:
        pass
    _, R, piv = linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0:
        return np.array([], dtype=int), None
    cols = np.sort(piv[: int(np.sum(diag > rtol * diag[0]))])
    B = A[:, cols]
    return cols, _RangeProjector(B, linalg.cho_factor(B.T @ B, lower=False, check_finite=False))


def _certify(y, lam, proj):
    lam = proj.residual(lam)
    peak = np.max(np.abs(lam)) if lam.size else 0.0
    if peak > 1.0:
        lam = lam / peak
    return float(y @ lam)


def _step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def _polish(A, y, r, c, objective):
    """Move to a basic solution interpolating rank(A) samples of smallest residual."""
    p = A.shape[1]
    order = np.argsort(np.abs(r), kind="stable")
    basis = []
    ortho = np.zeros((0, p))
    for j in order:
        v = A[j]
        res = v - ortho.T @ (ortho @ v)
        nrm = np.linalg.norm(res)
        if nrm > 1e-9 * max(np.linalg.norm(v), 1.0):
            ortho = np.vstack([ortho, res / nrm])
            basis.append(j)
            if len(basis) == p:
                break
    if len(basis) < p:
        return None
    cv = np.linalg.solve(A[basis], y[basis])
    obj = float(np.abs(y - A @ cv).sum())
    if obj <= objective + 1e-12 * max(1.0, objective):
        return cv, obj
    return None


def solve_l1(A, y, tol: float = 1e-8, max_iter: int = 100, polish: bool = True) -> L1Fit:
    """Minimize ``sum |y - A c|`` to relative certified gap ``tol``.

    The stopping rule is ``objective - lower_bound <= tol * max(1, objective)``.
    Rank-deficient ``A`` is reduced to an independent column subset; dropped
    columns get coefficient 0 (the attainable residuals are unchanged).
    """
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError("feature matrix must be N x M with N, M >= 1")
    if y.shape != (A.shape[0],):
        raise ValueError("labels must have one entry per feature row")
    if tol <= 0:
        raise ValueError("tol must be positive")
    N, M = A.shape
    cols, proj = _independent_columns(A)
    full = np.zeros(M)
    if cols.size == 0:
        obj = float(np.abs(y).sum())
        return L1Fit(full, obj, obj, 0)
    B = A[:, cols]

    upper = 2.0
    a = np.ones(N)
    s = upper - a
    beta = proj.coeffs(y)
    c = -beta
    r = y - B @ beta
    kappa = max(1.0, float(np.mean(np.abs(r))))
    z = np.maximum(-r, 0.0) + kappa
    w = np.maximum(r, 0.0) + kappa
    q = -y
    b = B.sum(axis=0)

    best = None
    it = 0
    for it in range(1, max_iter + 1):
        beta = -c
        resid = y - B @ beta
        objective = float(np.abs(resid).sum())
        lower = _certify(y, a - 1.0, proj)
        if best is None or objective - lower < best[1] - best[2]:
            best = (beta.copy(), objective, lower)
        if objective - lower <= tol * max(1.0, objective):
            break

        r_b = b - B.T @ a
        r_c = q - B @ c - z + w
        D = z / a + w / s
        Bs = B / np.sqrt(D)[:, None]
        H = Bs.T @ Bs
        try:
            factor = linalg.cho_factor(H, lower=False, check_finite=False)
            solve = lambda rhs: linalg.cho_solve(factor, rhs, check_finite=False)  # noqa: E731
        except linalg.LinAlgError:
            solve = lambda rhs: np.linalg.lstsq(H, rhs, rcond=None)[0]  # noqa: E731

        def direction(r_az, r_sw):
            g = r_c - r_az / a + r_sw / s
            dc = solve(r_b + B.T @ (g / D))
            da = (B @ dc - g) / D
            dz = (r_az - z * da) / a
            ds = -da
            dw = (r_sw - w * ds) / s
            return dc, da, ds, dz, dw

        mu = (a @ z + s @ w) / (2 * N)
        dc, da, ds, dz, dw = direction(-a * z, -s * w)
        ap = min(_step(a, da), _step(s, ds))
        ad = min(_step(z, dz), _step(w, dw))
        mu_aff = ((a + ap * da) @ (z + ad * dz) + (s + ap * ds) @ (w + ad * dw)) / (2 * N)
        center = (mu_aff / mu) ** 3
        dc, da, ds, dz, dw = direction(center * mu - a * z - da * dz,
                                       center * mu - s * w - ds * dw)
        ap = STEP_FRACTION * min(_step(a, da), _step(s, ds))
        ad = STEP_FRACTION * min(_step(z, dz), _step(w, dw))
        a = a + ap * da
        s = upper - a
        # guard against the box slack collapsing through rounding
        np.clip(s, 1e-300, None, out=s)
        c = c + ad * dc
        z = z + ad * dz
        w = w + ad * dw
    else:
        beta_b, objective, lower = best
        full[cols] = beta_b
        raise L1FitError(f"no certified gap <= {tol:g} within {max_iter} iterations "
                         f"(best gap {objective - lower:.3e})", L1Fit(full, objective, lower, max_iter))

    beta_b, objective, lower = best
    fit = L1Fit(full, objective, lower, it)
    fit.coeffs[cols] = beta_b
    if polish:
        out = _polish(B, y, y - B @ beta_b, beta_b, objective)
        if out is not None:
            cv, obj = out
            coeffs = np.zeros(M)
            coeffs[cols] = cv
            fit = L1Fit(coeffs, obj, lower, it, polished=True)
    return fit
