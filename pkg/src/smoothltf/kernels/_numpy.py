"""Pure-numpy versions of the hot kernels.

Cube index convention shared with the numba twins: point ``k`` of
``{-1,+1}^n`` has ``x_i = -1`` iff bit ``i`` of ``k`` is set.
"""

import numpy as np


def ltf_signs(X, w, theta, tol):
    margins = X @ w - theta
    return np.where(margins >= -tol, 1, -1).astype(np.int8)


def product_law(p_minus):
    probs = np.ones(1)
    for p in p_minus:
        probs = np.concatenate((probs * (1.0 - p), probs * p))
    return probs


def noise_transform(table, keep, p_minus):
    out = np.array(table, dtype=np.float64, copy=True)
    for i, p in enumerate(p_minus):
        view = out.reshape(-1, 2, 1 << i)
        mean = (1.0 - p) * view[:, 0, :] + p * view[:, 1, :]
        view *= keep
        view += (1.0 - keep) * mean[:, None, :]
    return out


def subset_sums(u):
    sums = np.zeros(1)
    for ui in u:
        sums = np.concatenate((sums + ui, sums - ui))
    return sums


def _bits(n):
    k = np.arange(1 << n)
    return ((k[:, None] >> np.arange(n)) & 1).astype(bool)


def pair_disagreement(ftable, p_minus, keep, block=64):
    n = len(p_minus)
    bits = _bits(n)
    mu = product_law(p_minus)
    # resample probability of landing on y_i, per point and coordinate
    resample = np.where(bits, p_minus, 1.0 - p_minus) * (1.0 - keep)
    total = 0.0
    for start in range(0, 1 << n, block):
        xb = bits[start:start + block]
        same = xb[:, None, :] == bits[None, :, :]
        kern = np.prod(resample[None, :, :] + keep * same, axis=2)
        differ = ftable[start:start + block, None] != ftable[None, :]
        total += np.sum(mu[start:start + block] * np.sum(kern * differ, axis=1))
    return total


def flip_error_rates(U, theta, y, sigma, tol, block=2048):
    m, n = U.shape
    pts = np.where(_bits(n), -1.0, 1.0)
    law = product_law(np.full(n, sigma))
    out = np.empty(m)
    for start in range(0, m, block):
        margins = U[start:start + block] @ pts.T - theta
        signs = np.where(margins >= -tol, 1, -1)
        wrong = signs != y[start:start + block, None]
        out[start:start + block] = wrong @ law
    return out


def monomial_features(X, parent, var):
    m = X.shape[0]
    M = len(parent)
    F = np.empty((m, M))
    Xf = X.astype(np.float64)
    for j in range(M):
        if parent[j] < 0:
            F[:, j] = 1.0
        else:
            F[:, j] = F[:, parent[j]] * Xf[:, var[j]]
    return F
