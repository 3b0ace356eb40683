"""Numba-compiled twins of :mod:`smoothltf.kernels._numpy`.

Signatures and cube index order match the numpy versions exactly; the test
suite checks the two backends against each other.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def ltf_signs(X, w, theta, tol):
    m, n = X.shape
    out = np.empty(m, dtype=np.int8)
    for r in range(m):
        acc = 0.0
        for i in range(n):
            acc += w[i] * X[r, i]
        out[r] = 1 if acc - theta >= -tol else -1
    return out


@njit(cache=True)
def product_law(p_minus):
    n = p_minus.shape[0]
    probs = np.empty(1 << n)
    probs[0] = 1.0
    size = 1
    for i in range(n):
        p = p_minus[i]
        for k in range(size):
            v = probs[k]
            probs[k] = v * (1.0 - p)
            probs[k + size] = v * p
        size <<= 1
    return probs


@njit(cache=True)
def noise_transform(table, keep, p_minus):
    out = table.astype(np.float64).copy()
    n = p_minus.shape[0]
    N = out.shape[0]
    for i in range(n):
        p = p_minus[i]
        step = 1 << i
        for k in range(N):
            if k & step:
                continue
            a = out[k]
            b = out[k + step]
            mean = (1.0 - p) * a + p * b
            out[k] = keep * a + (1.0 - keep) * mean
            out[k + step] = keep * b + (1.0 - keep) * mean
    return out


@njit(cache=True)
def subset_sums(u):
    n = u.shape[0]
    sums = np.empty(1 << n)
    sums[0] = 0.0
    size = 1
    for i in range(n):
        ui = u[i]
        for k in range(size):
            v = sums[k]
            sums[k] = v + ui
            sums[k + size] = v - ui
        size <<= 1
    return sums


@njit(cache=True)
def pair_disagreement(ftable, p_minus, keep):
    n = p_minus.shape[0]
    N = 1 << n
    mu = product_law(p_minus)
    stay = np.empty((n, 2))
    move = np.empty((n, 2))
    for i in range(n):
        # stay[i, b]: P[y_i = x_i] when x_i has bit b; move: P[y_i != x_i]
        stay[i, 0] = keep + (1.0 - keep) * (1.0 - p_minus[i])
        stay[i, 1] = keep + (1.0 - keep) * p_minus[i]
        move[i, 0] = (1.0 - keep) * p_minus[i]
        move[i, 1] = (1.0 - keep) * (1.0 - p_minus[i])
    total = 0.0
    for x in range(N):
        fx = ftable[x]
        inner = 0.0
        for yy in range(N):
            if ftable[yy] == fx:
                continue
            k = 1.0
            diff = x ^ yy
            for i in range(n):
                b = (x >> i) & 1
                if (diff >> i) & 1:
                    k *= move[i, b]
                else:
                    k *= stay[i, b]
            inner += k
        total += mu[x] * inner
    return total


@njit(cache=True)
def flip_error_rates(U, theta, y, sigma, tol):
    m, n = U.shape
    N = 1 << n
    law = product_law(np.full(n, sigma))
    out = np.empty(m)
    for r in range(m):
        acc = 0.0
        for k in range(N):
            s = 0.0
            for i in range(n):
                if (k >> i) & 1:
                    s -= U[r, i]
                else:
                    s += U[r, i]
            sign = 1 if s - theta >= -tol else -1
            if sign != y[r]:
                acc += law[k]
        out[r] = acc
    return out


@njit(cache=True)
def monomial_features(X, parent, var):
    m = X.shape[0]
    M = parent.shape[0]
    F = np.empty((m, M))
    for r in range(m):
        for j in range(M):
            if parent[j] < 0:
                F[r, j] = 1.0
            else:
                F[r, j] = F[r, parent[j]] * X[r, var[j]]
    return F
