"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is fixed at import time. Set ``SMOOTHLTF_DISABLE_NUMBA=1`` to force
the numpy implementations (they are also used when numba is not importable).
Both implementations stay importable as ``kernels.numpy_impl`` and
``kernels.numba_impl`` so they can be compared directly.
"""

import os

import numpy as np

from . import _numpy as numpy_impl

try:
    from . import _numba as numba_impl
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba_impl = None

_disabled = os.environ.get("SMOOTHLTF_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

if numba_impl is not None and not _disabled:
    BACKEND = "numba"
    _impl = numba_impl
else:
    BACKEND = "numpy"
    _impl = numpy_impl

__all__ = [
    "BACKEND",
    "flip_error_rates",
    "ltf_signs",
    "monomial_features",
    "noise_transform",
    "pair_disagreement",
    "product_law",
    "subset_sums",
]


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def ltf_signs(X, w, theta, tol=0.0):
    """Labels ``sign(<w, x> - theta)`` for each row of ``X``; margins >= -tol map to +1."""
    return _impl.ltf_signs(_f64(X), _f64(w), float(theta), float(tol))


def product_law(p_minus):
    """Probability of every cube point under independent coordinates with P[x_i=-1]=p_minus[i]."""
    return _impl.product_law(_f64(p_minus))


def noise_transform(table, keep, p_minus):
    """Apply the noise operator to a full table: ``out[z] = E[table[y]]``, y a ``keep``-noisy copy of z."""
    return _impl.noise_transform(_f64(table), float(keep), _f64(p_minus))


def subset_sums(u):
    """``<u, x>`` for every cube point ``x``, in cube index order."""
    return _impl.subset_sums(_f64(u))


def pair_disagreement(ftable, p_minus, keep):
    """``P[f(x) != f(y)]`` for x from the product law and y a ``keep``-noisy copy of x (O(4^n))."""
    return _impl.pair_disagreement(_f64(ftable), _f64(p_minus), float(keep))


def flip_error_rates(U, theta, y, sigma, tol=0.0):
    """Per row r: exact ``P_z[sign(<U[r], z> - theta) != y[r]]`` with z_i = -1 w.p. ``sigma``."""
    return _impl.flip_error_rates(_f64(U), float(theta), np.ascontiguousarray(y, dtype=np.int64),
                                  float(sigma), float(tol))


def monomial_features(X, parent, var):
    """Monomial table built column by column: column j = column parent[j] times x[var[j]]."""
    return _impl.monomial_features(_f64(X), np.ascontiguousarray(parent, dtype=np.int64),
                                   np.ascontiguousarray(var, dtype=np.int64))
