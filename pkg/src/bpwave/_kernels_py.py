"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and results; used when the extension is not built or when
``BPWAVE_PURE_PYTHON=1`` is set.
"""

import numpy as np


def _thomas(a, b, c, d):
    n = len(d)
    cp = [0.0] * n
    x = [float(v) for v in d]
    cp[0] = c[0] / b[0]
    x[0] = x[0] / b[0]
    for i in range(1, n):
        m = b[i] - a[i] * cp[i - 1]
        cp[i] = c[i] / m
        x[i] = (x[i] - a[i] * x[i - 1]) / m
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x


def cyclic_tridiag_solve(lower, diag, upper, rhs):
    """Solve a periodic tridiagonal system (Sherman-Morrison reduction).

    ``lower[i]`` multiplies ``x[i-1]`` and ``upper[i]`` multiplies ``x[i+1]``
    in row ``i``, indices taken modulo ``n``.
    """
    a = [float(v) for v in lower]
    c = [float(v) for v in upper]
    b = [float(v) for v in diag]
    n = len(b)
    if n < 3:
        raise ValueError("cyclic system needs at least 3 unknowns")
    alpha = c[n - 1]
    beta = a[0]
    gamma = -b[0]
    b[0] -= gamma
    b[n - 1] -= alpha * beta / gamma
    x = _thomas(a, b, c, rhs)
    u = [0.0] * n
    u[0] = gamma
    u[n - 1] = alpha
    z = _thomas(a, b, c, u)
    fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma)
    return np.array([xi - fact * zi for xi, zi in zip(x, z)])


def periodic_cubic_interp(values, x0, dx, xq):
    """Four-point Lagrange interpolation of periodic samples at ``xq``."""
    f = np.asarray(values, dtype=float)
    n = f.shape[0]
    s = (np.atleast_1d(np.asarray(xq, dtype=float)) - x0) / dx
    j = np.floor(s).astype(np.int64)
    t = s - j
    i0 = j % n
    return (
        -t * (t - 1.0) * (t - 2.0) / 6.0 * f[(i0 - 1) % n]
        + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * f[i0]
        - (t + 1.0) * t * (t - 2.0) / 2.0 * f[(i0 + 1) % n]
        + (t + 1.0) * t * (t - 1.0) / 6.0 * f[(i0 + 2) % n]
    )
