"""Thomas elimination for (batched) complex tridiagonal systems."""

import numpy as np

from .exceptions import SolverError

TOL_PIVOT = 1e-13


def thomas_solve(lower, diag, upper, rhs, tol_pivot=TOL_PIVOT):
    """Solve ``T u = rhs`` for tridiagonal ``T`` without pivoting.

    Parameters
    ----------
    lower : array, shape (n - 1, ...)
        Sub-diagonal, ``lower[i] = T[i + 1, i]``.
    diag : array, shape (n, ...)
        Main diagonal.
    upper : array, shape (n - 1, ...)
        Super-diagonal, ``upper[i] = T[i, i + 1]``.
    rhs : array, shape (n, ...)
        Right-hand side(s). Trailing axes are independent systems and must
        broadcast against the trailing axes of the coefficients.
    tol_pivot : float
        A pivot with modulus below ``tol_pivot * max|diag|`` raises
        ``SolverError("SINGULAR_SYSTEM")``.

    Returns
    -------
    u : ndarray, shape of ``rhs`` broadcast with ``diag``
    """
    diag = np.asarray(diag)
    rhs = np.asarray(rhs)
    lower = np.asarray(lower)
    upper = np.asarray(upper)
    n = diag.shape[0]
    dtype = np.result_type(lower, diag, upper, rhs, np.complex128)
    shape = np.broadcast_shapes(diag.shape[1:], rhs.shape[1:])
    scale = np.max(np.abs(diag), axis=0)

    c_prime = np.empty((n,) + np.broadcast_shapes(diag.shape[1:], upper.shape[1:]), dtype=dtype)
    d_prime = np.empty((n,) + shape, dtype=dtype)

    with np.errstate(divide="ignore", invalid="ignore"):
        min_ratio = _eliminate(lower, diag, upper, rhs, c_prime, d_prime, scale)
    if not min_ratio >= tol_pivot:
        raise SolverError("SINGULAR_SYSTEM", f"relative pivot {min_ratio:.3e} below {tol_pivot:.1e}")
    u = d_prime
    for i in range(n - 2, -1, -1):
        u[i] = d_prime[i] - c_prime[i] * u[i + 1]
    return u


def _eliminate(lower, diag, upper, rhs, c_prime, d_prime, scale):
    """Forward sweep in place; returns the smallest relative pivot."""
    n = diag.shape[0]
    min_ratio = np.inf
    piv = diag[0]
    min_ratio = min(min_ratio, np.min(np.abs(piv) / scale))
    c_prime[0] = upper[0] / piv if n > 1 else 0
    d_prime[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - lower[i - 1] * c_prime[i - 1]
        min_ratio = min(min_ratio, np.min(np.abs(piv) / scale))
        if i < n - 1:
            c_prime[i] = upper[i] / piv
        d_prime[i] = (rhs[i] - lower[i - 1] * d_prime[i - 1]) / piv
    return min_ratio


def tridiag_matvec(lower, diag, upper, u):
    """Product ``T u`` with the same band layout as :func:`thomas_solve`."""
    u = np.asarray(u)

    def lift(a):
        a = np.asarray(a)
        return a.reshape(a.shape + (1,) * (u.ndim - a.ndim))

    out = lift(diag) * u
    out[:-1] += lift(upper) * u[1:]
    out[1:] += lift(lower) * u[:-1]
    return out
