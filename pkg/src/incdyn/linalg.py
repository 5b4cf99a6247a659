"""Dense triangular kernels used by the recursive estimators.

The convention throughout is an upper-triangular factor R with strictly
positive diagonal, so that A = R.T @ R. `cholesky_rank1_update` keeps such a
factor current after a symmetric rank-1 addition in O(b**2) time via a sweep
of Givens rotations, which is what makes per-sample estimator updates
independent of how many samples came before.
"""

import math

import numpy as np
from scipy.linalg import solve_triangular

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None


def givens_coefficients(a, b):
    """Rotation coefficients (c, s) that zero b against a.

    Applied as [[c, s], [-s, c]] to the column vector (a, b), the rotation
    yields (r, 0) with r = sqrt(a**2 + b**2) >= 0. The sign convention keeps
    r non-negative so factor diagonals stay positive. The degenerate input
    (0, 0) returns the identity rotation (1, 0).
    """
    r = math.hypot(a, b)
    if r == 0.0:
        return 1.0, 0.0
    return a / r, b / r


def _rank1_sweep(R, z):
    # Zero z left to right; the rotation for column k only touches the
    # suffix k..b of row k of R and of z. Destroys z.
    b = R.shape[0]
    for k in range(b):
        rkk = R[k, k]
        zk = z[k]
        r = math.hypot(rkk, zk)
        if r == 0.0:
            continue
        c = rkk / r
        s = zk / r
        R[k, k] = r
        for j in range(k + 1, b):
            rkj = R[k, j]
            zj = z[j]
            R[k, j] = c * rkj + s * zj
            z[j] = c * zj - s * rkj


def _rank1_sweep_numpy(R, z):
    # Vectorized fallback when numba is unavailable; same sweep, row slices.
    b = R.shape[0]
    for k in range(b):
        r = math.hypot(R[k, k], z[k])
        if r == 0.0:
            continue
        c = R[k, k] / r
        s = z[k] / r
        R[k, k] = r
        if k + 1 < b:
            row = R[k, k + 1:].copy()
            tail = z[k + 1:]
            R[k, k + 1:] = c * row + s * tail
            z[k + 1:] = c * tail - s * row


if njit is not None:
    _rank1_sweep = njit(cache=True)(_rank1_sweep)
else:  # pragma: no cover
    _rank1_sweep = _rank1_sweep_numpy


def cholesky_rank1_update(R, z, overwrite=False):
    """Return R' with R'.T @ R' = R.T @ R + outer(z, z).

    Parameters
    ----------
    R : (b, b) array, upper triangular with strictly positive diagonal.
    z : (b,) array, the row to absorb. A zero row is a no-op.
    overwrite : bool
        If True, update R in place (R must be float64 and C-contiguous for
        the in-place path to avoid a copy). z is never modified.

    The updated factor always exists and keeps a strictly positive diagonal,
    since R.T @ R + outer(z, z) is positive definite whenever R.T @ R is.
    """
    if overwrite:
        out = np.ascontiguousarray(R, dtype=np.float64)
    else:
        out = np.array(R, dtype=np.float64, order="C")
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ValueError("R must be square")
    if not (np.diagonal(out) > 0.0).all():
        raise ValueError("factor diagonal must be strictly positive")
    work = np.array(z, dtype=np.float64).ravel()
    if work.shape[0] != out.shape[0]:
        raise ValueError("z length does not match factor dimension")
    _rank1_sweep(out, work)
    return out


def solve_two_triangular(R, B):
    """Solve (R.T @ R) @ W = B by forward then back substitution.

    R is upper triangular with positive diagonal; B has shape (b, t) or (b,).
    Cost is O(b**2 * t).
    """
    v = solve_triangular(R, B, trans="T", lower=False, check_finite=False)
    return solve_triangular(R, v, trans="N", lower=False, check_finite=False)
