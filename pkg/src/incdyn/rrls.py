"""Recursive regularized least squares (ridge regression) for streams.

The estimator keeps the upper Cholesky factor R of A = Z.T @ Z + lam * I and
the cross-product B = Z.T @ U instead of a covariance inverse, which is the
numerically stable route (the QR algorithm of adaptive filtering). A row
update costs O(b**2) no matter how many samples have been absorbed; the
weight matrix is re-solved lazily, only when a prediction needs it.
"""

import math

import numpy as np
from scipy import linalg as sla

from .linalg import cholesky_rank1_update, solve_two_triangular


class RecursiveRidge:
    """Multi-output ridge regression fitted one supervised row at a time.

    Parameters
    ----------
    input_dim : int
        Number of input features b.
    output_dim : int
        Number of targets t.
    lam : float
        Tikhonov regularization, strictly positive (the factor starts at
        sqrt(lam) * I and would not exist otherwise).
    """

    def __init__(self, input_dim, output_dim, lam):
        input_dim = int(input_dim)
        output_dim = int(output_dim)
        if input_dim < 1 or output_dim < 1:
            raise ValueError("input_dim and output_dim must be positive")
        lam = float(lam)
        if not lam > 0.0:
            raise ValueError("regularization lam must be strictly positive")
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.lam = lam
        self.r_factor = math.sqrt(lam) * np.eye(input_dim)
        self.cross = np.zeros((input_dim, output_dim))
        self.samples_seen = 0
        self._weights = np.zeros((input_dim, output_dim))
        self._stale = False

    @classmethod
    def from_state(cls, r_factor, cross, lam, samples_seen):
        """Rebuild an estimator from persisted (R, B) state."""
        r_factor = np.array(r_factor, dtype=float)
        cross = np.array(cross, dtype=float)
        est = cls(r_factor.shape[0], cross.shape[1], lam)
        est.r_factor = r_factor
        est.cross = cross
        est.samples_seen = int(samples_seen)
        est._stale = True
        return est

    def update(self, z, u):
        """Absorb one supervised row (z, u); marks the weights stale.

        Rejects non-finite or mis-sized samples before touching any state.
        """
        z = np.asarray(z, dtype=float).ravel()
        u = np.asarray(u, dtype=float).ravel()
        if z.shape[0] != self.input_dim:
            raise ValueError(
                f"expected input of length {self.input_dim}, got {z.shape[0]}")
        if u.shape[0] != self.output_dim:
            raise ValueError(
                f"expected target of length {self.output_dim}, got {u.shape[0]}")
        if not (np.isfinite(z).all() and np.isfinite(u).all()):
            raise ValueError("sample contains non-finite entries")
        cholesky_rank1_update(self.r_factor, z, overwrite=True)
        self.cross += np.outer(z, u)
        self.samples_seen += 1
        self._stale = True

    def update_block(self, Z, u):
        """Absorb a regressor block as successive scalar-target row updates.

        Row i of Z is paired with component i of u, so a t-row regressor of a
        t-output physical sample turns into t scalar equations sharing one
        weight vector. Only valid on a scalar-output estimator; accumulation
        order is identical to calling `update` row by row.
        """
        if self.output_dim != 1:
            raise ValueError("update_block requires a scalar-output estimator")
        Z = np.asarray(Z, dtype=float)
        u = np.asarray(u, dtype=float).ravel()
        if Z.ndim != 2 or Z.shape[1] != self.input_dim:
            raise ValueError("block shape does not match input_dim")
        if Z.shape[0] != u.shape[0]:
            raise ValueError("block rows and target length differ")
        for i in range(Z.shape[0]):
            self.update(Z[i], u[i:i + 1])

    def solve(self):
        """Return the weight matrix W with (R.T @ R) @ W = B, re-solving if stale."""
        if self._stale:
            self._weights = solve_two_triangular(self.r_factor, self.cross)
            self._stale = False
        return self._weights

    def predict(self, z):
        """Predict the target row for input row z (solves first if stale)."""
        z = np.asarray(z, dtype=float).ravel()
        if z.shape[0] != self.input_dim:
            raise ValueError(
                f"expected input of length {self.input_dim}, got {z.shape[0]}")
        return z @ self.solve()


def batch_ridge(Z, U, lam):
    """Closed-form regularized solution (Z.T @ Z + lam * I)^-1 @ Z.T @ U.

    The equivalence oracle for the recursive path; O(n b**2 + b**3), so batch
    use only. Empty data (n = 0) gives the zero solution.
    """
    lam = float(lam)
    if not lam > 0.0:
        raise ValueError("regularization lam must be strictly positive")
    Z = np.asarray(Z, dtype=float)
    U = np.asarray(U, dtype=float)
    if Z.ndim != 2:
        raise ValueError("Z must be a 2-d sample matrix")
    b = Z.shape[1]
    A = Z.T @ Z + lam * np.eye(b)
    return sla.solve(A, Z.T @ U, assume_a="pos")
