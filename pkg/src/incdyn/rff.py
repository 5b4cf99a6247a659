"""Random Fourier features for the Gaussian kernel, plus the exact-kernel
and exact kernel-ridge oracles used to validate the approximation, and the
input normalizer that precedes the feature map.

Features come in (cos, sin) pairs: D/2 frequency rows drawn from the
kernel's spectral density give D real features scaled by sqrt(2/D). The
feature inner product is an unbiased estimate of the kernel and every
feature vector has unit norm (cos**2 + sin**2 telescopes to 1).
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy.spatial.distance import cdist, pdist

SCALE_FLOOR = 1e-8


@dataclass(frozen=True)
class RffMap:
    """Frozen random feature map; frequencies are drawn once and never mutated."""

    input_dim: int
    feature_dim: int
    sigma: float
    frequencies: np.ndarray  # (feature_dim // 2, input_dim)
    seed: int


def sample_map(input_dim, feature_dim, sigma, seed):
    """Draw a feature map for a Gaussian kernel of bandwidth sigma.

    Frequencies are i.i.d. zero-mean Gaussian with per-coordinate standard
    deviation 1/sigma (the Fourier transform of the Gaussian kernel, per
    Bochner's theorem), deterministic for a given seed. feature_dim must be
    even: each frequency row yields one cos and one sin feature.
    """
    input_dim = int(input_dim)
    feature_dim = int(feature_dim)
    if input_dim < 1:
        raise ValueError("input_dim must be positive")
    if feature_dim < 2 or feature_dim % 2 != 0:
        raise ValueError("feature_dim must be a positive even integer")
    sigma = float(sigma)
    if not sigma > 0.0:
        raise ValueError("sigma must be strictly positive")
    rng = np.random.default_rng(seed)
    frequencies = rng.standard_normal((feature_dim // 2, input_dim)) / sigma
    return RffMap(input_dim, feature_dim, sigma, frequencies, int(seed))


def apply_map(fmap, x):
    """Map a row (d,) or a batch (n, d) into feature space.

    Output entries are sqrt(2/D) * cos(x @ w_j) and sqrt(2/D) * sin(x @ w_j)
    interleaved cos-first for j = 1..D/2.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != fmap.input_dim:
        raise ValueError(
            f"expected inputs of dimension {fmap.input_dim}, got {X.shape[1]}")
    proj = X @ fmap.frequencies.T
    out = np.empty((X.shape[0], fmap.feature_dim))
    out[:, 0::2] = np.cos(proj)
    out[:, 1::2] = np.sin(proj)
    out *= np.sqrt(2.0 / fmap.feature_dim)
    return out[0] if single else out


def gaussian_kernel(x, x2, sigma):
    """Exact Gaussian kernel exp(-||x - x'||**2 / (2 sigma**2))."""
    sigma = float(sigma)
    if not sigma > 0.0:
        raise ValueError("sigma must be strictly positive")
    d = np.asarray(x, dtype=float).ravel() - np.asarray(x2, dtype=float).ravel()
    return float(np.exp(-(d @ d) / (2.0 * sigma ** 2)))


def gaussian_kernel_matrix(X, X2, sigma):
    """Pairwise Gaussian kernel matrix between the rows of X and X2."""
    sq = cdist(np.atleast_2d(X), np.atleast_2d(X2), "sqeuclidean")
    return np.exp(-sq / (2.0 * float(sigma) ** 2))


def kernel_ridge_fit(X, Y, sigma, lam):
    """Exact kernelized ridge coefficients alpha = (K + lam * I)^-1 @ Y.

    O(n**3); intended as a small-n oracle for the random-feature path, not
    for streams. Prediction at x is sum_i alpha_i k(x_i, x).
    """
    lam = float(lam)
    if not lam > 0.0:
        raise ValueError("regularization lam must be strictly positive")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    K = gaussian_kernel_matrix(X, X, sigma)
    return sla.solve(K + lam * np.eye(X.shape[0]), Y, assume_a="pos")


def kernel_ridge_predict(X_train, alpha, sigma, X):
    """Evaluate the kernel-ridge oracle at the rows of X."""
    return gaussian_kernel_matrix(X, X_train, sigma) @ alpha


@dataclass(frozen=True)
class Normalizer:
    """Columnwise centering / scaling statistics, frozen after fitting."""

    mean: np.ndarray
    scale: np.ndarray  # per-column standard deviation, floored at SCALE_FLOOR


def fit_normalizer(X):
    """Columnwise mean and standard deviation of X, scale floored at 1e-8.

    The floor keeps constant columns from dividing by zero. Needs at least
    two rows so the deviation is meaningful.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need a 2-d matrix with at least two rows")
    mean = X.mean(axis=0)
    scale = np.maximum(X.std(axis=0), SCALE_FLOOR)
    return Normalizer(mean, scale)


def normalize(nrm, x):
    """Apply (x - mean) / scale elementwise; works on a row or a batch."""
    return (np.asarray(x, dtype=float) - nrm.mean) / nrm.scale


def median_heuristic(X, max_points=1000, seed=0):
    """Median pairwise Euclidean distance of the rows of X.

    Subsamples deterministically above max_points to keep the O(n**2)
    distance computation bounded. Falls back to 1.0 for degenerate data
    where the median distance vanishes.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] > max_points:
        idx = np.random.default_rng(seed).choice(X.shape[0], max_points, replace=False)
        X = X[idx]
    if X.shape[0] < 2:
        raise ValueError("need at least two points")
    med = float(np.median(pdist(X)))
    return med if med > 0.0 else 1.0


def save_map(fmap, path):
    """Persist a feature map so an experiment can be reproduced exactly."""
    np.savez(
        path,
        frequencies=fmap.frequencies,
        input_dim=fmap.input_dim,
        feature_dim=fmap.feature_dim,
        sigma=fmap.sigma,
        seed=fmap.seed,
    )


def load_map(path):
    """Load a feature map persisted by `save_map`."""
    with np.load(path) as data:
        return RffMap(
            int(data["input_dim"]),
            int(data["feature_dim"]),
            float(data["sigma"]),
            data["frequencies"].copy(),
            int(data["seed"]),
        )
