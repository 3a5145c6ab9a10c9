"""Exact Gaussian process regression with fixed hyperparameters."""

import numba
import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DimensionMismatch, NegativeVariance, NonPositiveDefinite
from .kernels import LINEAR_ONE_HOT, SQUARED_EXPONENTIAL, KernelSpec

# Relative diagonal jitter tried, in order, after a plain Cholesky fails.
JITTER_LEVELS = (1e-10, 1e-8, 1e-6)
VARIANCE_ROUNDOFF = 1e-10


def robust_cholesky(K):
    """Lower Cholesky factor of ``K``, escalating diagonal jitter on failure."""
    try:
        return cholesky(K, lower=True, check_finite=False)
    except LinAlgError:
        pass
    scale = np.mean(np.diag(K)) if K.size else 1.0
    scale = scale if scale > 0 else 1.0
    for jitter in JITTER_LEVELS:
        try:
            return cholesky(
                K + jitter * scale * np.eye(K.shape[0]), lower=True, check_finite=False
            )
        except LinAlgError:
            continue
    raise NonPositiveDefinite(
        f"Cholesky failed after jitter up to {JITTER_LEVELS[-1]:g} x mean diagonal"
    )


def _as_inputs(X, input_dim):
    if len(X) == 0:
        return np.empty((0, input_dim))
    X = check_array(X, dtype=np.float64)
    if X.shape[1] != input_dim:
        raise DimensionMismatch(f"expected dimension {input_dim}, got {X.shape[1]}")
    return X


def clamp_variance(var, prior):
    """Clip roundoff negatives to zero; larger negatives indicate a bug."""
    tol = VARIANCE_ROUNDOFF * np.maximum(1.0, prior)
    if np.any(var < -tol):
        raise NegativeVariance(f"predictive variance {var.min():.3e} below roundoff")
    return np.clip(var, 0.0, prior)


COLUMN_BLOCK = 128


@numba.njit(cache=True)
def _explained_variance(L, B):
    """Column sums of squares of ``L^{-1} B`` by forward substitution.

    Every column is processed with the same operation order, so a column's
    result does not depend on how many other columns are solved with it.
    """
    n, m = B.shape
    out = np.zeros(m)
    V = np.empty((n, COLUMN_BLOCK))
    for j0 in range(0, m, COLUMN_BLOCK):
        w = min(COLUMN_BLOCK, m - j0)
        for k in range(n):
            for j in range(w):
                V[k, j] = B[k, j0 + j]
            for p in range(k):
                lkp = L[k, p]
                for j in range(w):
                    V[k, j] -= lkp * V[p, j]
            d = L[k, k]
            for j in range(w):
                V[k, j] /= d
                out[j0 + j] += V[k, j] * V[k, j]
    return out


class GaussianProcess(BaseEstimator, RegressorMixin):
    """Zero-mean GP regressor with a fixed :class:`KernelSpec`.

    Parameters
    ----------
    kernel : KernelSpec
        Covariance function. Hyperparameters are never optimized.
    noise_variance : float
        Observation noise variance added to the Gram diagonal.

    Attributes
    ----------
    X_train_, y_train_ : ndarray
        Training data (possibly empty).
    L_ : ndarray
        Lower Cholesky factor of ``K + noise_variance * I``.
    alpha_ : ndarray
        ``(K + noise_variance * I)^{-1} y``.
    """

    def __init__(self, kernel=None, noise_variance=0.0):
        self.kernel = kernel
        self.noise_variance = noise_variance

    @property
    def kernel_(self):
        return self.kernel if self.kernel is not None else KernelSpec()

    def fit(self, X, y):
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be non-negative")
        kernel = self.kernel_
        X = _as_inputs(X, kernel.input_dim)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise DimensionMismatch(f"{X.shape[0]} inputs but {y.shape[0]} targets")
        K = kernel(X) if len(X) else np.empty((0, 0))
        K[np.diag_indices_from(K)] += self.noise_variance
        self.X_train_ = X
        self.y_train_ = y
        self.L_ = robust_cholesky(K) if len(X) else np.empty((0, 0))
        self.alpha_ = cho_solve((self.L_, True), y) if len(X) else np.empty(0)
        return self

    @property
    def n_train_(self):
        check_is_fitted(self, "L_")
        return self.X_train_.shape[0]

    def predict(self, X, return_var=False):
        """Posterior mean (and variance) of the latent function at ``X``."""
        check_is_fitted(self, "L_")
        kernel = self.kernel_
        X = _as_inputs(X, kernel.input_dim)
        prior = kernel.diag(X) if len(X) else np.empty(0)
        if self.n_train_ == 0 or len(X) == 0:
            mean = np.zeros(X.shape[0])
            return (mean, prior.copy()) if return_var else mean
        Ks = kernel(X, self.X_train_)
        # einsum and the substitution below keep each row's arithmetic
        # independent of the batch size, so batched and single queries agree
        mean = np.einsum("ij,j->i", Ks, self.alpha_)
        if not return_var:
            return mean
        var = prior - _explained_variance(self.L_, np.ascontiguousarray(Ks.T))
        return mean, clamp_variance(var, prior)

    def predict_point(self, x):
        """``(mean, variance)`` at a single query vector."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        mean, var = self.predict(x, return_var=True)
        return float(mean[0]), float(var[0])

    def mean_gradient(self, X):
        """Analytic gradient of the posterior mean, shape ``(len(X), d)``."""
        check_is_fitted(self, "L_")
        X = _as_inputs(X, self.kernel_.input_dim)
        if self.n_train_ == 0:
            return np.zeros_like(X)
        dK = self.kernel_.gradient(X, self.X_train_)
        return np.einsum("nad,a->nd", dK, self.alpha_)


def mean_gradient_max(model, points):
    """Lipschitz estimate: largest absolute slope of the posterior mean.

    Squared-exponential kernels use the analytic partial derivatives at
    ``points``. One-hot kernels use finite differences between Hamming-1
    neighbours (encoding distance sqrt(2)) among ``points``.
    """
    check_is_fitted(model, "L_")
    if model.n_train_ == 0:
        return 0.0
    points = np.asarray(points, dtype=float)
    kind = model.kernel_.kind
    if kind == SQUARED_EXPONENTIAL:
        return float(np.max(np.abs(model.mean_gradient(points))))
    if kind == LINEAR_ONE_HOT:
        mean = model.predict(points)
        sq = (
            np.einsum("ij,ij->i", points, points)[:, None]
            + np.einsum("ij,ij->i", points, points)[None, :]
            - 2.0 * points @ points.T
        )
        neighbours = np.isclose(sq, 2.0)
        if not neighbours.any():
            return 0.0
        diffs = np.abs(mean[:, None] - mean[None, :])[neighbours]
        return float(diffs.max() / np.sqrt(2.0))
    raise ValueError(f"unsupported kernel kind {kind!r}")


def empirical_info_gain(kernel, noise_variance, points):
    """``0.5 * log det(I + K_A / noise_variance)`` for the chosen points."""
    if noise_variance <= 0:
        raise ValueError("noise_variance must be positive")
    if len(points) == 0:
        return 0.0
    K = kernel(np.asarray(points, dtype=float))
    M = np.eye(K.shape[0]) + K / noise_variance
    try:
        L = cholesky(M, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise NonPositiveDefinite(str(exc)) from exc
    return float(np.sum(np.log(np.diag(L))))
