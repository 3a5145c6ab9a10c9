"""Covariance functions used by :class:`ssbo.gp.GaussianProcess`."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import DimensionMismatch

SQUARED_EXPONENTIAL = "squared-exponential"
LINEAR_ONE_HOT = "linear-one-hot"
KERNEL_KINDS = (SQUARED_EXPONENTIAL, LINEAR_ONE_HOT)


@dataclass(frozen=True)
class KernelSpec:
    """Fixed-hyperparameter kernel.

    ``squared-exponential`` is ``sv * exp(-|a - b|^2 / (2 l^2))``.
    ``linear-one-hot`` is ``sv * <a, b> / n_positions`` on one-hot encodings
    with ``input_dim = n_positions * alphabet_size``, so ``k(x, x) = sv``.
    """

    kind: str = SQUARED_EXPONENTIAL
    input_dim: int = 1
    lengthscale: float = 1.0
    signal_variance: float = 1.0
    alphabet_size: int = 4

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.input_dim < 1:
            raise ValueError("input_dim must be positive")
        if self.signal_variance <= 0:
            raise ValueError("signal_variance must be positive")
        if self.kind == SQUARED_EXPONENTIAL and self.lengthscale <= 0:
            raise ValueError("lengthscale must be positive")
        if self.kind == LINEAR_ONE_HOT and self.input_dim % self.alphabet_size:
            raise ValueError("input_dim must be a multiple of alphabet_size")

    @property
    def n_positions(self):
        return self.input_dim // self.alphabet_size

    def _check(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"expected inputs of dimension {self.input_dim}, got {X.shape[1]}"
            )
        return X

    def __call__(self, A, B=None):
        A = self._check(A)
        B = A if B is None else self._check(B)
        if self.kind == SQUARED_EXPONENTIAL:
            sq = cdist(A, B, "sqeuclidean")
            return self.signal_variance * np.exp(-0.5 * sq / self.lengthscale**2)
        return self.signal_variance * (A @ B.T) / self.n_positions

    def diag(self, A):
        A = self._check(A)
        if self.kind == SQUARED_EXPONENTIAL:
            return np.full(A.shape[0], self.signal_variance)
        return self.signal_variance * np.einsum("ij,ij->i", A, A) / self.n_positions

    def gradient(self, A, B):
        """d k(a, b) / d a, shape ``(len(A), len(B), input_dim)``.

        Only defined for the squared-exponential kernel.
        """
        if self.kind != SQUARED_EXPONENTIAL:
            raise NotImplementedError("gradient is only available for squared-exponential")
        A = self._check(A)
        B = self._check(B)
        K = self(A, B)
        diff = A[:, None, :] - B[None, :, :]
        return -K[:, :, None] * diff / self.lengthscale**2


DEFAULT_LENGTHSCALE_FRACTION = 0.1


def default_kernel(domain, signal_variance=1.0):
    """Squared-exponential with lengthscale 0.1 x side on grids, linear one-hot on sequences."""
    if getattr(domain, "kind", None) == "sequence":
        return KernelSpec(
            kind=LINEAR_ONE_HOT,
            input_dim=domain.dim,
            signal_variance=signal_variance,
            alphabet_size=domain.n_letters,
        )
    side = float(np.mean(domain.side))
    return KernelSpec(
        input_dim=domain.dim,
        lengthscale=DEFAULT_LENGTHSCALE_FRACTION * side,
        signal_variance=signal_variance,
    )
