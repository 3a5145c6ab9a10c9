"""Finite families of sampling distributions over a finite domain.

A family enumerates parameters ``theta`` and assigns each a probability row
over the domain points. All expectations are exact sums over the domain.
"""

from functools import cached_property

import numpy as np

from .exceptions import LengthMismatch, NonPositiveStd, RateOutOfRange

TRUNCATION = 1e-12
DEFAULT_STD_FRACTIONS = (1e-3, 5e-3, 2.5e-2, 1e-1, 2e-1)
DEFAULT_RATES = (0.05, 0.15, 0.30, 0.50)


class ThetaFamily:
    """Base class; subclasses provide ``n_thetas``, ``pmf`` and ``expect_all``.

    ``variance_labels`` gives one real per theta describing its spread
    (std squared for grids, mutation rate for sequences).
    """

    domain = None
    variance_labels = None

    @property
    def n_thetas(self):
        raise NotImplementedError

    def pmf(self, theta):
        raise NotImplementedError

    def pmf_table(self):
        return np.stack([self.pmf(t) for t in range(self.n_thetas)])

    def expect_all(self, values):
        """``sum_x pi(x | theta) values[x]`` for every theta."""
        values = self._check_values(values)
        return self.pmf_table() @ values

    def expect(self, theta, values):
        values = self._check_values(values)
        return float(np.dot(self.pmf(theta), values))

    def _check_values(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (self.domain.size,):
            raise LengthMismatch(
                f"expected {self.domain.size} values, got shape {values.shape}"
            )
        return values

    def sample(self, theta, rng, size=None):
        """Inverse-CDF draws of domain indices from ``pi(. | theta)``."""
        cdf = np.cumsum(self.pmf(theta))
        u = rng.random(size)
        idx = np.searchsorted(cdf, u * cdf[-1], side="right")
        idx = np.minimum(idx, self.domain.size - 1)
        return int(idx) if size is None else idx.astype(np.int64)

    def pi_star(self):
        """Largest probability mass over all points and thetas."""
        return float(self.pmf_table().max())

    @cached_property
    def expected_features(self):
        """Feature-space mean of each distribution, shape ``(n_thetas, dim)``."""
        feats = np.asarray(self.domain.features, dtype=float)
        return np.stack([self.expect_all(feats[:, k]) for k in range(feats.shape[1])], axis=1)

    @cached_property
    def mean_point_indices(self):
        """Domain point nearest each distribution's feature-space mean."""
        return self.domain.nearest_index(self.expected_features)


class TabularFamily(ThetaFamily):
    """Family given by an explicit row-stochastic table."""

    def __init__(self, domain, table, variance_labels=None):
        table = np.asarray(table, dtype=float)
        if table.ndim != 2 or table.shape[1] != domain.size:
            raise LengthMismatch("table must have one column per domain point")
        if np.any(table < 0):
            raise ValueError("probabilities must be non-negative")
        self.domain = domain
        self.table = table / table.sum(axis=1, keepdims=True)
        if variance_labels is None:
            variance_labels = np.zeros(table.shape[0])
        self.variance_labels = np.asarray(variance_labels, dtype=float)

    @property
    def n_thetas(self):
        return self.table.shape[0]

    def pmf(self, theta):
        return self.table[theta]

    def pmf_table(self):
        return self.table


def point_mass_family(domain):
    """One point mass per domain point; reduces SS-GPUCB to plain GP-UCB."""
    return TabularFamily(domain, np.eye(domain.size))


def discretized_normal(centers, mean, std):
    """Normal weights at ``centers``, normalised, truncated and renormalised."""
    z2 = ((np.asarray(centers) - mean) / std) ** 2
    # shift so the nearest centre has weight 1 and tiny stds cannot underflow
    w = np.exp(-0.5 * (z2 - z2.min()))
    w /= w.sum()
    w[w < TRUNCATION] = 0.0
    return w / w.sum()


class GridNormalFamily(ThetaFamily):
    """Axis-aligned discretised normals on a :class:`~ssbo.domain.GridDomain`.

    Means sit at the centres of ``means_per_dim`` equal blocks along each
    axis; standard deviations are fractions of the side length. A row is the
    product of per-axis discretised normals, so each axis factor is
    normalised and truncated independently.

    Theta index is ``mean_flat * n_stds + std_index`` with ``mean_flat`` the
    row-major index of the mean position.
    """

    def __init__(self, domain, means_per_dim=32, std_fractions=DEFAULT_STD_FRACTIONS):
        std_fractions = np.asarray(std_fractions, dtype=float)
        if std_fractions.size == 0 or np.any(~(std_fractions > 0)):
            raise NonPositiveStd("standard deviations must be strictly positive")
        self.domain = domain
        self.means_per_dim = int(means_per_dim)
        self.std_fractions = std_fractions
        k = np.arange(self.means_per_dim) + 0.5
        self.mean_axes = [
            domain.lo[i] + k * domain.side[i] / self.means_per_dim for i in range(domain.dim)
        ]
        self.stds = std_fractions[:, None] * domain.side[None, :]
        # factors[s][i] has shape (means_per_dim, cells_per_dim)
        self.factors = [
            [
                np.stack([discretized_normal(domain.axes[i], m, self.stds[s, i]) for m in self.mean_axes[i]])
                for i in range(domain.dim)
            ]
            for s in range(len(std_fractions))
        ]
        n_means = self.means_per_dim**domain.dim
        self.variance_labels = np.tile(self.stds[:, 0] ** 2, n_means)

    @property
    def n_stds(self):
        return len(self.std_fractions)

    @property
    def n_thetas(self):
        return self.means_per_dim**self.domain.dim * self.n_stds

    def unravel(self, theta):
        """``(mean multi-index, std index)`` for a theta index."""
        mean_flat, s = divmod(int(theta), self.n_stds)
        return np.unravel_index(mean_flat, (self.means_per_dim,) * self.domain.dim), s

    def pmf(self, theta):
        means, s = self.unravel(theta)
        row = np.ones(1)
        for i, m in enumerate(means):
            row = np.multiply.outer(row, self.factors[s][i][m]).ravel()
        return row

    @cached_property
    def table(self):
        n_means = self.means_per_dim**self.domain.dim
        table = np.empty((n_means, self.n_stds, self.domain.size))
        for s, factors in enumerate(self.factors):
            block = np.ones((1, 1))
            for F in factors:
                # (means so far, cells so far) x (m, n) -> (means * m, cells * n)
                block = np.einsum("ac,bd->abcd", block, F).reshape(
                    block.shape[0] * F.shape[0], block.shape[1] * F.shape[1]
                )
            table[:, s, :] = block
        return table.reshape(self.n_thetas, self.domain.size)

    def pmf_table(self):
        return self.table

    def expect_all(self, values):
        values = self._check_values(values)
        out = np.empty((self.means_per_dim**self.domain.dim, self.n_stds))
        for s in range(self.n_stds):
            out[:, s] = self._contract(values.reshape(self.domain.shape), s).ravel()
        return out.ravel()

    def _contract(self, T, s):
        # Contract leading grid axes one by one; mean axes accumulate at the end.
        for F in self.factors[s]:
            T = np.tensordot(T, F, axes=([0], [1]))
        return T

    def pi_star(self):
        return float(max(np.prod([F.max() for F in fs]) for fs in self.factors))


class MutagenesisFamily(ThetaFamily):
    """Per-position mutagenesis of a start sequence at rate ``mu``.

    Each position keeps its letter with probability ``1 - mu`` and switches to
    each other letter with probability ``mu / (n_letters - 1)``. Theta index is
    ``start_index * n_rates + rate_index``.
    """

    def __init__(self, domain, rates=DEFAULT_RATES):
        rates = np.asarray(rates, dtype=float)
        max_rate = (domain.n_letters - 1) / domain.n_letters
        if rates.size == 0 or np.any(~((rates > 0) & (rates <= max_rate + 1e-15))):
            raise RateOutOfRange(f"rates must lie in (0, {max_rate}]")
        self.domain = domain
        self.rates = rates
        self.variance_labels = np.tile(rates, domain.size)

    @property
    def n_rates(self):
        return len(self.rates)

    @property
    def n_thetas(self):
        return self.domain.size * self.n_rates

    def unravel(self, theta):
        return divmod(int(theta), self.n_rates)

    def hamming_weights(self, r):
        """``pi`` as a function of Hamming distance h = 0..length for rate index r."""
        mu = self.rates[r]
        h = np.arange(self.domain.length + 1)
        return (1 - mu) ** (self.domain.length - h) * (mu / (self.domain.n_letters - 1)) ** h

    @cached_property
    def table(self):
        H = self.domain.hamming
        table = np.empty((self.domain.size, self.n_rates, self.domain.size))
        for r in range(self.n_rates):
            table[:, r, :] = self.hamming_weights(r)[H]
        return table.reshape(self.n_thetas, self.domain.size)

    def pmf(self, theta):
        return self.table[theta]

    def pmf_table(self):
        return self.table

    def pi_star(self):
        return float(max(self.hamming_weights(r).max() for r in range(self.n_rates)))
