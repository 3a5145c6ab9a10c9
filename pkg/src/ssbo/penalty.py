"""Local penalisation of the acquisition for stochastic batches.

The penalty ``phi(x_i; x_j)`` discounts the acquisition at ``x_i`` given a
pending sample at ``x_j``. Because batch samples are drawn iid from one
distribution, the expected product of penalties factorises into a power of
the single expected penalty, which makes the batch score exact.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numba
import numpy as np
from scipy.special import ndtr

from .acquisition import posterior_on, ucb_values
from .dist import GridNormalFamily, MutagenesisFamily
from .exceptions import LengthMismatch
from .gp import mean_gradient_max

# Standardised arguments above this give a normal CDF of exactly 1.0.
SATURATION = 9.0


def _phi(lipschitz, best_y, mean_i, var_i, dist):
    """Penalty for candidates i (broadcast along the last axis) at distances ``dist``.

    Zero variance takes the erfc step limit.
    """
    num = lipschitz * np.asarray(dist, dtype=float) + (np.asarray(mean_i, dtype=float) - best_y)
    var_i = np.broadcast_to(var_i, num.shape)
    degenerate = var_i <= 0
    step = num > 0
    # 0.5 * erfc(-u / sqrt(2)) is the standard normal CDF of u
    with np.errstate(divide="ignore", invalid="ignore"):
        num /= np.sqrt(var_i)
    ndtr(num, out=num)
    if degenerate.any():
        num[degenerate] = step[degenerate]
    return num


def local_penalty(model, lipschitz, best_y, xi, xj):
    """``0.5 * erfc(-(L |xi - xj| - M + mu(xi)) / sqrt(2 var(xi)))``."""
    mean_i, var_i = model.predict_point(xi)
    dist = float(np.linalg.norm(np.asarray(xi, float) - np.asarray(xj, float)))
    num = lipschitz * dist - best_y + mean_i
    if var_i <= 0:
        return 1.0 if num > 0 else 0.0
    return 0.5 * math.erfc(-num / math.sqrt(2.0 * var_i))


@numba.njit(cache=True)
def _fill_pairwise_t(features, lipschitz, offset, var, out):
    n, d = features.shape
    inv_sd = np.empty(n)
    for i in range(n):
        inv_sd[i] = 1.0 / math.sqrt(var[i]) if var[i] > 0 else 0.0
    for j in range(n):
        for i in range(n):
            s = 0.0
            for k in range(d):
                diff = features[i, k] - features[j, k]
                s += diff * diff
            num = lipschitz * math.sqrt(s) + offset[i]
            if var[i] <= 0:
                out[j, i] = 1.0 if num > 0 else 0.0
            else:
                z = num * inv_sd[i]
                out[j, i] = 1.0 if z > SATURATION else 0.5 * math.erfc(-z / math.sqrt(2.0))


@dataclass(frozen=True)
class PenaltyState:
    """Model-derived penalty inputs for one batch round."""

    lipschitz: float
    best_y: float
    mean: np.ndarray
    var: np.ndarray
    features: np.ndarray

    @cached_property
    def pairwise_t(self):
        """Transposed penalty matrix: ``out[j, i] = phi(x_i; x_j)``.

        Rows index the pending sample, columns the candidate, so that
        ``pmf_table @ pairwise_t`` is the expected penalty table.
        """
        n = self.features.shape[0]
        out = np.empty((n, n))
        _fill_pairwise_t(
            np.ascontiguousarray(self.features, dtype=float),
            float(self.lipschitz),
            np.ascontiguousarray(self.mean - self.best_y, dtype=float),
            np.ascontiguousarray(self.var, dtype=float),
            out,
        )
        return out

    @property
    def pairwise(self):
        """``phi[i, j] = phi(x_i; x_j)`` over the whole domain."""
        return self.pairwise_t.T

    def by_distance(self, distances):
        """``phi(x_i; x)`` at each distance, shape ``(|D|, len(distances))``."""
        distances = np.asarray(distances, dtype=float)
        return _phi(
            self.lipschitz, self.best_y, self.mean[None, :], self.var[None, :], distances[:, None]
        ).T


def update_penalty_state(model, domain, observed_ys, posterior=None):
    """Lipschitz estimate, best observation and posterior for the coming round."""
    ys = np.asarray(observed_ys, dtype=float)
    best_y = float(ys.max()) if ys.size else 0.0
    mean, var = posterior if posterior is not None else posterior_on(model, domain)
    return PenaltyState(
        lipschitz=mean_gradient_max(model, domain.features),
        best_y=best_y,
        mean=np.asarray(mean, dtype=float),
        var=np.asarray(var, dtype=float),
        features=np.asarray(domain.features, dtype=float),
    )


def expected_penalty(family, theta, phi_row):
    """``E_{x_j ~ pi(theta)}[phi(x_i; x_j)]`` given the row ``phi(x_i; .)``."""
    phi_row = np.asarray(phi_row, dtype=float)
    if phi_row.shape != (family.domain.size,):
        raise LengthMismatch(f"expected {family.domain.size} entries")
    return family.expect(theta, phi_row)


def expected_penalty_table(state, family):
    """Expected penalty for every (theta, x_i), shape ``(n_thetas, |D|)``."""
    if isinstance(family, MutagenesisFamily):
        return _hamming_expected_penalty(state, family)
    if isinstance(family, GridNormalFamily):
        return _separable_expected_penalty(state, family)
    return family.pmf_table() @ state.pairwise_t


def _separable_expected_penalty(state, family):
    domain = family.domain
    n_means = family.means_per_dim**domain.dim
    out = np.empty((n_means, family.n_stds, domain.size))
    for s in range(family.n_stds):
        out[:, s, :] = _separable_block(state, family, s)
    return out.reshape(family.n_thetas, domain.size)


def _separable_block(state, family, s):
    # Contract the pending-sample grid axes with the per-axis factors one at a
    # time; every step is a contiguous (batched) matmul.
    domain = family.domain
    n = domain.cells_per_dim
    T = state.pairwise_t.reshape(1, n, -1)  # (means done, cells of next axis, rest)
    for F in family.factors[s]:
        T = np.matmul(F, T)
        rest = T.shape[2]
        T = T.reshape(-1, n, rest // n) if rest > domain.size else T.reshape(-1, 1, rest)
    return T.reshape(-1, domain.size)


def mismatch_distribution(length, k, mu, n_letters=4):
    """P(Hamming(x_i, x) = h), x mutagenised from a start k mismatches from x_i."""
    p_keep_mismatch = 1.0 - mu / (n_letters - 1)
    dist = np.ones(1)
    for p in [p_keep_mismatch] * k + [mu] * (length - k):
        dist = np.convolve(dist, [1.0 - p, p])
    return dist


def _hamming_expected_penalty(state, family):
    domain = family.domain
    L = domain.length
    psi = state.by_distance(np.sqrt(2.0 * np.arange(L + 1)))  # (|D|, L+1)
    out = np.empty((domain.size, family.n_rates, domain.size))
    H = domain.hamming
    cols = np.arange(domain.size)[None, :]
    for r, mu in enumerate(family.rates):
        P = np.stack([mismatch_distribution(L, k, mu, domain.n_letters) for k in range(L + 1)])
        E = psi @ P.T  # E[i, k]
        out[:, r, :] = E[cols, H]
    return out.reshape(family.n_thetas, domain.size)


def geometric_weight(p, batch_size):
    """``sum_{k=1}^{B} p^{k-1}`` evaluated by Horner's rule."""
    p = np.asarray(p, dtype=float)
    g = np.ones_like(p)
    for _ in range(batch_size - 1):
        g *= p
        g += 1.0
    return g


# Rows whose support is at most this many points are scored by summing over
# the support directly instead of through the full expected-penalty table.
SPARSE_SUPPORT = 64


@numba.njit(cache=True)
def _scores_from_table(pmf, phi_pi, alpha, batch_size, out):
    for t in range(pmf.shape[0]):
        acc = 0.0
        for x in range(pmf.shape[1]):
            w = pmf[t, x]
            if w > 0:
                p = phi_pi[t, x]
                g = 1.0
                for _ in range(batch_size - 1):
                    g = g * p + 1.0
                acc += w * alpha[x] * g
        out[t] = acc


@numba.njit(cache=True)
def _scores_on_support(pmf, pairwise_t, alpha, batch_size, out):
    support = np.empty(pmf.shape[1], dtype=np.int64)
    for t in range(pmf.shape[0]):
        k = 0
        for x in range(pmf.shape[1]):
            if pmf[t, x] > 0:
                support[k] = x
                k += 1
        acc = 0.0
        for a in range(k):
            x = support[a]
            p = 0.0
            for b in range(k):
                j = support[b]
                p += pmf[t, j] * pairwise_t[j, x]
            g = 1.0
            for _ in range(batch_size - 1):
                g = g * p + 1.0
            acc += pmf[t, x] * alpha[x] * g
        out[t] = acc


def _max_support(pmf):
    return int(np.count_nonzero(pmf, axis=1).max())


def _penalised_scores(state, family, alpha, batch_size):
    alpha = np.ascontiguousarray(alpha, dtype=float)
    if not isinstance(family, GridNormalFamily):
        pmf = family.pmf_table()
        out = np.empty(pmf.shape[0])
        if _max_support(pmf) <= SPARSE_SUPPORT:
            _scores_on_support(pmf, state.pairwise_t, alpha, batch_size, out)
        else:
            phi_pi = expected_penalty_table(state, family)
            _scores_from_table(pmf, phi_pi, alpha, batch_size, out)
        return out
    n_means = family.means_per_dim**family.domain.dim
    table = family.pmf_table().reshape(n_means, family.n_stds, -1)
    out = np.empty((n_means, family.n_stds))
    col = np.empty(n_means)
    for s in range(family.n_stds):
        pmf = table[:, s, :]
        if _max_support(pmf) <= SPARSE_SUPPORT:
            _scores_on_support(pmf, state.pairwise_t, alpha, batch_size, col)
        else:
            _scores_from_table(pmf, _separable_block(state, family, s), alpha, batch_size, col)
        out[:, s] = col
    return out.ravel()


def scores_from_penalty(family, alpha, batch_size, pairwise_t):
    """Batch scores for an explicit penalty matrix ``pairwise_t[j, i] = phi(x_i; x_j)``."""
    pmf = family.pmf_table()
    alpha = np.ascontiguousarray(alpha, dtype=float)
    pairwise_t = np.asarray(pairwise_t, dtype=float)
    if alpha.shape != (family.domain.size,) or pairwise_t.shape != (family.domain.size,) * 2:
        raise LengthMismatch("alpha and the penalty matrix must match the domain")
    out = np.empty(pmf.shape[0])
    _scores_from_table(pmf, pmf @ pairwise_t, alpha, int(batch_size), out)
    return out


def batch_scores(model, family, beta_t, batch_size, state=None, posterior=None, observed_ys=()):
    """``E_pi[sum_k alpha(x) phi_pi(x)^(k-1)]`` for every theta.

    With ``batch_size == 1`` this is exactly the sequential expected UCB.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    domain = family.domain
    if posterior is None:
        posterior = posterior_on(model, domain)
    alpha = ucb_values(model, domain, beta_t, posterior=posterior)
    if batch_size == 1:
        return family.expect_all(alpha)
    if state is None:
        state = update_penalty_state(model, domain, observed_ys, posterior=posterior)
    return _penalised_scores(state, family, alpha, batch_size)
