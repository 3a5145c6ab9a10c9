"""Regret aggregation across replicates and regret-bound diagnostics."""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .acquisition import beta_at
from .exceptions import LengthMismatch
from .gp import empirical_info_gain

BAND = (2.5, 97.5)
# A fitted slope within this of 1 counts as linear (round-off in the fit).
SLOPE_TOL = 1e-9


@dataclass
class CurveSummary:
    """Per-iteration mean and 95% percentile band of regret across replicates.

    The band is widened to contain the mean where a skewed sample pushes the
    mean outside the empirical percentiles.
    """

    t: np.ndarray
    inst_mean: np.ndarray
    inst_lower: np.ndarray
    inst_upper: np.ndarray
    simple_mean: np.ndarray
    simple_lower: np.ndarray
    simple_upper: np.ndarray
    variance_label_mean: np.ndarray
    n_replicates: int

    def as_dict(self):
        out = {k: v.tolist() if isinstance(v, np.ndarray) else v for k, v in asdict(self).items()}
        out["t"] = [int(v) for v in self.t]
        return out


def _band(values):
    mean = values.mean(axis=0)
    lower, upper = np.percentile(values, BAND, axis=0)
    return mean, np.minimum(lower, mean), np.maximum(upper, mean)


def aggregate(traces):
    """Summarise replicate traces of equal length into a :class:`CurveSummary`."""
    traces = list(traces)
    if not traces:
        raise LengthMismatch("need at least one trace")
    n = len(traces[0])
    if any(len(tr) != n for tr in traces):
        raise LengthMismatch("traces differ in length")
    inst = np.array([tr.inst_regret for tr in traces]).reshape(len(traces), n)
    simple = np.array([tr.simple_regret for tr in traces]).reshape(len(traces), n)
    labels = np.array([tr.variance_label for tr in traces]).reshape(len(traces), n)
    inst_mean, inst_lower, inst_upper = _band(inst)
    simple_mean, simple_lower, simple_upper = _band(simple)
    return CurveSummary(
        t=np.arange(1, n + 1),
        inst_mean=inst_mean,
        inst_lower=inst_lower,
        inst_upper=inst_upper,
        simple_mean=simple_mean,
        simple_lower=simple_lower,
        simple_upper=simple_upper,
        variance_label_mean=labels.mean(axis=0),
        n_replicates=len(traces),
    )


def c1_constant(noise_variance):
    """``8 / log(1 + 1 / noise_variance)``."""
    return 8.0 / math.log1p(1.0 / noise_variance)


def expected_regret_series(trace, family, f_values):
    """``max_theta E_theta f - E_{theta_t} f`` for each observation of the trace."""
    expected = family.expect_all(np.asarray(f_values, dtype=float))
    best = expected.max()
    return best - expected[trace.column("theta").astype(np.int64)] if len(trace) else np.zeros(0)


@dataclass
class BoundReport:
    T: int
    beta_T: float
    C1: float
    pi_star: float
    domain_size: int
    info_gain: float
    bound_value: float
    cumulative_regret: float

    def as_dict(self):
        return asdict(self)


def bound_report(trace, family, noise_variance, schedule, kernel, f_values):
    """Components of ``sqrt(T C1 beta_T gamma_T |D| pi*)`` next to the observed regret.

    ``noise_variance`` is in model units. ``gamma_T`` is replaced by the
    information gain of the points actually sampled, which only bounds the
    maximal gain from below, so the bound value is a diagnostic.
    """
    domain = family.domain
    T = len(trace)
    # beta is defined from t = 1; report its first value for an empty trace
    beta_T = beta_at(schedule, max(T, 1), domain.size)
    C1 = c1_constant(noise_variance)
    pi_star = family.pi_star()
    points = np.asarray(domain.features, dtype=float)[trace.x_index] if T else []
    info_gain = empirical_info_gain(kernel, noise_variance, points)
    bound = math.sqrt(T * C1 * beta_T * info_gain * domain.size * pi_star)
    regret = float(expected_regret_series(trace, family, f_values).sum())
    return BoundReport(
        T=T,
        beta_T=float(beta_T),
        C1=C1,
        pi_star=pi_star,
        domain_size=int(domain.size),
        info_gain=info_gain,
        bound_value=bound,
        cumulative_regret=regret,
    )


def information_terms(trace, noise_variance):
    """``0.5 log(1 + var_{t-1}(x_t) / noise)`` per observation."""
    prior = trace.column("prior_variance")
    return 0.5 * np.log1p(prior / noise_variance)


def variance_sum_bound(trace, noise_variance):
    """Both sides of ``sum_t 4 beta_t var_{t-1}(x_t) <= beta_T C1 sum_t info_t``.

    Returns ``(lhs, rhs)``. For sequential traces the information terms sum
    to the information gain of the sampled points.
    """
    if not len(trace):
        return 0.0, 0.0
    beta = trace.column("beta")
    prior = trace.column("prior_variance")
    lhs = float(np.sum(4.0 * beta * prior))
    rhs = float(beta.max() * c1_constant(noise_variance) * information_terms(trace, noise_variance).sum())
    return lhs, rhs


def cumulative_regret(trace):
    return np.cumsum(trace.inst_regret)


def sublinearity_check(R):
    """Least-squares slope of ``log R_t`` on ``log t`` over ``t in [T/4, T]``.

    Returns ``(slope, passed)`` with ``passed`` iff the slope is below 1 by
    more than fitting round-off.
    Non-positive entries carry no log and are skipped.
    """
    R = np.asarray(R, dtype=float)
    T = R.shape[0]
    if T < 20:
        raise ValueError("need at least 20 iterations")
    t = np.arange(1, T + 1)
    keep = (t >= T / 4) & (R > 0)
    if keep.sum() < 2:
        return 0.0, True
    slope = float(np.polyfit(np.log(t[keep]), np.log(R[keep]), 1)[0])
    return slope, slope < 1.0 - SLOPE_TOL
