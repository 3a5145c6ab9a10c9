"""UCB acquisition over a finite domain and theta-scoring rules."""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainMismatch

SS_UCB = "ss-ucb"
MAX_MEAN = "max-mean"
MEAN_UCB = "mean-ucb"
INDEPENDENT = "independent"
RANDOM = "random"
ACQUISITION_KINDS = (SS_UCB, MAX_MEAN, MEAN_UCB, INDEPENDENT, RANDOM)

THEOREM_DISCRETE = "theorem-discrete"
CONSTANT = "constant"

# Scores within this relative distance of the maximum count as tied.
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class BetaSchedule:
    """Exploration weight schedule.

    ``theorem-discrete`` gives ``2 log(|D| t^2 pi^2 / (6 delta))``, which is
    non-decreasing in t. ``constant`` returns ``value`` every iteration.
    """

    kind: str = THEOREM_DISCRETE
    delta: float = 0.1
    value: float = 4.0

    def __post_init__(self):
        if self.kind not in (THEOREM_DISCRETE, CONSTANT):
            raise ValueError(f"unknown beta schedule {self.kind!r}")
        if self.kind == THEOREM_DISCRETE and not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.kind == CONSTANT and self.value <= 0:
            raise ValueError("constant beta must be positive")


def beta_at(schedule, t, domain_size):
    if t < 1:
        raise ValueError("iterations are counted from 1")
    if schedule.kind == CONSTANT:
        return float(schedule.value)
    return 2.0 * math.log(domain_size * t * t * math.pi**2 / (6.0 * schedule.delta))


@dataclass(frozen=True)
class AcquisitionSpec:
    kind: str = SS_UCB
    beta: BetaSchedule = field(default_factory=BetaSchedule)

    def __post_init__(self):
        if self.kind not in ACQUISITION_KINDS:
            raise ValueError(f"unknown acquisition kind {self.kind!r}")


def posterior_on(model, domain):
    """Posterior mean and variance at every domain point."""
    return model.predict(domain.features, return_var=True)


def ucb_values(model, domain, beta_t, posterior=None):
    """``mu + sqrt(beta_t) * sigma`` at every domain point."""
    if beta_t <= 0:
        raise ValueError("beta_t must be positive")
    mean, var = posterior if posterior is not None else posterior_on(model, domain)
    return mean + math.sqrt(beta_t) * np.sqrt(var)


def score_thetas(spec, model, family, t, domain=None, posterior=None):
    """Score every theta of ``family`` under the acquisition ``spec`` at iteration t.

    ``posterior`` may carry a precomputed ``(mean, var)`` over the domain.
    """
    domain = family.domain if domain is None else domain
    if domain is not family.domain:
        raise DomainMismatch("family and model refer to different domains")
    if spec.kind == RANDOM:
        return np.zeros(family.n_thetas)
    mean, var = posterior if posterior is not None else posterior_on(model, domain)
    if spec.kind == MAX_MEAN:
        return family.expect_all(mean)
    beta_t = beta_at(spec.beta, t, domain.size)
    alpha = ucb_values(model, domain, beta_t, posterior=(mean, var))
    if spec.kind == MEAN_UCB:
        return alpha[family.mean_point_indices]
    return family.expect_all(alpha)


@dataclass(frozen=True)
class ThetaChoice:
    theta: int
    variance_label: float


def argmax_first(scores):
    """Argmax with near-ties (relative 1e-12) resolved to the lowest index."""
    scores = np.asarray(scores, dtype=float)
    best = scores.max()
    tol = TIE_RTOL * max(1.0, abs(best))
    return int(np.flatnonzero(scores >= best - tol)[0])


def select_theta(scores, kind, rng=None, variance_labels=None):
    """Pick a theta: argmax of ``scores``, or uniform when ``kind`` is random."""
    scores = np.asarray(scores, dtype=float)
    if kind == RANDOM:
        theta = int(rng.integers(scores.shape[0]))
    else:
        if not np.all(np.isfinite(scores)):
            raise ValueError("scores must be finite")
        theta = argmax_first(scores)
    label = float(variance_labels[theta]) if variance_labels is not None else float("nan")
    return ThetaChoice(theta, label)
