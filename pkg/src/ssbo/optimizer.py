"""Sequential (SS-GPUCB) and batch (SB-GPUCB) optimisation loops."""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .acquisition import SS_UCB, AcquisitionSpec, beta_at, posterior_on, score_thetas, select_theta
from .domain import argmax_truth
from .gp import GaussianProcess
from .kernels import KernelSpec, default_kernel
from .penalty import batch_scores

NOISE_FRACTION = 1e-4


@dataclass
class RunConfig:
    """Everything one replicate run needs.

    ``objective`` is a callable over domain feature rows or a precomputed
    vector aligned with the domain. ``noise_variance`` is in objective units;
    ``None`` means ``1e-4 * (max f - min f)^2``.
    """

    domain: object
    family: object
    objective: object
    acquisition: AcquisitionSpec = field(default_factory=AcquisitionSpec)
    kernel: KernelSpec = None
    batch_size: int = 1
    n_obs: int = 200
    noise_variance: float = None
    seed: int = 0
    replicate: int = 0

    def objective_values(self):
        if callable(self.objective):
            return np.asarray(self.objective(self.domain.points), dtype=float)
        return np.asarray(self.objective, dtype=float)


@dataclass
class Observation:
    t: int
    round: int
    theta: int
    variance_label: float
    x_index: int
    y: float
    f_true: float
    inst_regret: float = 0.0
    simple_regret: float = 0.0
    prior_variance: float = 0.0  # posterior variance at x_t before the round, model units
    beta: float = 0.0


@dataclass
class RoundRecord:
    round: int
    t_start: int
    size: int
    theta: int
    variance_label: float
    score_max: float
    score_mean: float
    beta: float


@dataclass
class RunTrace:
    replicate: int = 0
    observations: list = field(default_factory=list)
    rounds: list = field(default_factory=list)
    truth: tuple = (0, 0.0)
    noise_variance: float = 0.0  # model units
    scale: tuple = (0.0, 1.0)  # (offset, scale) used to standardise y

    def __len__(self):
        return len(self.observations)

    def column(self, name):
        return np.array([getattr(o, name) for o in self.observations])

    @property
    def x_index(self):
        return self.column("x_index").astype(np.int64)

    @property
    def inst_regret(self):
        return self.column("inst_regret")

    @property
    def simple_regret(self):
        return self.column("simple_regret")

    @property
    def variance_label(self):
        return self.column("variance_label")


def compute_regrets(trace, truth):
    """Fill instantaneous and simple regret from the noiseless ``f_true``."""
    _, f_best = truth
    running = math.inf
    for obs in trace.observations:
        obs.inst_regret = f_best - obs.f_true
        running = min(running, obs.inst_regret)
        obs.simple_regret = running
    trace.truth = truth
    return trace


def _standardisation(f):
    offset = float(f.mean())
    scale = float(f.std())
    return offset, (scale if scale > 0 else 1.0)


def _run(config, batch_mode):
    domain, family, spec = config.domain, config.family, config.acquisition
    f = config.objective_values()
    truth = argmax_truth(domain, f)
    offset, scale = _standardisation(f)
    noise = config.noise_variance
    if noise is None:
        noise = NOISE_FRACTION * float(f.max() - f.min()) ** 2
    kernel = config.kernel if config.kernel is not None else default_kernel(domain)
    gp_noise = noise / scale**2
    batch_size = config.batch_size if batch_mode else 1
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")

    rng = np.random.default_rng(config.seed)
    trace = RunTrace(replicate=config.replicate, noise_variance=gp_noise, scale=(offset, scale))
    xs, ys = [], []
    model = GaussianProcess(kernel=kernel, noise_variance=gp_noise).fit(
        np.empty((0, domain.dim)), []
    )
    t, rnd = 1, 0
    while t <= config.n_obs:
        size = min(batch_size, config.n_obs - t + 1)
        rnd += 1
        beta = beta_at(spec.beta, t, domain.size)
        posterior = posterior_on(model, domain)
        if batch_mode and spec.kind == SS_UCB:
            scores = batch_scores(
                model, family, beta, size, posterior=posterior, observed_ys=ys
            )
        else:
            scores = score_thetas(spec, model, family, t, posterior=posterior)
        choice = select_theta(scores, spec.kind, rng, family.variance_labels)
        trace.rounds.append(
            RoundRecord(
                round=rnd,
                t_start=t,
                size=size,
                theta=choice.theta,
                variance_label=choice.variance_label,
                score_max=float(np.max(scores)),
                score_mean=float(np.mean(scores)),
                beta=beta,
            )
        )
        for _ in range(size):
            x = family.sample(choice.theta, rng)
            y = f[x] + math.sqrt(noise) * rng.standard_normal()
            trace.observations.append(
                Observation(
                    t=t,
                    round=rnd,
                    theta=choice.theta,
                    variance_label=choice.variance_label,
                    x_index=int(x),
                    y=float(y),
                    f_true=float(f[x]),
                    prior_variance=float(posterior[1][x]),
                    beta=beta,
                )
            )
            xs.append(int(x))
            ys.append((y - offset) / scale)
            t += 1
        model = GaussianProcess(kernel=kernel, noise_variance=gp_noise).fit(
            domain.features[xs], ys
        )
    return compute_regrets(trace, truth)


def run_sequential(config):
    """One observation per round: score thetas, pick one, sample, refit."""
    return _run(replace(config, batch_size=1), batch_mode=False)


def run_batch(config):
    """``batch_size`` iid draws per round from a single theta, one refit per round."""
    return _run(config, batch_mode=True)
