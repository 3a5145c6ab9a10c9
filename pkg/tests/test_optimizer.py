import math

import numpy as np
import pytest

from ssbo.acquisition import (
    CONSTANT,
    INDEPENDENT,
    RANDOM,
    SS_UCB,
    AcquisitionSpec,
    BetaSchedule,
    argmax_first,
    beta_at,
)
from ssbo.dist import GridNormalFamily, point_mass_family
from ssbo.domain import GridDomain
from ssbo.gp import GaussianProcess
from ssbo.kernels import default_kernel
from ssbo.objectives import ObjectiveSpec
from ssbo.optimizer import NOISE_FRACTION, RunConfig, compute_regrets, run_batch, run_sequential


@pytest.fixture(scope="module")
def small_grid():
    spec = ObjectiveSpec("ackley")
    dom = spec.make_domain(cells_per_dim=8)
    return dom, GridNormalFamily(dom, means_per_dim=4), spec


def test_point_masses_reproduce_plain_gp_ucb():
    dom = GridDomain(0.0, 1.0, cells_per_dim=3)
    f = np.array([0.2, 1.0, -0.5])
    noise = 0.01
    cfg = RunConfig(dom, point_mass_family(dom), f, n_obs=8, noise_variance=noise, seed=11)
    trace = run_sequential(cfg)

    # hand-rolled loop with the same random stream: one uniform per draw, then the noise
    rng = np.random.default_rng(11)
    offset, scale = f.mean(), f.std()
    kernel = default_kernel(dom)
    xs, ys, chosen = [], [], []
    for t in range(1, 9):
        gp = GaussianProcess(kernel, noise / scale**2).fit(dom.features[xs].reshape(-1, 1), ys)
        mean, var = gp.predict(dom.features, return_var=True)
        x = argmax_first(mean + math.sqrt(beta_at(BetaSchedule(), t, 3)) * np.sqrt(var))
        rng.random()
        y = f[x] + math.sqrt(noise) * rng.standard_normal()
        xs.append(x)
        ys.append((y - offset) / scale)
        chosen.append(x)
    assert trace.x_index.tolist() == chosen
    assert np.allclose(trace.column("y"), np.array(ys) * scale + offset, rtol=0, atol=1e-12)


def test_zero_budget_gives_empty_trace(small_grid):
    dom, fam, spec = small_grid
    trace = run_sequential(RunConfig(dom, fam, spec, n_obs=0))
    assert len(trace) == 0 and trace.rounds == []


def test_constant_objective_has_no_regret():
    dom = GridDomain(0.0, 1.0, cells_per_dim=4, dim=2)
    cfg = RunConfig(dom, GridNormalFamily(dom, means_per_dim=2), np.full(16, 3.0), n_obs=10, noise_variance=0.0)
    trace = run_sequential(cfg)
    assert np.all(trace.inst_regret == 0) and np.all(trace.simple_regret == 0)
    assert np.all(trace.column("y") == 3.0)


def test_default_noise_scales_with_range(small_grid):
    dom, fam, spec = small_grid
    trace = run_sequential(RunConfig(dom, fam, spec, n_obs=2))
    f = spec(dom.points)
    assert trace.noise_variance == pytest.approx(NOISE_FRACTION * np.ptp(f) ** 2 / f.std() ** 2)


def test_batch_round_structure(small_grid):
    dom, fam, spec = small_grid
    trace = run_batch(RunConfig(dom, fam, spec, batch_size=2, n_obs=4))
    assert len(trace) == 4 and len(trace.rounds) == 2
    assert trace.column("round").tolist() == [1, 1, 2, 2]
    assert [r.t_start for r in trace.rounds] == [1, 3]
    # every draw of a round comes from the round's theta
    for r in trace.rounds:
        assert {o.theta for o in trace.observations if o.round == r.round} == {r.theta}


def test_partial_final_batch(small_grid):
    dom, fam, spec = small_grid
    trace = run_batch(RunConfig(dom, fam, spec, batch_size=3, n_obs=7))
    assert [r.size for r in trace.rounds] == [3, 3, 1]
    assert trace.column("t").tolist() == list(range(1, 8))


def test_independent_batches(small_grid):
    dom, fam, spec = small_grid
    cfg = RunConfig(dom, fam, spec, acquisition=AcquisitionSpec(INDEPENDENT), batch_size=5, n_obs=10)
    trace = run_batch(cfg)
    assert len(trace.rounds) == 2 and len(trace) == 10
    assert set(trace.column("beta")) == {beta_at(BetaSchedule(), 1, dom.size), beta_at(BetaSchedule(), 6, dom.size)}


def test_first_round_tie_picks_theta_zero(small_grid):
    dom, fam, spec = small_grid
    trace = run_sequential(RunConfig(dom, fam, spec, n_obs=1))
    assert trace.rounds[0].theta == 0


def test_random_acquisition_varies_with_seed(small_grid):
    dom, fam, spec = small_grid
    a = run_sequential(RunConfig(dom, fam, spec, acquisition=AcquisitionSpec(RANDOM), n_obs=20, seed=0))
    b = run_sequential(RunConfig(dom, fam, spec, acquisition=AcquisitionSpec(RANDOM), n_obs=20, seed=1))
    assert a.column("theta").tolist() != b.column("theta").tolist()


@pytest.mark.parametrize("runner", [run_sequential, run_batch])
def test_runs_are_deterministic(small_grid, runner):
    dom, fam, spec = small_grid
    cfg = RunConfig(dom, fam, spec, batch_size=3, n_obs=9, seed=5)
    a, b = runner(cfg), runner(cfg)
    assert a.x_index.tolist() == b.x_index.tolist()
    assert a.column("y").tolist() == b.column("y").tolist()


def test_regrets_recompute_from_truth(small_grid):
    dom, fam, spec = small_grid
    trace = run_sequential(RunConfig(dom, fam, spec, n_obs=15, seed=2))
    f = spec(dom.points)
    inst = f.max() - f[trace.x_index]
    assert np.array_equal(trace.inst_regret, inst)
    assert np.array_equal(trace.simple_regret, np.minimum.accumulate(inst))
    assert np.all(np.diff(trace.simple_regret) <= 0) and np.all(trace.inst_regret >= 0)
    assert trace.truth == (int(np.argmax(f)), float(f.max()))


def test_compute_regrets_on_handmade_trace(small_grid):
    dom, fam, spec = small_grid
    trace = run_sequential(RunConfig(dom, fam, spec, n_obs=3))
    for obs, value in zip(trace.observations, [1.0, 3.0, 0.5]):
        obs.f_true = value
    compute_regrets(trace, (0, 4.0))
    assert trace.inst_regret.tolist() == [3.0, 1.0, 3.5]
    assert trace.simple_regret.tolist() == [3.0, 1.0, 1.0]


def test_constant_beta_is_recorded(small_grid):
    dom, fam, spec = small_grid
    acq = AcquisitionSpec(SS_UCB, BetaSchedule(CONSTANT, value=2.0))
    trace = run_batch(RunConfig(dom, fam, spec, acquisition=acq, batch_size=2, n_obs=4))
    assert set(trace.column("beta")) == {2.0}


def test_rejects_empty_batches(small_grid):
    dom, fam, spec = small_grid
    with pytest.raises(ValueError):
        run_batch(RunConfig(dom, fam, spec, batch_size=0, n_obs=3))
