import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from ssbo.dist import (
    GridNormalFamily,
    MutagenesisFamily,
    TabularFamily,
    discretized_normal,
    point_mass_family,
)
from ssbo.domain import GridDomain, SequenceDomain
from ssbo.exceptions import LengthMismatch, NonPositiveStd, RateOutOfRange


@pytest.fixture(scope="module")
def grid():
    return GridDomain(-32.768, 32.768, cells_per_dim=64, dim=2)


@pytest.fixture(scope="module")
def grid_family(grid):
    return GridNormalFamily(grid)


@pytest.fixture(scope="module")
def seq_family():
    return MutagenesisFamily(SequenceDomain())


def test_tiny_std_collapses_to_nearest_cell():
    dom = GridDomain(0.0, 1.0, cells_per_dim=2)
    assert discretized_normal(dom.axes[0], 0.25, 1e-6).tolist() == [1.0, 0.0]


def test_centre_mean_is_reflection_symmetric():
    dom = GridDomain(-1.0, 1.0, cells_per_dim=16, dim=2)
    fam = GridNormalFamily(dom, means_per_dim=2, std_fractions=[0.3])
    # means at -0.5 and 0.5; build one centred row directly from the factors
    F = discretized_normal(dom.axes[0], 0.0, 0.6)
    row = np.multiply.outer(F, F)
    assert np.allclose(row, row[::-1, :]) and np.allclose(row, row.T)
    assert fam.n_thetas == 4


def test_default_grid_family_shape_and_rows(grid_family):
    table = grid_family.pmf_table()
    assert table.shape == (5120, 4096)
    assert table.min() >= 0
    assert np.max(np.abs(table.sum(axis=1) - 1.0)) <= 1e-12


def test_grid_theta_layout(grid_family, grid):
    theta = 7 * 5 + 1  # mean index 7, std index 1
    (mi, mj), s = grid_family.unravel(theta)
    assert (mi, mj, s) == (0, 7, 1)
    assert grid_family.variance_labels[theta] == pytest.approx(grid_family.stds[1, 0] ** 2)
    row = grid_family.pmf(theta)
    assert np.array_equal(row, grid_family.pmf_table()[theta])
    mean = row @ grid.points
    assert mean[1] == pytest.approx(grid_family.mean_axes[1][7], abs=1e-6)


def test_std_fractions_span_requested_range(grid_family, grid):
    assert grid_family.stds[:, 0] / grid.side[0] == pytest.approx([1e-3, 5e-3, 2.5e-2, 0.1, 0.2])


def test_non_positive_std_rejected(grid):
    with pytest.raises(NonPositiveStd):
        GridNormalFamily(grid, std_fractions=[0.1, 0.0])


def test_mutagenesis_self_probability(seq_family):
    fam = MutagenesisFamily(SequenceDomain(), rates=[0.2])
    s = fam.domain.index_of("ACGTA")
    assert fam.pmf(s)[s] == pytest.approx(0.32768, abs=1e-15)
    assert seq_family.pmf_table().shape == (4096, 1024)


def test_mutagenesis_rows_and_binomial_counts(seq_family):
    table = seq_family.pmf_table()
    assert np.max(np.abs(table.sum(axis=1) - 1.0)) <= 1e-12
    H = seq_family.domain.hamming
    for theta in (0, 3, 1234, 4095):
        start, r = seq_family.unravel(theta)
        counts = np.bincount(H[start], weights=table[theta], minlength=6)
        assert np.allclose(counts, binom.pmf(np.arange(6), 5, seq_family.rates[r]), atol=1e-12)


def test_mutagenesis_depends_only_on_hamming(seq_family):
    H = seq_family.domain.hamming
    for r in range(seq_family.n_rates):
        w = seq_family.hamming_weights(r)
        mu = seq_family.rates[r]
        assert np.allclose(w, (1 - mu) ** (5 - np.arange(6)) * (mu / 3) ** np.arange(6), rtol=1e-15)
        assert np.array_equal(seq_family.pmf_table()[5 * 4 + r], w[H[5]])


@pytest.mark.parametrize("rates", [[0.0], [0.8], []])
def test_rate_range(rates):
    with pytest.raises(RateOutOfRange):
        MutagenesisFamily(SequenceDomain(), rates=rates)


def test_uniform_rate_allowed():
    fam = MutagenesisFamily(SequenceDomain(), rates=[0.75])
    assert np.allclose(fam.pmf(0), 1 / 1024)


def test_expect_simple_cases():
    dom = GridDomain(0.0, 1.0, cells_per_dim=2)
    fam = TabularFamily(dom, [[1.0, 0.0], [0.5, 0.5]])
    assert fam.expect(0, [4.0, 9.0]) == 4.0
    assert fam.expect(1, [1.0, 3.0]) == 2.0
    with pytest.raises(LengthMismatch):
        fam.expect(0, [1.0, 2.0, 3.0])


def test_expect_matches_monte_carlo(grid_family, grid):
    rng = np.random.default_rng(0)
    values = rng.standard_normal(grid.size)
    theta = 2 * 5 + 4
    draws = values[grid_family.sample(theta, rng, size=1_000_000)]
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - grid_family.expect(theta, values)) <= 3 * se


def test_expect_all_matches_dense(grid_family, seq_family, grid):
    rng = np.random.default_rng(1)
    for fam in (grid_family, seq_family):
        v = rng.standard_normal(fam.domain.size)
        assert np.allclose(fam.expect_all(v), fam.pmf_table() @ v, rtol=0, atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(-5, 5), st.floats(-5, 5))
@settings(max_examples=20, deadline=None)
def test_expect_is_linear(seed, a, b):
    dom = GridDomain(0.0, 1.0, cells_per_dim=8, dim=2)
    fam = GridNormalFamily(dom, means_per_dim=4)
    rng = np.random.default_rng(seed)
    v, w = rng.standard_normal((2, dom.size))
    lhs = fam.expect_all(a * v + b * w)
    rhs = a * fam.expect_all(v) + b * fam.expect_all(w)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_std_far_below_spacing_does_not_underflow():
    w = discretized_normal(np.array([0.0625, 0.1875]), 0.1, 1e-4)
    assert w.tolist() == [1.0, 0.0]


def test_point_masses():
    dom = GridDomain(0.0, 1.0, cells_per_dim=5)
    fam = point_mass_family(dom)
    rng = np.random.default_rng(2)
    assert all(fam.sample(3, rng) == 3 for _ in range(20))
    assert fam.expect(2, np.arange(5.0)) == 2.0
    assert fam.pi_star() == 1.0


def test_uniform_family_pi_star():
    dom = GridDomain(0.0, 1.0, cells_per_dim=7)
    assert TabularFamily(dom, np.ones((1, 7))).pi_star() == pytest.approx(1 / 7)


def test_sampling_frequencies_within_bands():
    dom = GridDomain(0.0, 1.0, cells_per_dim=6)
    p = np.array([0.05, 0.1, 0.2, 0.3, 0.25, 0.1])
    fam = TabularFamily(dom, [p])
    draws = fam.sample(0, np.random.default_rng(3), size=100_000)
    freq = np.bincount(draws, minlength=6) / draws.size
    assert np.all(np.abs(freq - p) <= 3 * np.sqrt(p * (1 - p) / draws.size))


def test_sampling_is_reproducible(grid_family):
    a = grid_family.sample(123, np.random.default_rng(9), size=50)
    b = grid_family.sample(123, np.random.default_rng(9), size=50)
    assert np.array_equal(a, b)


def test_sampling_never_leaves_support(grid_family):
    rng = np.random.default_rng(4)
    row = grid_family.pmf(17)
    assert np.all(row[grid_family.sample(17, rng, size=10_000)] > 0)


def test_pi_star(grid_family, seq_family):
    assert seq_family.pi_star() == pytest.approx(0.95**5, rel=1e-15)
    assert grid_family.pi_star() == pytest.approx(grid_family.pmf_table().max(), rel=1e-15)


@pytest.mark.parametrize("name", ["grid_family", "seq_family"])
def test_sum_of_squares_below_pi_star(name, request):
    fam = request.getfixturevalue(name)
    table = fam.pmf_table()
    assert np.all(np.einsum("tx,tx->t", table, table) <= fam.pi_star())
    assert np.all(table <= fam.pi_star())


def test_mean_point_indices_on_sequences(seq_family):
    # the one-hot mean of a mutagenesis row is closest to its start sequence when mu < 0.75
    starts = np.arange(seq_family.n_thetas) // seq_family.n_rates
    assert np.array_equal(seq_family.mean_point_indices, starts)
