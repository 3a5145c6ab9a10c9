"""Benchmark objectives, negated so that larger is better.

Grid objectives follow the standard 2-D minimisation benchmarks (Ackley,
Michalewicz, Rastrigin, Schwefel). The sequence objective is a seeded
linear-plus-pairwise model over DNA sequences.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import GridDomain, SequenceDomain
from .exceptions import OutOfRange

ACKLEY = "ackley"
MICHALEWICZ = "michalewicz"
RASTRIGIN = "rastrigin"
SCHWEFEL = "schwefel"
SEQ_LINEAR_QUADRATIC = "seq-linear-quadratic"
GRID_KINDS = (ACKLEY, MICHALEWICZ, RASTRIGIN, SCHWEFEL)
OBJECTIVE_KINDS = GRID_KINDS + (SEQ_LINEAR_QUADRATIC,)

RANGES = {
    ACKLEY: (-32.768, 32.768),
    MICHALEWICZ: (0.0, math.pi),
    RASTRIGIN: (-5.12, 5.12),
    SCHWEFEL: (-500.0, 500.0),
}


def ackley(X):
    X = np.atleast_2d(X)
    d = X.shape[1]
    r = np.sqrt(np.sum(X**2, axis=1) / d)
    c = np.sum(np.cos(2 * np.pi * X), axis=1) / d
    return -20.0 * np.exp(-0.2 * r) - np.exp(c) + 20.0 + math.e


def michalewicz(X, m=10):
    X = np.atleast_2d(X)
    i = np.arange(1, X.shape[1] + 1)
    return -np.sum(np.sin(X) * np.sin(i * X**2 / np.pi) ** (2 * m), axis=1)


def rastrigin(X):
    X = np.atleast_2d(X)
    return 10.0 * X.shape[1] + np.sum(X**2 - 10.0 * np.cos(2 * np.pi * X), axis=1)


def schwefel(X):
    X = np.atleast_2d(X)
    return 418.9829 * X.shape[1] - np.sum(X * np.sin(np.sqrt(np.abs(X))), axis=1)


@dataclass
class SeqOracle:
    """``f(s) = sum_i lin[i, s_i] + sum_{i<j} quad[pair(i, j), s_i, s_j]``."""

    linear: np.ndarray
    quadratic: np.ndarray
    seed: int = 0
    pairs: list = field(init=False)

    def __post_init__(self):
        self.linear = np.asarray(self.linear, dtype=float)
        self.quadratic = np.asarray(self.quadratic, dtype=float)
        length = self.linear.shape[0]
        self.pairs = list(itertools.combinations(range(length), 2))
        if self.quadratic.shape[0] != len(self.pairs):
            raise ValueError("need one quadratic table per position pair")

    @property
    def length(self):
        return self.linear.shape[0]

    @property
    def n_letters(self):
        return self.linear.shape[1]

    def evaluate_codes(self, codes):
        codes = np.atleast_2d(np.asarray(codes, dtype=np.int64))
        pos = np.arange(self.length)
        total = self.linear[pos[None, :], codes].sum(axis=1)
        for q, (i, j) in enumerate(self.pairs):
            total = total + self.quadratic[q, codes[:, i], codes[:, j]]
        return total

    def as_dict(self):
        """Coefficient tables keyed by position and position pair."""
        return {
            "seed": self.seed,
            "alphabet": "ACGT"[: self.n_letters],
            "linear": self.linear.tolist(),
            "pairs": [list(p) for p in self.pairs],
            "quadratic": self.quadratic.tolist(),
        }

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        codes = X.reshape(X.shape[0], self.length, self.n_letters).argmax(axis=2)
        return self.evaluate_codes(codes)


def build_seq_oracle(seed, length=5, n_letters=4, quadratic_scale=0.5):
    """Standard-normal coefficients from ``default_rng(seed)``; pairwise terms scaled."""
    rng = np.random.default_rng(seed)
    linear = rng.standard_normal((length, n_letters))
    n_pairs = length * (length - 1) // 2
    quadratic = quadratic_scale * rng.standard_normal((n_pairs, n_letters, n_letters))
    return SeqOracle(linear, quadratic, seed=seed)


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str = ACKLEY
    dim: int = 2
    michalewicz_m: int = 10
    seq_seed: int = 0

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise ValueError(f"unknown objective {self.kind!r}")

    @property
    def is_sequence(self):
        return self.kind == SEQ_LINEAR_QUADRATIC

    @property
    def range(self):
        return RANGES[self.kind]

    def oracle(self):
        return build_seq_oracle(self.seq_seed)

    def make_domain(self, cells_per_dim=64, length=5):
        if self.is_sequence:
            return SequenceDomain(length=length)
        lo, hi = self.range
        return GridDomain(lo, hi, cells_per_dim=cells_per_dim, dim=self.dim)

    def __call__(self, X):
        """Negated benchmark value (maximisation convention) at each row of X."""
        if self.is_sequence:
            return self.oracle()(X)
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == ACKLEY:
            return -ackley(X)
        if self.kind == MICHALEWICZ:
            return -michalewicz(X, self.michalewicz_m)
        if self.kind == RASTRIGIN:
            return -rastrigin(X)
        return -schwefel(X)


def evaluate(spec, point):
    """Objective at a single point: coordinates, a one-hot vector or a sequence string."""
    if spec.is_sequence:
        oracle = spec.oracle()
        if isinstance(point, str):
            return float(oracle.evaluate_codes([["ACGT".index(c) for c in point]])[0])
        return float(oracle(point)[0])
    x = np.asarray(point, dtype=float).reshape(1, -1)
    lo, hi = spec.range
    if x.shape[1] != spec.dim or np.any(x < lo) or np.any(x > hi):
        raise OutOfRange(f"{x.ravel().tolist()} outside [{lo}, {hi}]^{spec.dim}")
    return float(spec(x)[0])


@dataclass
class LandscapeStats:
    mean: float
    std: float
    min: float
    max: float
    quantiles: dict
    histogram: tuple
    argmax: int
    n_local_optima: int
    by_radius: dict

    def as_dict(self):
        return {
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "max": self.max,
            "quantiles": self.quantiles,
            "histogram": {"counts": list(self.histogram[0]), "edges": list(self.histogram[1])},
            "argmax": self.argmax,
            "n_local_optima": self.n_local_optima,
            "by_radius": self.by_radius,
        }


def fitness_landscape_stats(oracle, bins=20):
    """Exhaustive landscape summary of a sequence oracle.

    ``by_radius[h]`` summarises the fitness of all sequences at Hamming
    distance h (1..4) from the global optimum. Local optima are sequences no
    worse than every Hamming-1 neighbour.
    """
    domain = SequenceDomain(length=oracle.length, alphabet="ACGT"[: oracle.n_letters])
    f = oracle.evaluate_codes(domain.codes)
    best = int(np.argmax(f))
    H = domain.hamming
    neighbour_best = np.where(H == 1, f[None, :], -np.inf).max(axis=1)
    n_local = int(np.sum(f >= neighbour_best))
    counts, edges = np.histogram(f, bins=bins)
    by_radius = {}
    for h in range(1, 5):
        vals = f[H[best] == h]
        by_radius[h] = {
            "count": int(vals.size),
            "mean": float(vals.mean()),
            "min": float(vals.min()),
            "max": float(vals.max()),
        }
    return LandscapeStats(
        mean=float(f.mean()),
        std=float(f.std()),
        min=float(f.min()),
        max=float(f.max()),
        quantiles={q: float(np.quantile(f, q)) for q in (0.05, 0.25, 0.5, 0.75, 0.95)},
        histogram=(counts.tolist(), edges.tolist()),
        argmax=best,
        n_local_optima=n_local,
        by_radius=by_radius,
    )
