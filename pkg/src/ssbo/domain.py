"""Finite search domains: box grids and fixed-length DNA sequences."""

import itertools
from functools import cached_property

import numpy as np

from .exceptions import DimensionMismatch

DNA = "ACGT"


class GridDomain:
    """Cell centres of a regular grid over ``[lo, hi]^d``, row-major order."""

    kind = "grid"

    def __init__(self, lo, hi, cells_per_dim=64, dim=None):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if dim is not None:
            lo = np.broadcast_to(lo, (dim,)).copy()
            hi = np.broadcast_to(hi, (dim,)).copy()
        if lo.shape != hi.shape:
            raise DimensionMismatch("lo and hi must have the same length")
        if np.any(hi <= lo):
            raise ValueError("hi must exceed lo in every dimension")
        if cells_per_dim < 1:
            raise ValueError("cells_per_dim must be positive")
        self.lo = lo
        self.hi = hi
        self.cells_per_dim = int(cells_per_dim)

    def __repr__(self):
        return (
            f"GridDomain(lo={self.lo.tolist()}, hi={self.hi.tolist()}, "
            f"cells_per_dim={self.cells_per_dim})"
        )

    @property
    def dim(self):
        return self.lo.shape[0]

    @property
    def shape(self):
        return (self.cells_per_dim,) * self.dim

    @property
    def size(self):
        return self.cells_per_dim**self.dim

    @property
    def cell_width(self):
        return (self.hi - self.lo) / self.cells_per_dim

    @property
    def side(self):
        return self.hi - self.lo

    @cached_property
    def axes(self):
        """Per-dimension cell-centre coordinates."""
        k = np.arange(self.cells_per_dim) + 0.5
        return [self.lo[i] + k * self.cell_width[i] for i in range(self.dim)]

    @cached_property
    def points(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        pts.flags.writeable = False
        return pts

    @property
    def features(self):
        return self.points

    def label(self, index):
        return ";".join(repr(float(c)) for c in self.points[index])

    def enumerate(self):
        return [(i, self.points[i], self.label(i)) for i in range(self.size)]

    def nearest_index(self, X):
        """Index of the nearest cell centre; exact ties go to the lower index."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise DimensionMismatch(f"expected dimension {self.dim}, got {X.shape[1]}")
        n = self.cells_per_dim
        flat = np.zeros(X.shape[0], dtype=np.int64)
        for i in range(self.dim):
            u = (X[:, i] - self.lo[i]) / self.cell_width[i] - 0.5
            lower = np.clip(np.floor(u), 0, n - 1)
            upper = np.clip(lower + 1, 0, n - 1)
            # Round-half-down with a small tolerance for floating-point ties.
            take_upper = (u - lower) > 0.5 + 1e-9
            k = np.where(take_upper, upper, lower).astype(np.int64)
            flat = flat * n + k
        return flat


class SequenceDomain:
    """All sequences of a fixed length over an alphabet, lexicographic order."""

    kind = "sequence"

    def __init__(self, length=5, alphabet=DNA):
        if length < 1:
            raise ValueError("length must be positive")
        self.length = int(length)
        self.alphabet = str(alphabet)

    def __repr__(self):
        return f"SequenceDomain(length={self.length}, alphabet={self.alphabet!r})"

    @property
    def n_letters(self):
        return len(self.alphabet)

    @property
    def size(self):
        return self.n_letters**self.length

    @property
    def dim(self):
        return self.length * self.n_letters

    @cached_property
    def codes(self):
        """Integer letter codes, shape ``(size, length)``."""
        codes = np.array(
            list(itertools.product(range(self.n_letters), repeat=self.length)),
            dtype=np.int64,
        )
        codes.flags.writeable = False
        return codes

    @cached_property
    def features(self):
        onehot = np.zeros((self.size, self.length, self.n_letters))
        rows = np.arange(self.size)[:, None]
        pos = np.arange(self.length)[None, :]
        onehot[rows, pos, self.codes] = 1.0
        onehot = onehot.reshape(self.size, self.dim)
        onehot.flags.writeable = False
        return onehot

    @property
    def points(self):
        return self.features

    @cached_property
    def hamming(self):
        """Pairwise Hamming distances, shape ``(size, size)``."""
        h = np.zeros((self.size, self.size), dtype=np.int8)
        for p in range(self.length):
            col = self.codes[:, p]
            h += col[:, None] != col[None, :]
        h.flags.writeable = False
        return h

    def label(self, index):
        return "".join(self.alphabet[c] for c in self.codes[index])

    def index_of(self, seq):
        idx = 0
        for ch in seq:
            idx = idx * self.n_letters + self.alphabet.index(ch)
        return idx

    def encode(self, seq):
        return self.features[self.index_of(seq)]

    def enumerate(self):
        return [(i, self.features[i], self.label(i)) for i in range(self.size)]

    def nearest_index(self, X):
        """Nearest valid one-hot encoding: per-position argmax, ties to lower letter."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise DimensionMismatch(f"expected dimension {self.dim}, got {X.shape[1]}")
        blocks = X.reshape(X.shape[0], self.length, self.n_letters)
        best = blocks.max(axis=2, keepdims=True)
        # first letter within tolerance of the maximum
        codes = np.argmax(blocks >= best - 1e-12, axis=2)
        flat = np.zeros(X.shape[0], dtype=np.int64)
        for p in range(self.length):
            flat = flat * self.n_letters + codes[:, p]
        return flat


def argmax_truth(domain, objective):
    """Exact maximiser of ``objective`` over the enumeration, lowest index on ties.

    ``objective`` is either a callable over feature rows or a precomputed
    vector of values aligned with the domain.
    """
    values = objective(domain.points) if callable(objective) else np.asarray(objective)
    if values.shape[0] != domain.size:
        raise DimensionMismatch("objective values do not cover the domain")
    idx = int(np.argmax(values))
    return idx, float(values[idx])
