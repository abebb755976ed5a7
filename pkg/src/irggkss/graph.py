"""Graph representation over canonically ordered vertex pairs.

A graph on n vertices is a 0/1 vector of length N = n(n-1)/2.  Pairs are
ordered row-major lexicographically: (1,2), (1,3), ..., (1,n), (2,3), ...

Vertex ids are 1-based at the public boundary (``pair_index``, files) and
0-based everywhere else (arrays, ``Graph.edges``).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class GraphParseError(ValueError):
    """Malformed edge-list or label file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def num_pairs(n: int) -> int:
    return n * (n - 1) // 2


@lru_cache(maxsize=64)
def _triu(n: int) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = np.triu_indices(n, k=1)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based endpoint arrays (u, v), u < v, indexed by flat pair index."""
    return _triu(n)


def pair_index(u: int, v: int, n: int) -> int:
    """Flat index of the 1-based pair (u, v), u < v."""
    if not (1 <= u < v <= n):
        raise ValueError(f"need 1 <= u < v <= n, got u={u}, v={v}, n={n}")
    i, j = u - 1, v - 1
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def pair_from_index(s: int, n: int) -> tuple[int, int]:
    """Inverse of ``pair_index``; returns the 1-based pair."""
    N = num_pairs(n)
    if not (0 <= s < N):
        raise ValueError(f"pair index {s} out of range for n={n}")
    rows, cols = _triu(n)
    return int(rows[s]) + 1, int(cols[s]) + 1


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple undirected graph with integer vertex group labels.

    ``x`` holds one bit per vertex pair in canonical order; ``labels`` are
    group ids >= 1, one per vertex.
    """

    n: int
    x: np.ndarray
    labels: np.ndarray

    def __init__(self, n: int, x=None, labels=None):
        n = int(n)
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        N = num_pairs(n)
        if x is None:
            x = np.zeros(N, dtype=np.uint8)
        x = np.asarray(x)
        if x.shape != (N,):
            raise ValueError(f"edge vector must have length {N}, got {x.shape}")
        if x.size and not np.isin(x, (0, 1)).all():
            raise ValueError("edge vector must be 0/1")
        if labels is None:
            labels = np.ones(n, dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (n,):
            raise ValueError(f"labels must have length {n}")
        if n and labels.min() < 1:
            raise ValueError("group labels must be >= 1")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "x", _frozen(x.astype(np.uint8)))
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def N(self) -> int:
        return self.x.size

    @property
    def num_edges(self) -> int:
        return int(self.x.sum())

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.labels, other.labels)
        )

    def __hash__(self):
        return hash((self.n, self.x.tobytes(), self.labels.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.num_edges})"

    @classmethod
    def from_edges(cls, n: int, edges, labels=None) -> "Graph":
        """Build from 0-based (u, v) pairs; duplicates collapse."""
        x = np.zeros(num_pairs(n), dtype=np.uint8)
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if len(e):
            if (e[:, 0] == e[:, 1]).any():
                raise ValueError("self-loops are not allowed")
            if e.min() < 0 or e.max() >= n:
                raise ValueError("vertex id out of range")
            i = e.min(axis=1)
            j = e.max(axis=1)
            x[i * n - i * (i + 1) // 2 + (j - i - 1)] = 1
        return cls(n, x, labels)

    @classmethod
    def from_adjacency(cls, A, labels=None) -> "Graph":
        A = np.asarray(A)
        n = A.shape[0]
        rows, cols = _triu(n)
        return cls(n, (A[rows, cols] != 0).astype(np.uint8), labels)

    def with_labels(self, labels) -> "Graph":
        return Graph(self.n, self.x, labels)

    def edges(self) -> np.ndarray:
        """Sorted (m, 2) array of 0-based edges."""
        rows, cols = _triu(self.n)
        on = np.flatnonzero(self.x)
        return np.column_stack([rows[on], cols[on]])

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=np.uint8)
        rows, cols = _triu(self.n)
        A[rows, cols] = self.x
        A[cols, rows] = self.x
        return A

    def with_edge(self, s: int, b: int) -> "Graph":
        return with_edge(self, s, b)

    def flip(self, s: int) -> "Graph":
        return with_edge(self, s, 1 - int(self.x[s]))


def with_edge(g: Graph, s: int, b: int) -> Graph:
    """Return x^(s,b): g with pair s forced to bit b."""
    if not (0 <= s < g.N):
        raise ValueError(f"pair index {s} out of range for N={g.N}")
    if b not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    if g.x[s] == b:
        return g
    x = g.x.copy()
    x[s] = b
    return Graph(g.n, x, g.labels)


def degree_vector(g: Graph) -> np.ndarray:
    rows, cols = _triu(g.n)
    x = g.x.astype(np.int64)
    return np.bincount(rows, weights=x, minlength=g.n).astype(np.int64) + np.bincount(
        cols, weights=x, minlength=g.n
    ).astype(np.int64)


def _content_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def load_labels(path, n: int | None = None) -> np.ndarray:
    """One integer label (>= 1) per line; ``n`` checks the count when given."""
    labels = []
    for lineno, line in _content_lines(path):
        try:
            lab = int(line)
        except ValueError:
            raise GraphParseError(f"bad label {line!r}", lineno) from None
        if lab < 1:
            raise GraphParseError("labels must be >= 1", lineno)
        labels.append(lab)
    if n is not None and len(labels) != n:
        raise GraphParseError(f"expected {n} labels, found {len(labels)}")
    return np.array(labels, dtype=np.int64)


def load_graph(path, n: int, labels_path=None) -> Graph:
    """Read a whitespace-separated edge list with 1-based vertex ids."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    edges = []
    for lineno, line in _content_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise GraphParseError(f"expected 'u v', got {line!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(f"non-integer vertex id in {line!r}", lineno) from None
        if u == v:
            raise GraphParseError(f"self-loop at vertex {u}", lineno)
        if not (1 <= u <= n and 1 <= v <= n):
            raise GraphParseError(f"vertex id out of range 1..{n}", lineno)
        edges.append((u - 1, v - 1))
    labels = load_labels(labels_path, n) if labels_path is not None else None
    return Graph.from_edges(n, edges, labels)


def write_graph(g: Graph, path, labels_path=None) -> None:
    """Write sorted 1-based edges (LF endings); optionally the label file."""
    lines = [f"{u + 1} {v + 1}\n" for u, v in g.edges()]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)
    if labels_path is not None:
        with open(labels_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(f"{int(lab)}\n" for lab in g.labels)
