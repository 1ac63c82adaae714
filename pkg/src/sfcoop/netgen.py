"""Scale-free network generation (BA and DMS growth) and structural statistics.

Graphs are stored in compressed sparse row form: ``indices[indptr[i]:indptr[i+1]]``
holds the neighbours of node ``i`` in ascending order. Every generator draws
from a PCG64 stream seeded through ``numpy.random.SeedSequence(seed)``, so a
given seed yields the same graph on every platform.
"""

from __future__ import annotations

import io
import os
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp

from .errors import FormatError, ParameterError

BA = "BA"
DMS = "DMS"
MODELS = (BA, DMS)


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """PCG64 generator for ``seed`` (an int or an already-split SeedSequence)."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple undirected graph in CSR form."""

    indptr: np.ndarray
    indices: np.ndarray
    degree: np.ndarray = field(init=False)
    max_degree: int = field(init=False)

    def __post_init__(self) -> None:
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        degree = np.diff(indptr)
        for arr in (indptr, indices, degree):
            arr.setflags(write=False)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "max_degree", int(degree.max()) if degree.size else 0)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Build from an undirected edge iterable; neighbour lists come out sorted."""
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return cls(indptr, cols)

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(i).tolist() for i in range(self.node_count)]

    def edges(self) -> list[tuple[int, int]]:
        """Canonical edge list: pairs ``(i, j)`` with ``i < j`` in lexicographic order."""
        rows = self.rows
        keep = rows < self.indices
        return list(zip(rows[keep].tolist(), self.indices[keep].tolist()))

    @cached_property
    def rows(self) -> np.ndarray:
        """Source node of every CSR entry."""
        rows = np.repeat(np.arange(self.node_count), self.degree)
        rows.setflags(write=False)
        return rows

    @cached_property
    def sparse(self) -> sp.csr_matrix:
        """0/1 adjacency matrix."""
        data = np.ones(len(self.indices), dtype=np.float64)
        n = self.node_count
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(n, n))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self) -> int:
        return hash((self.indptr.tobytes(), self.indices.tobytes()))


@dataclass(frozen=True)
class GenParams:
    model: str = BA
    n: int = 5000
    m: int = 2
    m0: int | None = None  # BA seed clique size; defaults to m + 1
    seed: int = 0

    def __post_init__(self) -> None:
        model = str(self.model).upper()
        if model not in MODELS:
            raise ParameterError(f"model must be one of {MODELS}, got {self.model!r}")
        object.__setattr__(self, "model", model)
        if model == DMS:
            if self.m != 2:
                raise ParameterError(f"DMS growth fixes m = 2, got m = {self.m}")
            if self.n < 3:
                raise ParameterError(f"DMS requires n >= 3, got n = {self.n}")
            return
        if self.m0 is None:
            object.__setattr__(self, "m0", self.m + 1)
        if self.m < 1:
            raise ParameterError(f"BA requires m >= 1, got m = {self.m}")
        if self.m > self.m0:
            raise ParameterError(f"BA requires m <= m0, got m = {self.m}, m0 = {self.m0}")
        if self.n < self.m0:
            raise ParameterError(f"BA requires n > m0 (or n = m0 for the bare seed clique), "
                                 f"got n = {self.n}, m0 = {self.m0}")


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int
    max_degree: int
    mean_degree: float
    global_clustering: float
    mean_local_clustering: float
    degree_histogram: dict[int, int]

    def as_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "max_degree": self.max_degree,
            "mean_degree": self.mean_degree,
            "global_clustering": self.global_clustering,
            "mean_local_clustering": self.mean_local_clustering,
            "degree_histogram": {str(k): v for k, v in sorted(self.degree_histogram.items())},
        }


def preferential_targets(stubs: list[int] | np.ndarray, m: int,
                         rng: np.random.Generator) -> list[int]:
    """Draw ``m`` distinct nodes with probability proportional to degree.

    ``stubs`` lists every node once per incident edge. Draws are sequential
    and a node already picked for this step is rejected and redrawn, so all
    draws see the same degree snapshot.
    """
    n_stubs = len(stubs)
    chosen: list[int] = []
    while len(chosen) < m:
        t = int(stubs[int(rng.integers(n_stubs))])
        if t not in chosen:
            chosen.append(t)
    return chosen


def generate_ba(params: GenParams) -> Graph:
    if params.model != BA:
        raise ParameterError(f"generate_ba called with model {params.model}")
    n, m, m0 = params.n, params.m, params.m0
    rng = make_rng(params.seed)
    edges = [(i, j) for i in range(m0) for j in range(i + 1, m0)]
    stubs: list[int] = [v for e in edges for v in e]
    if not stubs:  # m0 == 1: a lone seed node has no degree to be proportional to
        stubs = [0]
    for new in range(m0, n):
        targets = preferential_targets(stubs, m, rng)
        if stubs == [0]:
            stubs = []
        for t in targets:
            edges.append((t, new))
            stubs.extend((t, new))
    return Graph.from_edges(n, edges)


def generate_dms(params: GenParams) -> Graph:
    if params.model != DMS:
        raise ParameterError(f"generate_dms called with model {params.model}")
    n = params.n
    if n < 3:
        raise ParameterError(f"DMS requires n >= 3, got n = {n}")
    rng = make_rng(params.seed)
    u = [0, 0, 1]
    v = [1, 2, 2]
    for new in range(3, n):
        k = int(rng.integers(len(u)))
        a, b = u[k], v[k]
        u.extend((a, b))
        v.extend((new, new))
    return Graph.from_edges(n, zip(u, v))


def generate(params: GenParams) -> Graph:
    return generate_ba(params) if params.model == BA else generate_dms(params)


def validate(g: Graph) -> None:
    """Raise ``ValueError`` unless ``g`` is symmetric, simple and connected."""
    n = g.node_count
    rows = g.rows
    if np.any(g.indices < 0) or np.any(g.indices >= n):
        raise ValueError("neighbour id out of range")
    if np.any(rows == g.indices):
        raise ValueError("self-loop")
    for i in range(n):
        nb = g.neighbors(i)
        if np.any(np.diff(nb) <= 0):
            raise ValueError(f"node {i}: neighbour list unsorted or duplicated")
    fwd = set(zip(rows.tolist(), g.indices.tolist()))
    if any((j, i) not in fwd for i, j in fwd):
        raise ValueError("adjacency is not symmetric")
    if n:
        ncomp, _ = sp.csgraph.connected_components(g.sparse, directed=False)
        if ncomp != 1:
            raise ValueError(f"graph has {ncomp} connected components")


def triangles_per_node(g: Graph) -> np.ndarray:
    a = g.sparse
    return np.asarray((a @ a).multiply(a).sum(axis=1)).ravel() / 2.0


def compute_stats(g: Graph) -> GraphStats:
    deg = g.degree.astype(np.float64)
    tri = triangles_per_node(g)
    wedges = deg * (deg - 1) / 2.0
    total_wedges = wedges.sum()
    transitivity = float(tri.sum() / total_wedges) if total_wedges > 0 else 0.0
    local = np.divide(tri, wedges, out=np.zeros_like(tri), where=wedges > 0)
    n = g.node_count
    return GraphStats(
        node_count=n,
        edge_count=g.edge_count,
        max_degree=g.max_degree,
        mean_degree=2.0 * g.edge_count / n if n else 0.0,
        global_clustering=transitivity,
        mean_local_clustering=float(local.mean()) if n else 0.0,
        degree_histogram=dict(sorted(Counter(g.degree.tolist()).items())),
    )


# -- edge-list files ---------------------------------------------------------

def format_edgelist(g: Graph) -> str:
    lines = [f"n={g.node_count}"]
    lines.extend(f"{i} {j}" for i, j in g.edges())
    return "\n".join(lines) + "\n"


def save_edgelist(g: Graph, destination: str | os.PathLike | TextIO) -> None:
    text = format_edgelist(g)
    if hasattr(destination, "write"):
        destination.write(text)
        return
    with open(destination, "w", newline="\n") as fh:
        fh.write(text)


def parse_edgelist(text: str) -> Graph:
    lines = text.splitlines()
    if not lines:
        raise FormatError(1, "empty file, expected header 'n=<count>'")
    header = lines[0].strip()
    if not header.startswith("n="):
        raise FormatError(1, f"expected header 'n=<count>', got {header!r}")
    try:
        n = int(header[2:])
    except ValueError:
        raise FormatError(1, f"bad node count in header {header!r}") from None
    if n < 1:
        raise FormatError(1, f"node count must be positive, got {n}")
    seen: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(lineno, f"expected two node ids, got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError(lineno, f"non-integer node id in {raw!r}") from None
        if i < 0 or j < 0 or i >= n or j >= n:
            raise FormatError(lineno, f"node id out of range for n={n}: {raw!r}")
        if i == j:
            raise FormatError(lineno, f"self-loop on node {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise FormatError(lineno, f"duplicate edge {key[0]} {key[1]}")
        seen.add(key)
    return Graph.from_edges(n, sorted(seen))


def load_edgelist(source: str | os.PathLike | TextIO) -> Graph:
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        return parse_edgelist(source.read())
    with open(source) as fh:
        return parse_edgelist(fh.read())
