"""Directed weighted communication graphs and their spectral constants."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Digraph:
    """Weighted digraph on ``n_nodes`` nodes.

    ``adjacency[i, j] > 0`` means node ``i`` receives information from node
    ``j`` (edge ``(j, i)``).
    """

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise GraphError(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise GraphError("adjacency contains non-finite entries")
        if np.any(a < 0):
            raise GraphError("adjacency entries must be nonnegative")
        if np.any(np.diag(a) != 0):
            raise GraphError("adjacency diagonal must be zero")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def from_edges(cls, n_nodes: int, edges, weight: float = 1.0) -> "Digraph":
        """Build from ``(source, target)`` pairs, 0-based."""
        a = np.zeros((n_nodes, n_nodes))
        for j, i in edges:
            a[i, j] = weight
        return cls(a)


def laplacian(g: Digraph) -> np.ndarray:
    a = g.adjacency
    lap = -a.copy()
    # row sums of -a are exact negatives of the degrees, so diagonal fill keeps rows at zero
    np.fill_diagonal(lap, a.sum(axis=1))
    return lap


def is_balanced(g: Digraph, rtol: float = 1e-12) -> bool:
    a = g.adjacency
    scale = a.max() if a.size else 0.0
    if scale == 0.0:
        return True
    return bool(np.all(np.abs(a.sum(axis=1) - a.sum(axis=0)) <= rtol * scale))


def _reachable(adj_out: np.ndarray, root: int) -> np.ndarray:
    seen = np.zeros(adj_out.shape[0], dtype=bool)
    seen[root] = True
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj_out[u]):
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return seen


def has_spanning_tree(adjacency: np.ndarray) -> bool:
    """True iff some node reaches every other node along directed edges."""
    # edge (j, i) exists when a_ij > 0, so out-neighbours of j are rows i of column j
    adj_out = (np.asarray(adjacency) > 0).T
    return any(_reachable(adj_out, r).all() for r in range(adj_out.shape[0]))


@dataclass(frozen=True)
class SpectralConstants:
    lambda_max: float
    lambda_min2: float
    kappa: float


@dataclass(frozen=True)
class TopologyEnsemble:
    graphs: tuple
    laplacians: tuple = field(init=False)
    union_laplacian: np.ndarray = field(init=False)

    def __post_init__(self):
        graphs = tuple(g if isinstance(g, Digraph) else Digraph(g) for g in self.graphs)
        if not graphs:
            raise GraphError("ensemble needs at least one graph")
        n = graphs[0].n_nodes
        if any(g.n_nodes != n for g in graphs):
            raise GraphError("all graphs in an ensemble must share the node set")
        laps = tuple(laplacian(g) for g in graphs)
        for lap in laps:
            lap.setflags(write=False)
        union = np.sum(laps, axis=0)
        union.setflags(write=False)
        object.__setattr__(self, "graphs", graphs)
        object.__setattr__(self, "laplacians", laps)
        object.__setattr__(self, "union_laplacian", union)

    @property
    def n_nodes(self) -> int:
        return self.graphs[0].n_nodes

    @property
    def size(self) -> int:
        return len(self.graphs)

    @property
    def union_adjacency(self) -> np.ndarray:
        return np.sum([g.adjacency for g in self.graphs], axis=0)

    def all_balanced(self) -> bool:
        return all(is_balanced(g) for g in self.graphs)


def union_has_spanning_tree(e: TopologyEnsemble) -> bool:
    return has_spanning_tree(e.union_adjacency)


def consensus_projector(n: int) -> np.ndarray:
    """M = I - (1/N) 11^T."""
    return np.eye(n) - np.full((n, n), 1.0 / n)


def spectral_constants(e: TopologyEnsemble) -> SpectralConstants:
    """Spectral quantities of the union Laplacian used by both synthesis routines.

    Only symmetric eigensolves are used: ``L^T L`` for ``lambda_max``,
    ``L + L^T`` for ``lambda_min2`` and ``M^2`` for ``kappa``.
    """
    lun = e.union_laplacian
    n = e.n_nodes
    try:
        gram = lun.T @ lun
        lam_max = float(np.linalg.eigvalsh(0.5 * (gram + gram.T))[-1])
        sym_eigs = np.linalg.eigvalsh(lun + lun.T)
        m = consensus_projector(n)
        m2 = m @ m
        kappa = float(np.linalg.eigvalsh(0.5 * (m2 + m2.T))[-1])
    except np.linalg.LinAlgError as exc:
        raise GraphError(f"eigensolve failed: {exc}") from exc
    lam_min2 = float(sym_eigs[1]) if n >= 2 else 0.0
    if n >= 2:
        # M is an exact projector; strip the round-off so downstream bounds use 1
        kappa = 1.0 if abs(kappa - 1.0) < 1e-12 else kappa
    return SpectralConstants(lambda_max=max(lam_max, 0.0), lambda_min2=lam_min2, kappa=kappa)


def ensemble_from_adjacencies(adjacencies: Sequence[np.ndarray]) -> TopologyEnsemble:
    return TopologyEnsemble(tuple(Digraph(a) for a in adjacencies))
