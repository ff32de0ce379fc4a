"""Attribute-view graph construction and propagation-matrix normalization.

The attribute view connects each node to its k most cosine-similar peers;
both the original topology and this kNN graph are symmetrically normalized
(with self-loops by default) before message passing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

SYMMETRY_TOL = 1e-12


def cosine_similarity_matrix(x: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity of rows; zero-norm rows score 0 everywhere."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.sqrt((x * x).sum(axis=1))
    nonzero = norms > 0.0
    safe = np.where(nonzero, norms, 1.0)
    unit = x / safe[:, None]
    sim = unit @ unit.T
    sim = (sim + sim.T) / 2.0
    np.clip(sim, -1.0, 1.0, out=sim)
    sim[~nonzero, :] = 0.0
    sim[:, ~nonzero] = 0.0
    sim[np.diag_indices_from(sim)] = np.where(nonzero, 1.0, 0.0)
    return sim


def knn_graph(sim: np.ndarray, k: int) -> np.ndarray:
    """0/1 adjacency linking each node to its k most similar other nodes.

    Self-edges are excluded, ties break toward the lower node index, and the
    result is the union of both endpoints' selections (so it is symmetric
    with zero diagonal).
    """
    sim = np.asarray(sim, dtype=np.float64)
    n = sim.shape[0]
    if not 1 <= k <= n - 1:
        raise DomainError(f"k must be in [1, {n - 1}] for {n} nodes, got {k}")
    scores = sim.copy()
    np.fill_diagonal(scores, -np.inf)
    # stable argsort on -score keeps ascending index order among ties
    order = np.argsort(-scores, axis=1, kind="stable")
    adj = np.zeros((n, n))
    rows = np.repeat(np.arange(n), k)
    cols = order[:, :k].reshape(-1)
    adj[rows, cols] = 1.0
    return np.maximum(adj, adj.T)


def sym_normalize(adj: np.ndarray, add_self_loops: bool = True) -> np.ndarray:
    """D^{-1/2} (A [+ I]) D^{-1/2} with degrees taken after the optional loops.

    Without self-loops, zero-degree rows are left all-zero rather than
    divided.
    """
    adj = np.asarray(adj, dtype=np.float64)
    if np.any(adj < 0.0):
        raise DomainError("sym_normalize needs a non-negative adjacency")
    a = adj + np.eye(adj.shape[0]) if add_self_loops else adj
    deg = a.sum(axis=1)
    with np.errstate(divide="ignore"):
        dinv = np.where(deg > 0.0, 1.0 / np.sqrt(deg), 0.0)
    return np.multiply.outer(dinv, dinv) * a


@dataclass(frozen=True)
class ViewMatrices:
    """Normalized propagation matrices for the two message-passing views."""

    topo_norm: np.ndarray
    feat_norm: np.ndarray
    k: int

    def __post_init__(self):
        for name, m in (("topo_norm", self.topo_norm), ("feat_norm", self.feat_norm)):
            if np.abs(m - m.T).max() > SYMMETRY_TOL:
                raise DomainError(f"{name} is not symmetric")
            if np.any(m < 0.0):
                raise DomainError(f"{name} has negative entries")


def build_views(adjacency: np.ndarray, features: np.ndarray, k: int,
                add_self_loops: bool = True) -> ViewMatrices:
    feat_adj = knn_graph(cosine_similarity_matrix(features), k)
    return ViewMatrices(
        topo_norm=sym_normalize(adjacency, add_self_loops),
        feat_norm=sym_normalize(feat_adj, add_self_loops),
        k=k,
    )
