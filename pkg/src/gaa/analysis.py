"""Theory-side diagnostics computed on raw graph data.

The discrepancy bound sums squared distances over all source-target node
pairs, in a topology term (rows of A X) and an attribute term (rows of X).
Raw adjacencies are used on purpose: the learner's normalization choices
must not leak into these quantities. The pairwise double sums expand to
moment form, so memory stays O(n d).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .featgraph import cosine_similarity_matrix, knn_graph
from .graphs import Graph


@dataclass(frozen=True)
class BoundReport:
    topo_term: float
    attr_term: float
    total: float
    normalization: int

    def to_dict(self):
        return {
            "topo_term": self.topo_term,
            "attr_term": self.attr_term,
            "total": self.total,
            "normalization": self.normalization,
        }


def _pairwise_sq_sum(u: np.ndarray, v: np.ndarray) -> float:
    # sum_{i,j} ||u_i - v_j||^2 without materializing the pairs
    nu, nv = u.shape[0], v.shape[0]
    return float(
        nv * (u * u).sum() + nu * (v * v).sum() - 2.0 * (u.sum(axis=0) @ v.sum(axis=0))
    )


def proposition1_bound(source: Graph, target: Graph, normalize_by: int | None = None) -> BoundReport:
    """Pairwise topology and attribute divergence between two graphs.

    ``normalize_by`` divides each term; it defaults to the target node count.
    """
    if source.dim != target.dim:
        raise DomainError(f"feature dims differ: {source.dim} vs {target.dim}")
    if normalize_by is None:
        normalize_by = target.n
    if normalize_by < 1:
        raise DomainError(f"normalize_by must be >= 1, got {normalize_by}")
    topo = _pairwise_sq_sum(source.adjacency @ source.features,
                            target.adjacency @ target.features) / normalize_by
    attr = _pairwise_sq_sum(source.features, target.features) / normalize_by
    return BoundReport(topo_term=topo, attr_term=attr, total=topo + attr,
                       normalization=int(normalize_by))


def avg_feature_value(graph: Graph, view: str, k: int | None = None) -> float:
    """Mean absolute entry of the propagated features.

    ``topology`` propagates over the raw adjacency; ``attribute`` propagates
    over the kNN feature-graph adjacency built with ``k`` neighbors.
    """
    if view == "topology":
        propagated = graph.adjacency @ graph.features
    elif view == "attribute":
        if k is None:
            raise DomainError("attribute view needs a neighbor count k")
        feat_adj = knn_graph(cosine_similarity_matrix(graph.features), k)
        propagated = feat_adj @ graph.features
    else:
        raise DomainError(f"view must be 'topology' or 'attribute', got {view!r}")
    return float(np.abs(propagated).mean())


def empirical_margin_loss(scores: np.ndarray, labels: np.ndarray, gamma: float) -> float:
    """Fraction of nodes whose true-class score fails to clear the best
    wrong class by more than ``gamma`` (ties count as failures)."""
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, c = scores.shape
    if labels.min() < 0 or labels.max() >= c:
        raise IndexError(f"label outside [0, {c})")
    true = scores[np.arange(n), labels]
    masked = scores.copy()
    masked[np.arange(n), labels] = -np.inf
    best_other = masked.max(axis=1)
    return float((true <= gamma + best_other).mean())
