"""The four training objectives and their weighted combination.

The alignment term compares per-domain mean embeddings in each view, which
stays well-typed when the two graphs have different node counts. The domain
term enters the total with a positive weight; the gradient-reversal layer
inside the discriminator's input realizes the adversarial direction, so no
sign flip happens here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .exceptions import DomainError, ShapeError

PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 0.5
    beta: float = 0.01
    tau: float = 0.1

    def __post_init__(self):
        for name in ("alpha", "beta", "tau"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"loss weight {name} must be finite and >= 0, got {v}")

    def to_dict(self):
        return {"alpha": self.alpha, "beta": self.beta, "tau": self.tau}


def source_ce(probs: Tensor, labels: np.ndarray) -> Tensor:
    """Mean negative log-probability of the true class, clamped before log."""
    labels = np.asarray(labels, dtype=np.int64)
    n, c = probs.shape
    if len(labels) != n:
        raise ShapeError(f"{len(labels)} labels for {n} prediction rows")
    if labels.min() < 0 or labels.max() >= c:
        raise IndexError(f"label outside [0, {c}) in source cross-entropy")
    onehot = np.zeros((n, c))
    onehot[np.arange(n), labels] = 1.0
    picked = ad.hadamard(ad.log(ad.clip_min(probs, PROB_CLAMP)), ad.constant(onehot))
    return ad.scale(ad.sum_all(picked), -1.0 / n)


def alignment_loss(att_s: Tensor, att_t: Tensor, att_s_f: Tensor, att_t_f: Tensor) -> Tensor:
    """Squared distance between domain mean embeddings, summed over views."""
    cols = {att_s.cols, att_t.cols, att_s_f.cols, att_t_f.cols}
    if len(cols) != 1:
        raise ShapeError(f"alignment_loss: embedding widths differ: {sorted(cols)}")
    topo = ad.sq_l2(ad.sub(ad.mean_rows(att_s), ad.mean_rows(att_t)))
    feat = ad.sq_l2(ad.sub(ad.mean_rows(att_s_f), ad.mean_rows(att_t_f)))
    return ad.add(topo, feat)


def domain_bce(dom_s: Tensor, dom_t: Tensor) -> Tensor:
    """Binary cross-entropy with source=1, target=0, averaged over all nodes."""
    n = dom_s.rows + dom_t.rows
    from_s = ad.sum_all(ad.log(ad.clip_min(dom_s, PROB_CLAMP)))
    ones = ad.constant(np.ones(dom_t.shape))
    from_t = ad.sum_all(ad.log(ad.clip_min(ad.sub(ones, dom_t), PROB_CLAMP)))
    return ad.scale(ad.add(from_s, from_t), -1.0 / n)


def target_entropy(probs_t: Tensor) -> Tensor:
    """Mean prediction entropy on target nodes (nats)."""
    plogp = ad.hadamard(probs_t, ad.log(ad.clip_min(probs_t, PROB_CLAMP)))
    return ad.scale(ad.sum_all(plogp), -1.0 / probs_t.rows)


def total_loss(l_a: Tensor, l_s: Tensor, l_d: Tensor, l_t: Tensor, w: LossWeights) -> Tensor:
    for name, term in (("L_A", l_a), ("L_S", l_s), ("L_D", l_d), ("L_T", l_t)):
        if term.shape != (1, 1):
            raise ShapeError(f"{name} must be scalar, got {term.shape}")
    out = ad.add(l_a, ad.scale(l_s, w.alpha))
    out = ad.add(out, ad.scale(l_d, w.beta))
    return ad.add(out, ad.scale(l_t, w.tau))
