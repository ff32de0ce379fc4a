"""Adam optimizer, the full-batch training loop, ablations, and evaluation.

One master seed drives everything through spawned substreams (parameter
init, dropout), so two runs with equal config are bit-identical and ablation
variants differ only where their structure differs. Target labels never
enter this module's loss path; they are read by ``evaluate`` alone.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from . import losses as L
from .exceptions import ConfigError, DomainError, NumericError
from .featgraph import build_views, cosine_similarity_matrix, knn_graph, sym_normalize
from .graphs import DomainPair, EpochLosses, Graph, RunMetrics
from .model import (
    GaaModel,
    Hyper,
    VARIANTS,
    classify,
    forward_all,
    gcn_encode,
    init_model,
)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    lr: float = 3e-4
    weight_decay: float = 1e-4
    dropout: float = 0.5
    k: int = 3
    weights: L.LossWeights = field(default_factory=L.LossWeights)
    grl_lambda: float = 1.0
    seed: int = 0
    variant: str = "GAA"
    hidden: int = 128
    embed: int = 16
    relu_second_layer: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")

    def hyper(self) -> Hyper:
        return Hyper(hidden=self.hidden, embed=self.embed, dropout=self.dropout,
                     grl_lambda=self.grl_lambda, relu_second_layer=self.relu_second_layer)

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "lr": self.lr,
            "weight_decay": self.weight_decay,
            "dropout": self.dropout,
            "k": self.k,
            "weights": self.weights.to_dict(),
            "grl_lambda": self.grl_lambda,
            "seed": self.seed,
            "variant": self.variant,
            "hidden": self.hidden,
            "embed": self.embed,
            "relu_second_layer": self.relu_second_layer,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
        kwargs = dict(doc)
        if "weights" in kwargs:
            wdoc = kwargs["weights"]
            wkeys = set(wdoc) - {"alpha", "beta", "tau"}
            if wkeys:
                raise ConfigError(f"unknown config key 'weights.{sorted(wkeys)[0]}'")
            kwargs["weights"] = L.LossWeights(**wdoc)
        return cls(**kwargs)


class AdamState:
    """First/second moments per parameter plus the shared step counter."""

    beta1 = 0.9
    beta2 = 0.999
    eps = 1e-8

    def __init__(self, params):
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]
        self.t = 0


def adam_step(params, state: AdamState, lr: float, weight_decay: float = 0.0):
    """Bias-corrected Adam with L2-style decay folded into the gradient.

    Gradients are zeroed after the update.
    """
    if len(params) != len(state.m):
        raise DomainError("optimizer state does not match parameter list")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1 ** state.t
    bias2 = 1.0 - b2 ** state.t
    for p, m, v in zip(params, state.m, state.v):
        if p.grad is None:
            raise DomainError("parameter without gradient buffer in adam_step")
        g = p.grad + weight_decay * p.data
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / bias1
        v_hat = v / bias2
        p.data -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
        p.zero_grad()


def _epoch_losses(model: GaaModel, out, labels_s, w: L.LossWeights):
    """Assemble the variant's loss graph; returns (total, L_S, L_A, L_D, L_T)."""
    zero = ad.constant([[0.0]])
    l_s = L.source_ce(out.probs_s, labels_s)
    variant = model.variant
    if variant in ("GCN", "KNN_GCN"):
        return l_s, l_s, zero, zero, zero
    l_d = L.domain_bce(out.dom_s, out.dom_t)
    l_t = L.target_entropy(out.probs_t)
    if variant in ("GAA2", "GAA3"):
        total = L.total_loss(zero, l_s, l_d, l_t, w)
        return total, l_s, zero, l_d, l_t
    l_a = L.alignment_loss(out.att_s, out.att_t, out.att_s_f, out.att_t_f)
    total = L.total_loss(l_a, l_s, l_d, l_t, w)
    return total, l_s, l_a, l_d, l_t


def train_gaa(pair: DomainPair, cfg: TrainConfig) -> tuple[GaaModel, RunMetrics]:
    """Full-batch training per the configured variant.

    View matrices are built once up front; every epoch runs one forward,
    one backward, and one optimizer step.
    """
    start = time.perf_counter()
    master = np.random.SeedSequence(cfg.seed)
    init_seq, dropout_seq = master.spawn(2)
    model = init_model(pair.source.dim, pair.num_classes, cfg.variant, cfg.k,
                       cfg.hyper(), init_seq)
    params = model.parameters()
    state = AdamState(params)

    views_s = build_views(pair.source.adjacency, pair.source.features, cfg.k)
    views_t = build_views(pair.target.adjacency, pair.target.features, cfg.k)
    x_s = ad.constant(pair.source.features)
    x_t = ad.constant(pair.target.features)
    labels_s = pair.source.labels

    dropout_rng = np.random.default_rng(dropout_seq)
    metrics = RunMetrics(seed=cfg.seed, epochs=cfg.epochs, config_echo=cfg.to_dict())
    for epoch in range(cfg.epochs):
        with ad.Tape() as tape:
            out = forward_all(model, views_s, views_t, x_s, x_t, True, dropout_rng)
            total, l_s, l_a, l_d, l_t = _epoch_losses(model, out, labels_s, cfg.weights)
            values = [t.item() for t in (total, l_s, l_a, l_d, l_t)]
            if not all(math.isfinite(v) for v in values):
                raise NumericError(f"non-finite loss at epoch {epoch}: {values}")
            ad.backward(total, tape)
            tape.clear()
        adam_step(params, state, cfg.lr, cfg.weight_decay)
        metrics.per_epoch.append(EpochLosses(
            epoch=epoch, loss_total=values[0], loss_S=values[1],
            loss_A=values[2], loss_D=values[3], loss_T=values[4],
        ))

    if pair.target.labels is not None:
        metrics.target_accuracy = evaluate(model, pair.target)
    metrics.wall_seconds = time.perf_counter() - start
    return model, metrics


def _embed_for_eval(model: GaaModel, graph: Graph):
    x = ad.constant(graph.features)
    rng = np.random.default_rng(0)  # never consumed: dropout is off in eval
    if model.variant == "KNN_GCN":
        feat_adj = knn_graph(cosine_similarity_matrix(graph.features), model.k)
        return gcn_encode(ad.constant(sym_normalize(feat_adj)), x,
                          model.W1_feat, model.W2_feat,
                          model.hyper.dropout, rng, False, model.hyper.relu_second_layer)
    return gcn_encode(ad.constant(sym_normalize(graph.adjacency)), x,
                      model.W1_topo, model.W2_topo,
                      model.hyper.dropout, rng, False, model.hyper.relu_second_layer)


def predict(model: GaaModel, graph: Graph) -> np.ndarray:
    """Class probabilities for every node, dropout disabled."""
    z = _embed_for_eval(model, graph)
    return classify(z, model.Wc, model.bc).data


def evaluate(model: GaaModel, graph: Graph) -> float:
    """Fraction of nodes whose argmax class (ties to the lowest index)
    matches the label."""
    if graph.labels is None:
        raise DomainError("evaluate needs a labeled graph")
    probs = predict(model, graph)
    predicted = probs.argmax(axis=1)
    return float((predicted == graph.labels).mean())


@dataclass
class RepeatedResult:
    mean_acc: float
    std_acc: float
    accuracies: list[float]
    metrics: list[RunMetrics]


def run_repeated(pair: DomainPair, cfg: TrainConfig, n_runs: int = 5) -> RepeatedResult:
    """Train with seeds cfg.seed .. cfg.seed + n_runs - 1; sample std (0 for one run)."""
    if n_runs < 1:
        raise ConfigError(f"n_runs must be >= 1, got {n_runs}")
    accs = []
    all_metrics = []
    for offset in range(n_runs):
        _, metrics = train_gaa(pair, replace(cfg, seed=cfg.seed + offset))
        if metrics.target_accuracy is None:
            raise DomainError("run_repeated needs a labeled target graph")
        accs.append(metrics.target_accuracy)
        all_metrics.append(metrics)
    mean = float(np.mean(accs))
    std = float(np.std(accs, ddof=1)) if n_runs > 1 else 0.0
    return RepeatedResult(mean_acc=mean, std_acc=std, accuracies=accs, metrics=all_metrics)
