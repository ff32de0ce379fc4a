"""The dual-channel network: per-view GCN encoders, attention embeddings,
cross-view refinement, label classifier, and a gradient-reversal domain head.

One parameter set processes both domains; that weight sharing is what makes
the alignment terms meaningful. Variants drop parts of the network:

  GAA      full model
  GAA1     no cross-view refinement (raw attention embeddings)
  GAA2     no alignment loss (attention path unused)
  GAA3     no alignment loss and no feature-graph channel
  GCN      source-only classifier on the topology view
  KNN_GCN  source-only classifier on the feature view
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .exceptions import DomainError, ShapeError
from .featgraph import ViewMatrices

VARIANTS = ("GAA", "GAA1", "GAA2", "GAA3", "GCN", "KNN_GCN")

# checkpoint payload order; also the order parameters are initialized in
FIELD_ORDER = ("W1_topo", "W2_topo", "W1_feat", "W2_feat",
               "Wq", "Wk", "Wv", "Wc", "bc", "Wd", "bd")

_FIELDS_BY_VARIANT = {
    "GAA": FIELD_ORDER,
    "GAA1": FIELD_ORDER,
    "GAA2": FIELD_ORDER,
    "GAA3": ("W1_topo", "W2_topo", "Wc", "bc", "Wd", "bd"),
    "GCN": ("W1_topo", "W2_topo", "Wc", "bc"),
    "KNN_GCN": ("W1_feat", "W2_feat", "Wc", "bc"),
}


@dataclass
class Hyper:
    hidden: int = 128
    embed: int = 16
    dropout: float = 0.5
    grl_lambda: float = 1.0
    relu_second_layer: bool = False

    def to_dict(self):
        return {
            "hidden": self.hidden,
            "embed": self.embed,
            "dropout": self.dropout,
            "grl_lambda": self.grl_lambda,
            "relu_second_layer": self.relu_second_layer,
        }


@dataclass
class GaaModel:
    variant: str
    k: int
    in_dim: int
    num_classes: int
    hyper: Hyper
    W1_topo: Optional[Tensor] = None
    W2_topo: Optional[Tensor] = None
    W1_feat: Optional[Tensor] = None
    W2_feat: Optional[Tensor] = None
    Wq: Optional[Tensor] = None
    Wk: Optional[Tensor] = None
    Wv: Optional[Tensor] = None
    Wc: Optional[Tensor] = None
    bc: Optional[Tensor] = None
    Wd: Optional[Tensor] = None
    bd: Optional[Tensor] = None

    def parameters(self) -> list[Tensor]:
        return [getattr(self, name) for name in FIELD_ORDER if getattr(self, name) is not None]

    def parameter_names(self) -> list[str]:
        return [name for name in FIELD_ORDER if getattr(self, name) is not None]

    @property
    def uses_topo_view(self) -> bool:
        return self.variant != "KNN_GCN"

    @property
    def uses_feat_view(self) -> bool:
        return self.variant in ("GAA", "GAA1", "GAA2", "KNN_GCN")


def _glorot(rng: np.random.Generator, rows: int, cols: int) -> Tensor:
    limit = np.sqrt(6.0 / (rows + cols))
    return ad.parameter(rng.uniform(-limit, limit, size=(rows, cols)))


def init_model(in_dim: int, num_classes: int, variant: str, k: int,
               hyper: Hyper, seed_seq: np.random.SeedSequence) -> GaaModel:
    """Glorot-uniform weights, zero biases.

    Each field draws from its own child stream (keyed by position in
    FIELD_ORDER), so a field shared between two variants initializes
    identically under the same seed.
    """
    if variant not in VARIANTS:
        raise DomainError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    h, e, c = hyper.hidden, hyper.embed, num_classes
    shapes = {
        "W1_topo": (in_dim, h), "W2_topo": (h, e),
        "W1_feat": (in_dim, h), "W2_feat": (h, e),
        "Wq": (e, e), "Wk": (e, e), "Wv": (e, e),
        "Wc": (e, c), "bc": (1, c),
        "Wd": (e, 1), "bd": (1, 1),
    }
    streams = seed_seq.spawn(len(FIELD_ORDER))
    model = GaaModel(variant=variant, k=k, in_dim=in_dim, num_classes=num_classes, hyper=hyper)
    for idx, name in enumerate(FIELD_ORDER):
        if name not in _FIELDS_BY_VARIANT[variant]:
            continue
        rows, cols = shapes[name]
        if name.startswith("b"):
            setattr(model, name, ad.parameter(np.zeros((rows, cols))))
        else:
            setattr(model, name, _glorot(np.random.default_rng(streams[idx]), rows, cols))
    return model


# ---------------------------------------------------------------------------
# network pieces


def gcn_encode(view_norm: Tensor, x: Tensor, w1: Tensor, w2: Tensor,
               dropout_rate: float, rng: np.random.Generator, training: bool,
               relu_second: bool = False) -> Tensor:
    """Two propagation layers; hidden ReLU + dropout, linear embedding layer."""
    hidden = ad.relu(ad.matmul(ad.matmul(view_norm, x), w1))
    hidden = ad.dropout(hidden, dropout_rate, rng, training)
    z = ad.matmul(ad.matmul(view_norm, hidden), w2)
    return ad.relu(z) if relu_second else z


def attention_embed(z: Tensor, wq: Tensor, wk: Tensor, wv: Tensor) -> Tensor:
    """Scaled dot-product attention over nodes in a shared latent space."""
    zt = ad.transpose(z)                       # e x n
    q = ad.matmul(wq, zt)
    k = ad.matmul(wk, zt)
    m = ad.matmul(wv, zt)
    scores = ad.scale(ad.matmul(ad.transpose(k), q), 1.0 / np.sqrt(z.cols))
    return ad.matmul(ad.row_softmax(scores), ad.transpose(m))


def cross_view_scores(z_f: Tensor, z: Tensor) -> Tensor:
    """Per-node agreement between the two views, mapped to [0, 1].

    Row i is (1 + cos(z_f[i], z[i])) / 2; rows with zero norm score 0.5.
    """
    if z_f.shape != z.shape:
        raise ShapeError(f"cross_view_scores: shapes {z_f.shape} and {z.shape} differ")
    num = ad.row_sum(ad.hadamard(z_f, z))
    sq = ad.hadamard(ad.row_sum(ad.hadamard(z_f, z_f)), ad.row_sum(ad.hadamard(z, z)))
    denom = ad.sqrt(ad.clip_min(sq, 1e-24))
    cos = ad.divide(num, denom)
    ones = ad.constant(np.ones((z.rows, 1)))
    return ad.scale(ad.add(cos, ones), 0.5)


def refine(att: Tensor, s: Tensor) -> Tensor:
    """Gate each attention row by its cross-view agreement score."""
    if s.shape != (att.rows, 1):
        raise ShapeError(f"refine: scores {s.shape} do not match {att.rows} rows")
    return ad.hadamard(att, s)


def classify(z: Tensor, wc: Tensor, bias: Tensor) -> Tensor:
    return ad.row_softmax(ad.add(ad.matmul(z, wc), bias))


def domain_discriminate(z: Tensor, grl_lambda: float, wd: Tensor, bias: Tensor) -> Tensor:
    """Probability of "source", with gradients reversed into the encoder."""
    return ad.sigmoid(ad.add(ad.matmul(ad.grad_reverse(z, grl_lambda), wd), bias))


@dataclass
class ForwardOutputs:
    z_s: Optional[Tensor] = None
    z_t: Optional[Tensor] = None
    z_s_f: Optional[Tensor] = None
    z_t_f: Optional[Tensor] = None
    att_s: Optional[Tensor] = None
    att_t: Optional[Tensor] = None
    att_s_f: Optional[Tensor] = None
    att_t_f: Optional[Tensor] = None
    scores_s: Optional[Tensor] = None
    scores_t: Optional[Tensor] = None
    probs_s: Optional[Tensor] = None
    probs_t: Optional[Tensor] = None
    dom_s: Optional[Tensor] = None
    dom_t: Optional[Tensor] = None


def forward_all(model: GaaModel, views_s: ViewMatrices, views_t: ViewMatrices,
                x_s: Tensor, x_t: Tensor, training: bool,
                rng: np.random.Generator) -> ForwardOutputs:
    """Run every branch the variant needs, in a fixed order.

    Dropout draws happen in encoder order (source topo, source feat, target
    topo, target feat), so equal seeds give bit-identical passes.
    """
    hy = model.hyper
    out = ForwardOutputs()
    variant = model.variant

    topo_s = ad.constant(views_s.topo_norm)
    topo_t = ad.constant(views_t.topo_norm)

    if variant == "KNN_GCN":
        out.z_s_f = gcn_encode(ad.constant(views_s.feat_norm), x_s, model.W1_feat, model.W2_feat,
                               hy.dropout, rng, training, hy.relu_second_layer)
        out.probs_s = classify(out.z_s_f, model.Wc, model.bc)
        return out

    out.z_s = gcn_encode(topo_s, x_s, model.W1_topo, model.W2_topo,
                         hy.dropout, rng, training, hy.relu_second_layer)
    if variant == "GCN":
        out.probs_s = classify(out.z_s, model.Wc, model.bc)
        return out

    with_feat = variant in ("GAA", "GAA1", "GAA2")
    if with_feat:
        out.z_s_f = gcn_encode(ad.constant(views_s.feat_norm), x_s, model.W1_feat, model.W2_feat,
                               hy.dropout, rng, training, hy.relu_second_layer)
    out.z_t = gcn_encode(topo_t, x_t, model.W1_topo, model.W2_topo,
                         hy.dropout, rng, training, hy.relu_second_layer)
    if with_feat:
        out.z_t_f = gcn_encode(ad.constant(views_t.feat_norm), x_t, model.W1_feat, model.W2_feat,
                               hy.dropout, rng, training, hy.relu_second_layer)

    if variant in ("GAA", "GAA1"):
        out.att_s = attention_embed(out.z_s, model.Wq, model.Wk, model.Wv)
        out.att_s_f = attention_embed(out.z_s_f, model.Wq, model.Wk, model.Wv)
        out.att_t = attention_embed(out.z_t, model.Wq, model.Wk, model.Wv)
        out.att_t_f = attention_embed(out.z_t_f, model.Wq, model.Wk, model.Wv)
        if variant == "GAA":
            out.scores_s = cross_view_scores(out.z_s_f, out.z_s)
            out.scores_t = cross_view_scores(out.z_t_f, out.z_t)
            out.att_s = refine(out.att_s, out.scores_s)
            out.att_s_f = refine(out.att_s_f, out.scores_s)
            out.att_t = refine(out.att_t, out.scores_t)
            out.att_t_f = refine(out.att_t_f, out.scores_t)

    out.probs_s = classify(out.z_s, model.Wc, model.bc)
    out.probs_t = classify(out.z_t, model.Wc, model.bc)
    out.dom_s = domain_discriminate(out.z_s, hy.grl_lambda, model.Wd, model.bd)
    out.dom_t = domain_discriminate(out.z_t, hy.grl_lambda, model.Wd, model.bd)
    return out


# ---------------------------------------------------------------------------
# checkpoints: one JSON header line, then little-endian float64 payloads
# in FIELD_ORDER


def save_model(model: GaaModel, path):
    names = model.parameter_names()
    header = {
        "format": "gaa-model-v1",
        "variant": model.variant,
        "k": model.k,
        "in_dim": model.in_dim,
        "num_classes": model.num_classes,
        "hyper": model.hyper.to_dict(),
        "tensors": [
            {"name": name, "rows": getattr(model, name).rows, "cols": getattr(model, name).cols}
            for name in names
        ],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for name in names:
            fh.write(np.ascontiguousarray(getattr(model, name).data, dtype="<f8").tobytes())


def load_model(path) -> GaaModel:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != "gaa-model-v1":
            raise DomainError(f"{path}: not a model checkpoint")
        if header["variant"] not in VARIANTS:
            raise DomainError(f"{path}: unknown variant {header['variant']!r}")
        model = GaaModel(
            variant=header["variant"],
            k=header["k"],
            in_dim=header["in_dim"],
            num_classes=header["num_classes"],
            hyper=Hyper(**header["hyper"]),
        )
        for spec in header["tensors"]:
            rows, cols = spec["rows"], spec["cols"]
            buf = fh.read(rows * cols * 8)
            if len(buf) != rows * cols * 8:
                raise DomainError(f"{path}: truncated payload for {spec['name']}")
            data = np.frombuffer(buf, dtype="<f8").reshape(rows, cols).copy()
            setattr(model, spec["name"], ad.parameter(data))
    return model
