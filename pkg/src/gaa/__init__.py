"""Attribute-driven graph domain adaptation at desk scale.

Submodules:
  autodiff   dense 2-D tensors with tape-based reverse-mode differentiation
  featgraph  cosine kNN feature graphs and propagation-matrix normalization
  graphs     data model, text formats, synthetic shift generators
  model      dual-channel encoders, attention refinement, classifier heads
  losses     the four objectives and their weighted sum
  train      Adam, the training loop, ablation variants, evaluation
  analysis   discrepancy bound, feature-value diagnostics, margin loss
  cli        command-line driver (train / eval / generate / bound /
             diagnose / sweep)
"""

from .graphs import DomainPair, Graph
from .losses import LossWeights
from .train import TrainConfig, evaluate, run_repeated, train_gaa

__all__ = [
    "DomainPair",
    "Graph",
    "LossWeights",
    "TrainConfig",
    "evaluate",
    "run_repeated",
    "train_gaa",
]

__version__ = "0.1.0"
