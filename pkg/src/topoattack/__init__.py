"""Topology attacks on graph convolutional networks and min-max robust training.

The package splits into a sparse core (:mod:`topoattack.sparse`), the GCN
model with manual gradients (:mod:`topoattack.gcn`), the attacks
(:mod:`topoattack.attacks`), adversarial training (:mod:`topoattack.robust`),
dataset plumbing (:mod:`topoattack.data`) and the benchmark CLI
(:mod:`topoattack.cli`).  Hot kernels live in :mod:`topoattack.kernels` with
numba and pure-numpy backends selected by ``TOPOATTACK_BACKEND``.
"""

from .attacks import (AttackBudget, AttackReport, PerturbationSet, dice_attack,
                      flip_scores, greedy_attack, zeroth_order_attack)
from .data import (DatasetManifest, Graph, load_dataset, make_splits,
                   pseudo_labels, save_dataset)
from .gcn import (GcnParams, LossContext, TrainConfig, adjacency_gradient,
                  cross_entropy, forward, init_params, misclassification,
                  predict, train_natural, weight_gradients)
from .kernels import BACKEND
from .robust import RobustTrainConfig, evaluate_robustness, robust_train
from .sparse import (SparseSym, build_adjacency, flip_distance, flip_edge,
                     flip_pairs, normalize_adjacency, spmm)
from .synth import planted_graph

__version__ = "0.1.0"

__all__ = [
    "AttackBudget", "AttackReport", "BACKEND", "DatasetManifest", "GcnParams",
    "Graph", "LossContext", "PerturbationSet", "RobustTrainConfig",
    "SparseSym", "TrainConfig", "adjacency_gradient", "build_adjacency",
    "cross_entropy", "dice_attack", "evaluate_robustness", "flip_distance",
    "flip_edge", "flip_pairs", "flip_scores", "forward", "greedy_attack",
    "init_params", "load_dataset", "make_splits", "misclassification",
    "normalize_adjacency", "planted_graph", "predict", "pseudo_labels",
    "robust_train", "save_dataset", "spmm", "train_natural",
    "weight_gradients", "zeroth_order_attack",
]
