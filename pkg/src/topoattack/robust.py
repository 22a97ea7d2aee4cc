"""Min-max adversarial training: alternate a topology attack on the training
loss with one plain gradient step on the weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .attacks import AttackBudget, dice_attack, greedy_attack, zeroth_order_attack
from .data import Graph
from .gcn import (GcnParams, cross_entropy, forward, init_params,
                  misclassification, weight_gradients)
from .sparse import SparseSym

InnerAttack = Union[str, Callable]


@dataclass(frozen=True)
class RobustTrainConfig:
    iterations: int = 1000
    learning_rate: float = 0.01
    budget: AttackBudget = AttackBudget(0, 1)
    inner_attack: InnerAttack = "gta"   # "gta", "zo-gta", "none", or a callable
    hidden: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


def _resolve_inner(config: RobustTrainConfig) -> Callable:
    """Returns attack(graph, params, rng) -> perturbed adjacency.

    Any callable with that signature is accepted as long as it returns a
    matrix inside the constraint set; the built-ins restart from the clean
    adjacency every call and maximize the training-mask loss.
    """
    if callable(config.inner_attack):
        return config.inner_attack

    def run_gta(graph, params, rng):
        report = greedy_attack(graph, params, config.budget,
                               graph.train_idx, graph.labels)
        return report.a_prime

    def run_zo(graph, params, rng):
        report = zeroth_order_attack(graph, params, config.budget,
                                     graph.train_idx, graph.labels,
                                     seed=int(rng.integers(2 ** 63)))
        return report.a_prime

    def run_none(graph, params, rng):
        return graph.adjacency

    table = {"gta": run_gta, "zo-gta": run_zo, "none": run_none}
    if config.inner_attack not in table:
        raise ValueError(f"unknown inner attack {config.inner_attack!r}")
    return table[config.inner_attack]


def _check_constraint(a_prime: SparseSym, clean: SparseSym, max_edges: int):
    if a_prime.n != clean.n or not a_prime.binary:
        raise ValueError("inner attack returned a matrix outside the constraint set")
    differing = np.setxor1d(a_prime.codes(), clean.codes(), assume_unique=True)
    if differing.shape[0] > 2 * max_edges:
        raise ValueError(
            f"inner attack flipped {differing.shape[0]} entries, "
            f"budget allows {2 * max_edges}")


def robust_train(graph: Graph, config: RobustTrainConfig) -> GcnParams:
    """Alternating worst-case-graph / weight-step training.

    Per iteration the inner attack perturbs the clean adjacency against the
    current weights on the training loss, then the weights take one bare
    gradient step on that perturbed graph.  With a zero budget the
    trajectory is exactly plain gradient descent.  Deterministic given
    config.seed.
    """
    if graph.train_idx is None or graph.train_idx.shape[0] == 0:
        raise ValueError("robust training requires a nonempty train mask")
    rng = np.random.default_rng(config.seed)
    params = init_params(graph.feature_count, config.hidden,
                         graph.class_count, rng)
    if config.iterations == 0:
        return params

    inner = _resolve_inner(config)
    mask = graph.train_idx
    labels = graph.labels[mask]
    w1, w2 = params.w1.copy(), params.w2.copy()
    for t in range(config.iterations):
        current = GcnParams(w1=w1, w2=w2)
        a_prime = inner(graph, current, rng)
        _check_constraint(a_prime, graph.adjacency, config.budget.max_edges)
        ctx = forward(a_prime, graph.features, current, mask, labels)
        loss = cross_entropy(ctx)
        if not np.isfinite(loss):
            raise RuntimeError(
                f"robust training diverged at iteration {t}: loss={loss}")
        dw1, dw2 = weight_gradients(ctx, current)
        w1 = w1 - config.learning_rate * dw1
        w2 = w2 - config.learning_rate * dw2
    return GcnParams(w1=w1, w2=w2)


def evaluate_robustness(params: GcnParams, graph: Graph, attacks,
                        budget: AttackBudget, seeds) -> dict:
    """Misclassification of a fixed model under each attack, over seeds.

    ``attacks`` is a list of method names from {"clean", "gta", "zo-gta",
    "dice"}.  Evaluation attacks use pseudo-labels on the test mask (the
    model's own predictions, truth on the train mask); misclassification is
    always measured against ground truth.
    """
    from .data import pseudo_labels  # local import avoids a cycle

    if graph.test_idx is None:
        raise ValueError("evaluation requires a test mask")
    labels_for_attack = pseudo_labels(graph, params)
    rows = {}
    for method in attacks:
        per_seed = []
        for seed in seeds:
            if method == "clean":
                mis = misclassification(params, graph, graph.test_idx)
            elif method == "gta":
                rep = greedy_attack(graph, params, budget,
                                    graph.test_idx, labels_for_attack)
                mis = rep.misclassification
            elif method == "zo-gta":
                rep = zeroth_order_attack(graph, params, budget,
                                          graph.test_idx, labels_for_attack,
                                          seed=seed)
                mis = rep.misclassification
            elif method == "dice":
                rep = dice_attack(graph, labels_for_attack, budget.max_edges,
                                  seed=seed, victim_params=params)
                mis = rep.misclassification
            else:
                raise ValueError(f"unknown attack method {method!r}")
            per_seed.append(mis)
        arr = np.asarray(per_seed, dtype=np.float64)
        rows[method] = {
            "per_seed": per_seed,
            "mean": float(arr.mean()),
            "std": float(arr.std(ddof=1)) if arr.shape[0] > 1 else 0.0,
        }
    return rows
