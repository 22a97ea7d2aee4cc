"""Topology attacks: gradient-guided greedy flips, loss-only random search,
and the delete-internal/connect-external baseline.

All attacks operate on upper-triangle pairs and mirror every flip, so the
perturbed adjacency stays binary, symmetric and diagonal-free, and the
entrywise distance to the clean graph is twice the number of net flips.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .data import Graph
from .gcn import GcnParams, adjacency_gradient, cross_entropy, forward, misclassification
from .sparse import SparseSym, flip_pairs

DEFAULT_REJECT_CAP = 500


@dataclass(frozen=True)
class AttackBudget:
    """Edge budget: at most ``max_edges`` flips, ``step_edges`` per iteration."""

    max_edges: int
    step_edges: int

    def __post_init__(self):
        if self.max_edges < 0:
            raise ValueError(f"max_edges must be >= 0, got {self.max_edges}")
        if self.step_edges < 1:
            raise ValueError(f"step_edges must be >= 1, got {self.step_edges}")


@dataclass
class PerturbationSet:
    """Applied flips in order, plus the set of pairs ever touched."""

    flips: list = field(default_factory=list)
    record: set = field(default_factory=set)

    def net_pairs(self) -> set:
        """Pairs flipped an odd number of times (= entries that differ)."""
        net = set()
        for pair in self.flips:
            net.symmetric_difference_update({pair})
        return net

    def to_text(self) -> str:
        return "".join(f"{i} {j}\n" for i, j in self.flips)

    @classmethod
    def from_text(cls, text: str) -> "PerturbationSet":
        flips = [tuple(int(t) for t in line.split())
                 for line in text.splitlines() if line.strip()]
        return cls(flips=flips, record=set(flips))


@dataclass
class AttackReport:
    method: str
    a_prime: SparseSym
    perturbation: PerturbationSet
    loss_trace: list
    wall_clock: float
    misclassification: float | None
    budget: AttackBudget
    seed: int | None = None
    flags: dict = field(default_factory=dict)


def flip_scores(grad: np.ndarray, a_prime: SparseSym, out=None) -> np.ndarray:
    """Elementwise product of the gradient with (1 - 2 A').

    Positive score means flipping that entry raises the loss to first order:
    the sign flips on existing edges so "insert" and "remove" score alike.
    Pass ``out=grad`` to overwrite the gradient instead of copying.
    """
    n = a_prime.n
    if grad.shape != (n, n):
        raise ValueError(f"gradient shape {grad.shape} != ({n}, {n})")
    if not a_prime.binary:
        raise ValueError("flip_scores expects a binary adjacency")
    if out is None:
        out = grad.copy()
    elif out is not grad:
        out[...] = grad
    out[a_prime.rows(), a_prime.indices] *= -1.0
    return out


def _ordered_top_pairs(score: np.ndarray, excluded_codes: np.ndarray, k: int):
    """The k best eligible upper-triangle pairs by coupled score.

    Ordering is score descending, ties toward the lexicographically smaller
    (i, j).  Returns fewer than k pairs when candidates run out.
    """
    vals, rows, cols = kernels.topk_pairs_upper(score, excluded_codes, k)
    if vals.shape[0] == 0:
        return [], np.empty(0)
    order = np.lexsort((cols, rows, -vals.astype(np.float64)))[:k]
    pairs = [(int(rows[t]), int(cols[t])) for t in order]
    return pairs, vals[order]


def _report_mask(graph: Graph, fallback) -> np.ndarray:
    if graph.test_idx is not None and graph.test_idx.shape[0] > 0:
        return graph.test_idx
    return np.asarray(fallback, dtype=np.int64)


def greedy_attack(graph: Graph, params: GcnParams, budget: AttackBudget,
                  attack_mask, attack_labels) -> AttackReport:
    """Gradient-guided greedy edge flips.

    Each iteration computes the adjacency gradient of the masked loss, scores
    every upper-triangle pair by the coupled flip score, flips the best
    still-untouched pairs (at most ``step_edges``, never beyond the budget),
    and repeats until the budget is spent or candidates run out.
    """
    attack_mask = np.asarray(attack_mask, dtype=np.int64)
    attack_labels = np.asarray(attack_labels, dtype=np.int64)
    t0 = time.perf_counter()
    a_prime = graph.adjacency
    perturbation = PerturbationSet()
    loss_trace = []
    flags = {"exhausted": False, "nonpositive_selected": 0}
    n = graph.n

    while len(perturbation.flips) < budget.max_edges:
        ctx = forward(a_prime, graph.features, params,
                      attack_mask, attack_labels[attack_mask])
        loss_trace.append(cross_entropy(ctx))
        grad = adjacency_gradient(ctx, params)
        score = flip_scores(grad, a_prime, out=grad)
        k = min(budget.step_edges, budget.max_edges - len(perturbation.flips))
        excluded = np.sort(np.array(
            [i * n + j for i, j in perturbation.record], dtype=np.int64))
        pairs, values = _ordered_top_pairs(score, excluded, k)
        if not pairs:
            flags["exhausted"] = True
            break
        flags["nonpositive_selected"] += int(np.sum(values <= 0.0))
        a_prime = flip_pairs(a_prime, pairs)
        perturbation.flips.extend(pairs)
        perturbation.record.update(pairs)

    final_ctx = forward(a_prime, graph.features, params,
                        attack_mask, attack_labels[attack_mask])
    loss_trace.append(cross_entropy(final_ctx))
    wall = time.perf_counter() - t0
    mis = misclassification(params, graph, _report_mask(graph, attack_mask),
                            a_prime=a_prime)
    return AttackReport(method="gta", a_prime=a_prime, perturbation=perturbation,
                        loss_trace=loss_trace, wall_clock=wall,
                        misclassification=mis, budget=budget, flags=flags)


def _sample_pairs(rng: np.random.Generator, n: int, k: int) -> list:
    """k distinct upper-triangle pairs, uniform over unordered pairs."""
    batch = set()
    out = []
    while len(out) < k:
        i = int(rng.integers(n))
        j = int(rng.integers(n))
        if i == j:
            continue
        pair = (i, j) if i < j else (j, i)
        if pair in batch:
            continue
        batch.add(pair)
        out.append(pair)
    return out


def zeroth_order_attack(graph: Graph, params: GcnParams, budget: AttackBudget,
                        attack_mask, attack_labels, seed: int = 0,
                        reject_cap: int = DEFAULT_REJECT_CAP) -> AttackReport:
    """Loss-only random search over flip batches.

    Samples batches of random upper-triangle pairs, keeps a batch only when
    the resulting loss strictly beats the best accepted loss so far, reverts
    it otherwise.  Stops at the budget or after ``reject_cap`` consecutive
    rejections.  No gradients are evaluated.
    """
    attack_mask = np.asarray(attack_mask, dtype=np.int64)
    attack_labels = np.asarray(attack_labels, dtype=np.int64)
    if graph.n < 2 and budget.max_edges > 0:
        raise ValueError("need at least 2 nodes to flip edges")
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    a_prime = graph.adjacency
    perturbation = PerturbationSet()
    net = set()
    masked_labels = attack_labels[attack_mask]
    best = cross_entropy(forward(a_prime, graph.features, params,
                                 attack_mask, masked_labels))
    loss_trace = [best]
    rejects = 0
    flags = {"hit_reject_cap": False}

    while len(net) < budget.max_edges:
        k = min(budget.step_edges, budget.max_edges - len(net))
        batch = _sample_pairs(rng, graph.n, k)
        trial = flip_pairs(a_prime, batch)
        loss = cross_entropy(forward(trial, graph.features, params,
                                     attack_mask, masked_labels))
        if loss > best:
            a_prime = trial
            best = loss
            loss_trace.append(loss)
            perturbation.flips.extend(batch)
            perturbation.record.update(batch)
            for pair in batch:
                net.symmetric_difference_update({pair})
            rejects = 0
        else:
            rejects += 1
            if rejects >= reject_cap:
                flags["hit_reject_cap"] = True
                break

    wall = time.perf_counter() - t0
    mis = misclassification(params, graph, _report_mask(graph, attack_mask),
                            a_prime=a_prime)
    return AttackReport(method="zo-gta", a_prime=a_prime,
                        perturbation=perturbation, loss_trace=loss_trace,
                        wall_clock=wall, misclassification=mis, budget=budget,
                        seed=seed, flags=flags)


def dice_attack(graph: Graph, labels: np.ndarray, max_edges: int, seed: int = 0,
                victim_params: GcnParams | None = None) -> AttackReport:
    """Delete edges internally, connect externally.

    Each of the ``max_edges`` flips tosses a fair coin between deleting a
    random existing edge whose endpoints share a label and inserting a random
    absent pair whose endpoints differ, falling back to the feasible side
    when one is exhausted.  Needs labels for every node (pseudo-labels where
    ground truth is hidden).
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != graph.n:
        raise ValueError("dice needs a label for every node")
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    n = graph.n
    rows = graph.adjacency.rows()
    cols = graph.adjacency.indices
    upper = rows < cols
    u, v = rows[upper], cols[upper]
    same = labels[u] == labels[v]
    same_edges = list(zip(u[same].tolist(), v[same].tolist()))
    edge_codes = set((u * n + v).tolist())

    class_sizes = np.bincount(labels, minlength=graph.class_count)
    diff_total = int((graph.n ** 2 - np.sum(class_sizes.astype(np.int64) ** 2)) // 2)
    diff_absent = diff_total - int(np.sum(~same))

    perturbation = PerturbationSet()
    flags = {"exhausted": False}
    for _ in range(max_edges):
        can_delete = len(same_edges) > 0
        can_insert = diff_absent > 0
        if not can_delete and not can_insert:
            flags["exhausted"] = True
            break
        delete = can_delete and (not can_insert or rng.random() < 0.5)
        if delete:
            idx = int(rng.integers(len(same_edges)))
            pair = same_edges[idx]
            same_edges[idx] = same_edges[-1]
            same_edges.pop()
            edge_codes.discard(pair[0] * n + pair[1])
        else:
            pair = _sample_absent_diff_pair(rng, n, labels, edge_codes)
            edge_codes.add(pair[0] * n + pair[1])
            diff_absent -= 1
        perturbation.flips.append(pair)
        perturbation.record.add(pair)

    a_prime = flip_pairs(graph.adjacency, perturbation.flips)
    wall = time.perf_counter() - t0
    mis = None
    if victim_params is not None:
        mis = misclassification(victim_params, graph,
                                _report_mask(graph, np.arange(graph.n)),
                                a_prime=a_prime)
    return AttackReport(method="dice", a_prime=a_prime, perturbation=perturbation,
                        loss_trace=[], wall_clock=wall, misclassification=mis,
                        budget=AttackBudget(max_edges, max(max_edges, 1)),
                        seed=seed, flags=flags)


def _sample_absent_diff_pair(rng, n, labels, edge_codes, tries: int = 20000):
    for _ in range(tries):
        i = int(rng.integers(n))
        j = int(rng.integers(n))
        if i == j or labels[i] == labels[j]:
            continue
        pair = (i, j) if i < j else (j, i)
        if pair[0] * n + pair[1] in edge_codes:
            continue
        return pair
    # rejection sampling starved (nearly saturated graph): enumerate instead
    if n > 4096:
        raise RuntimeError("absent different-label pair enumeration too large")
    iu, ju = np.triu_indices(n, k=1)
    cand = labels[iu] != labels[ju]
    codes = iu.astype(np.int64) * n + ju
    cand &= ~np.isin(codes, np.fromiter(edge_codes, dtype=np.int64,
                                        count=len(edge_codes)))
    options = np.flatnonzero(cand)
    pick = options[int(rng.integers(options.shape[0]))]
    return int(iu[pick]), int(ju[pick])
