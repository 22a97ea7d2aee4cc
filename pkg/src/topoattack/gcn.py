"""Two-layer graph convolutional network on a normalized adjacency.

Forward pass, masked cross-entropy, analytic gradients with respect to the
weights and with respect to every adjacency entry (including the path through
the degree normalization), plus standard supervised training.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .sparse import SparseSym, normalize_adjacency, spmm

# Above this node count the dense adjacency gradient is assembled in float32
# (the n x n buffers would otherwise not fit desk-scale memory).
DENSE_GRAD_F32_NODES = 10_000


@dataclass(frozen=True)
class GcnParams:
    """The two weight matrices, features -> hidden -> classes."""

    w1: np.ndarray
    w2: np.ndarray

    @property
    def hidden(self) -> int:
        return self.w1.shape[1]

    @property
    def class_count(self) -> int:
        return self.w2.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    hidden: int = 16
    learning_rate: float = 0.01
    weight_decay: float = 5e-4   # applied to the first layer only
    dropout: float = 0.5         # on the inputs of each layer, training only
    epochs: int = 200
    early_stopping: int | None = None  # patience on validation loss, off by default

    def with_overrides(self, **kwargs) -> "TrainConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class LossContext:
    """Cached intermediates of one deterministic (dropout-free) forward pass."""

    a_norm: SparseSym
    x: np.ndarray
    xw1: np.ndarray       # X @ W1
    z1: np.ndarray        # pre-activation of layer 1
    h1: np.ndarray        # ReLU(z1)
    h1w2: np.ndarray      # H1 @ W2
    logits: np.ndarray
    logsumexp: np.ndarray
    probs: np.ndarray
    mask: np.ndarray      # node indices the loss averages over
    labels: np.ndarray    # class index per masked node


def init_params(feature_count: int, hidden: int, class_count: int,
                rng: np.random.Generator) -> GcnParams:
    """Uniform +-sqrt(6 / (fan_in + fan_out)) initialization."""
    def glorot(fan_in, fan_out):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=(fan_in, fan_out))

    return GcnParams(w1=glorot(feature_count, hidden),
                     w2=glorot(hidden, class_count))


def _softmax_stats(logits):
    top = logits.max(axis=1)
    lse = np.log(np.exp(logits - top[:, None]).sum(axis=1)) + top
    probs = np.exp(logits - lse[:, None])
    return lse, probs


def forward(a_prime: SparseSym, x: np.ndarray, params: GcnParams,
            mask, labels) -> LossContext:
    """Evaluate logits = A_norm @ ReLU(A_norm @ X @ W1) @ W2 and cache everything.

    ``mask`` holds the node indices the loss averages over; ``labels`` the
    class index per masked node.  No dropout: evaluation is deterministic.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != a_prime.n:
        raise ValueError(f"feature rows {x.shape[0]} != node count {a_prime.n}")
    if x.shape[1] != params.w1.shape[0]:
        raise ValueError(
            f"feature count {x.shape[1]} != W1 input dim {params.w1.shape[0]}")
    if params.w1.shape[1] != params.w2.shape[0]:
        raise ValueError("W1 output dim != W2 input dim")
    mask = np.asarray(mask, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if mask.shape != labels.shape:
        raise ValueError("mask and labels must align one-to-one")

    a_norm = normalize_adjacency(a_prime)
    xw1 = x @ params.w1
    z1 = spmm(a_norm, xw1)
    h1 = np.maximum(z1, 0.0)
    h1w2 = h1 @ params.w2
    logits = spmm(a_norm, h1w2)
    lse, probs = _softmax_stats(logits)
    return LossContext(a_norm=a_norm, x=x, xw1=xw1, z1=z1, h1=h1, h1w2=h1w2,
                       logits=logits, logsumexp=lse, probs=probs,
                       mask=mask, labels=labels)


def cross_entropy(ctx: LossContext) -> float:
    """Mean negative log-likelihood over the masked nodes."""
    if ctx.mask.shape[0] == 0:
        raise ValueError("cross_entropy needs a nonempty mask")
    picked = ctx.logits[ctx.mask, ctx.labels]
    return float(np.mean(ctx.logsumexp[ctx.mask] - picked))


def _logit_grad(ctx: LossContext) -> np.ndarray:
    """d(loss)/d(logits): (softmax - onehot) / |mask| on masked rows, else 0."""
    dz = np.zeros_like(ctx.logits)
    m = ctx.mask
    if m.shape[0] == 0:
        return dz
    dz[m] = ctx.probs[m]
    dz[m, ctx.labels] -= 1.0
    dz[m] /= m.shape[0]
    return dz


def weight_gradients(ctx: LossContext, params: GcnParams):
    """Analytic d(loss)/dW1, d(loss)/dW2 by backprop through both layers."""
    if ctx.h1.shape[1] != params.w2.shape[0] or ctx.x.shape[1] != params.w1.shape[0]:
        raise ValueError("context does not match these parameters")
    dz2 = _logit_grad(ctx)
    t2 = spmm(ctx.a_norm, dz2)          # A_norm^T dz2 (A_norm symmetric)
    dw2 = ctx.h1.T @ t2
    dz1 = (t2 @ params.w2.T) * (ctx.z1 > 0)
    dw1 = ctx.x.T @ spmm(ctx.a_norm, dz1)
    return dw1, dw2


def adjacency_gradient(ctx: LossContext, params: GcnParams) -> np.ndarray:
    """Dense d(loss)/dA' treating every adjacency entry as a real variable.

    Differentiates through the added identity, the degrees, and the
    normalization; the degree terms make entries off the stored pattern
    nonzero too.  The returned matrix is exactly symmetric; the derivative of
    jointly perturbing the pair (i, j) is g[i, j] + g[j, i].
    """
    n = ctx.a_norm.n
    dz2 = _logit_grad(ctx)
    dz1 = (spmm(ctx.a_norm, dz2) @ params.w2.T) * (ctx.z1 > 0)

    dtype = np.float64 if n <= DENSE_GRAD_F32_NODES else np.float32
    # d(loss)/dA_norm as two low-rank products
    gt = np.asarray(dz2, dtype=dtype) @ np.asarray(ctx.h1w2.T, dtype=dtype)
    gt += np.asarray(dz1, dtype=dtype) @ np.asarray(ctx.xw1.T, dtype=dtype)

    # chain through A_norm = Dhat^{-1/2} (A' + I) Dhat^{-1/2}:
    # g[u, v] = gt[u, v] r_u r_v - 1/2 dhat_u^{-3/2} w_u, where w sums the
    # normalized gt entries over row/column u of the stored pattern.
    # a_norm's pattern is exactly A' + I, and its row counts equal dhat
    a_norm = ctx.a_norm
    rows_ext = a_norm.rows()
    cols_ext = a_norm.indices
    dhat = np.diff(a_norm.indptr).astype(np.float64)
    r = dhat ** -0.5
    gt_uv = kernels.pair_dots(dz2, ctx.h1w2, dz1, ctx.xw1, rows_ext, cols_ext)
    gt_vu = kernels.pair_dots(dz2, ctx.h1w2, dz1, ctx.xw1, cols_ext, rows_ext)
    w = np.bincount(rows_ext, weights=(gt_uv + gt_vu) * r[cols_ext], minlength=n)
    c = 0.5 * dhat ** -1.5 * w

    gt *= r.astype(dtype)[:, None]
    gt *= r.astype(dtype)[None, :]
    gt -= c.astype(dtype)[:, None]
    kernels.symmetrize_mean(gt)
    return gt


def predict(params: GcnParams, graph) -> np.ndarray:
    """Per-node argmax class; ties break toward the lowest class index."""
    ctx = forward(graph.adjacency, graph.features, params,
                  np.empty(0, np.int64), np.empty(0, np.int64))
    return np.argmax(ctx.logits, axis=1)


def misclassification(params: GcnParams, graph, mask,
                      a_prime: SparseSym | None = None) -> float:
    """Fraction of masked nodes whose prediction disagrees with graph.labels."""
    a = graph.adjacency if a_prime is None else a_prime
    ctx = forward(a, graph.features, params,
                  np.empty(0, np.int64), np.empty(0, np.int64))
    pred = np.argmax(ctx.logits, axis=1)
    mask = np.asarray(mask, dtype=np.int64)
    return float(np.mean(pred[mask] != graph.labels[mask]))


def _dropout(rng: np.random.Generator, arr: np.ndarray, rate: float):
    """Inverted dropout; returns the dropped array and the applied scale."""
    if rate <= 0.0:
        return arr, None
    keep = 1.0 - rate
    scale = (rng.random(arr.shape) < keep) / keep
    return arr * scale, scale


def train_natural(graph, config: TrainConfig = TrainConfig(), seed: int = 0) -> GcnParams:
    """Supervised training on the clean graph.

    Full-batch adaptive-moment updates, L2 decay on the first layer, dropout
    on the inputs of both layers.  Deterministic given the seed.  Raises
    RuntimeError if the loss leaves the finite range.
    """
    if graph.train_idx is None or graph.train_idx.shape[0] == 0:
        raise ValueError("training requires a nonempty train mask")
    rng = np.random.default_rng(seed)
    x = np.asarray(graph.features, dtype=np.float64)
    params = init_params(x.shape[1], config.hidden, graph.class_count, rng)
    if config.epochs == 0:
        return params

    a_norm = normalize_adjacency(graph.adjacency)
    mask = graph.train_idx
    labels = graph.labels[mask]
    w1, w2 = params.w1.copy(), params.w2.copy()
    # overflow surfaces as a non-finite loss and raises inside the loop
    with np.errstate(over="ignore", invalid="ignore"):
        return _train_loop(graph, config, rng, x, a_norm, mask, labels, w1, w2)


def _train_loop(graph, config, rng, x, a_norm, mask, labels, w1, w2):
    m_state = [np.zeros_like(w1), np.zeros_like(w2)]
    v_state = [np.zeros_like(w1), np.zeros_like(w2)]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    best_val, patience_left = np.inf, config.early_stopping
    for epoch in range(config.epochs):
        xd, _ = _dropout(rng, x, config.dropout)
        z1 = kernels.spmm(a_norm.indptr, a_norm.indices, a_norm.data, xd @ w1)
        h1 = np.maximum(z1, 0.0)
        h1d, h1_scale = _dropout(rng, h1, config.dropout)
        logits = kernels.spmm(a_norm.indptr, a_norm.indices, a_norm.data, h1d @ w2)
        lse, probs = _softmax_stats(logits)
        loss = float(np.mean(lse[mask] - logits[mask, labels]))
        if not np.isfinite(loss):
            raise RuntimeError(f"training diverged at epoch {epoch}: loss={loss}")

        dz2 = np.zeros_like(logits)
        dz2[mask] = probs[mask]
        dz2[mask, labels] -= 1.0
        dz2[mask] /= mask.shape[0]
        t2 = kernels.spmm(a_norm.indptr, a_norm.indices, a_norm.data, dz2)
        dw2 = h1d.T @ t2
        dh1 = t2 @ w2.T
        if h1_scale is not None:
            dh1 = dh1 * h1_scale
        dz1 = dh1 * (z1 > 0)
        dw1 = xd.T @ kernels.spmm(a_norm.indptr, a_norm.indices, a_norm.data, dz1)
        dw1 += config.weight_decay * w1

        for w, g, m, v in ((w1, dw1, m_state[0], v_state[0]),
                           (w2, dw2, m_state[1], v_state[1])):
            m *= beta1
            m += (1 - beta1) * g
            v *= beta2
            v += (1 - beta2) * g * g
            mh = m / (1 - beta1 ** (epoch + 1))
            vh = v / (1 - beta2 ** (epoch + 1))
            w -= config.learning_rate * mh / (np.sqrt(vh) + eps)

        if config.early_stopping is not None and graph.val_idx is not None:
            val_ctx = forward(graph.adjacency, x, GcnParams(w1, w2),
                              graph.val_idx, graph.labels[graph.val_idx])
            val_loss = cross_entropy(val_ctx)
            if val_loss < best_val:
                best_val, patience_left = val_loss, config.early_stopping
            else:
                patience_left -= 1
                if patience_left <= 0:
                    break
    return GcnParams(w1=w1, w2=w2)
