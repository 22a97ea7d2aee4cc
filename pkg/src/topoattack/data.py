"""Dataset container, the neutral on-disk format, split generation, and
pseudo-label management.

A dataset directory holds ``manifest.json``, ``edges.txt`` (one ``u v`` pair
per line, 0-indexed, u < v, sorted), ``features.bin`` (row-major little-endian
float32, n x F) and ``labels.txt`` (one integer per line).  The manifest
carries the counts and a SHA-256 checksum per file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .gcn import GcnParams, predict
from .sparse import SparseSym, build_adjacency

MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class Graph:
    adjacency: SparseSym
    features: np.ndarray          # (n, F) float64
    labels: np.ndarray            # (n,) int64
    class_count: int
    train_idx: np.ndarray | None = None
    val_idx: np.ndarray | None = None
    test_idx: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        if self.features.shape[0] != self.adjacency.n:
            raise ValueError("feature rows != node count")
        if self.labels.shape[0] != self.adjacency.n:
            raise ValueError("label count != node count")
        if self.labels.size and (self.labels.min() < 0
                                 or self.labels.max() >= self.class_count):
            raise ValueError(
                f"labels must lie in [0, {self.class_count})")
        masks = [m for m in (self.train_idx, self.val_idx, self.test_idx)
                 if m is not None]
        seen = np.concatenate(masks) if masks else np.empty(0, np.int64)
        if seen.size and np.unique(seen).shape[0] != seen.shape[0]:
            raise ValueError("train/val/test masks overlap")
        if seen.size and (seen.min() < 0 or seen.max() >= self.adjacency.n):
            raise ValueError("mask index out of range")

    @property
    def n(self) -> int:
        return self.adjacency.n

    @property
    def feature_count(self) -> int:
        return int(self.features.shape[1])

    def with_masks(self, train_idx, val_idx, test_idx) -> "Graph":
        return replace(self, train_idx=np.asarray(train_idx, np.int64),
                       val_idx=np.asarray(val_idx, np.int64),
                       test_idx=np.asarray(test_idx, np.int64))


@dataclass
class DatasetManifest:
    name: str
    node_count: int
    edge_count: int
    feature_count: int
    class_count: int
    files: dict = field(default_factory=lambda: {
        "edges": "edges.txt", "features": "features.bin", "labels": "labels.txt"})
    checksums: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        raw = json.loads(text)
        known = {k: raw[k] for k in
                 ("name", "node_count", "edge_count", "feature_count",
                  "class_count", "files", "checksums")}
        return cls(**known)


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def load_dataset(path) -> Graph:
    """Load and validate a neutral-format dataset directory.

    Duplicate and reversed edges collapse to one; self-loops, checksum
    mismatches and count mismatches are errors.  The returned graph carries
    no masks; see :func:`make_splits`.
    """
    path = Path(path)
    mf_path = path / MANIFEST_NAME
    if not mf_path.is_file():
        raise FileNotFoundError(f"no dataset manifest at {mf_path}")
    manifest = DatasetManifest.from_json(mf_path.read_text())

    for key, fname in manifest.files.items():
        fpath = path / fname
        if not fpath.is_file():
            raise FileNotFoundError(f"dataset file missing: {fpath}")
        want = manifest.checksums.get(fname)
        got = sha256_file(fpath)
        if want != got:
            raise ValueError(
                f"checksum mismatch for {fpath}: manifest {want}, file {got}")

    n = manifest.node_count
    edges_text = (path / manifest.files["edges"]).read_text()
    edge_rows = [line.split() for line in edges_text.splitlines() if line.strip()]
    edges = [(int(u), int(v)) for u, v in edge_rows]
    adjacency = build_adjacency(edges, n)  # rejects self-loops / out-of-range
    stored_edges = adjacency.nnz // 2
    if stored_edges != manifest.edge_count:
        raise ValueError(
            f"edge count mismatch: manifest says {manifest.edge_count}, "
            f"files hold {stored_edges}")

    raw = np.fromfile(path / manifest.files["features"], dtype="<f4")
    if raw.size != n * manifest.feature_count:
        raise ValueError(
            f"feature blob holds {raw.size} values, expected "
            f"{n} x {manifest.feature_count}")
    features = raw.reshape(n, manifest.feature_count).astype(np.float64)

    label_lines = (path / manifest.files["labels"]).read_text().splitlines()
    labels = np.array([int(s) for s in label_lines if s.strip()], dtype=np.int64)
    if labels.shape[0] != n:
        raise ValueError(f"label file holds {labels.shape[0]} rows, expected {n}")
    if labels.size and (labels.min() < 0 or labels.max() >= manifest.class_count):
        raise ValueError(
            f"label out of range [0, {manifest.class_count})")

    return Graph(adjacency=adjacency, features=features, labels=labels,
                 class_count=manifest.class_count, name=manifest.name)


def save_dataset(graph: Graph, path, name: str | None = None) -> DatasetManifest:
    """Write a graph as a neutral-format directory (deterministic bytes)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    name = name or graph.name or "dataset"

    rows = graph.adjacency.rows()
    cols = graph.adjacency.indices
    upper = rows < cols
    edge_lines = "".join(
        f"{u} {v}\n" for u, v in zip(rows[upper], cols[upper]))
    (path / "edges.txt").write_text(edge_lines)
    graph.features.astype("<f4").tofile(path / "features.bin")
    (path / "labels.txt").write_text(
        "".join(f"{int(c)}\n" for c in graph.labels))

    manifest = DatasetManifest(
        name=name,
        node_count=graph.n,
        edge_count=int(upper.sum()),
        feature_count=graph.feature_count,
        class_count=graph.class_count,
    )
    manifest.checksums = {
        fname: sha256_file(path / fname) for fname in manifest.files.values()}
    (path / MANIFEST_NAME).write_text(manifest.to_json())
    return manifest


def make_splits(graph: Graph, seed: int, train_per_class: int = 20,
                val_size: int = 500, test_size: int = 1000):
    """Seeded class-balanced transductive split.

    Picks ``train_per_class`` labeled nodes per class, then ``val_size`` and
    ``test_size`` nodes from the shuffled remainder.  Deterministic given the
    seed; raises when a class is too small or the remainder cannot cover
    validation and test.
    """
    rng = np.random.default_rng(seed)
    train = []
    for c in range(graph.class_count):
        members = np.flatnonzero(graph.labels == c)
        if members.shape[0] < train_per_class:
            raise ValueError(
                f"class {c} has {members.shape[0]} nodes, "
                f"needs {train_per_class} for the train split")
        train.append(rng.choice(members, size=train_per_class, replace=False))
    train_idx = np.sort(np.concatenate(train))

    pool = np.setdiff1d(np.arange(graph.n), train_idx, assume_unique=False)
    if pool.shape[0] < val_size + test_size:
        raise ValueError(
            f"{pool.shape[0]} nodes left after the train split, "
            f"need {val_size + test_size} for val+test")
    pool = rng.permutation(pool)
    val_idx = np.sort(pool[:val_size])
    test_idx = np.sort(pool[val_size:val_size + test_size])
    return train_idx, val_idx, test_idx


def pseudo_labels(graph: Graph, natural_params: GcnParams) -> np.ndarray:
    """Model predictions everywhere except the train mask, truth there."""
    out = predict(natural_params, graph)
    if graph.train_idx is not None:
        out = out.copy()
        out[graph.train_idx] = graph.labels[graph.train_idx]
    return out
