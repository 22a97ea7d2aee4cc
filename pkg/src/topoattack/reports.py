"""Checkpoint and run-report serialization for the benchmark CLI.

Checkpoints are a manifest JSON plus one raw little-endian float32 blob
holding both weight matrices, checksummed.  Run reports split into a
deterministic ``report.json`` (byte-identical across same-seed runs), a
volatile ``timing.json``, and a flat ``results.csv``; flip lists go to
sidecar text files.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .gcn import GcnParams

CHECKPOINT_NAME = "checkpoint.json"
WEIGHTS_NAME = "weights.bin"


def _sha256_bytes(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()


def save_checkpoint(directory, params: GcnParams, meta: dict) -> Path:
    """Write weights.bin + checkpoint.json into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    blob = params.w1.astype("<f4").tobytes() + params.w2.astype("<f4").tobytes()
    (directory / WEIGHTS_NAME).write_bytes(blob)
    manifest = dict(meta)
    manifest.update({
        "format": "topoattack-checkpoint-v1",
        "weights_file": WEIGHTS_NAME,
        "weights_sha256": _sha256_bytes(blob),
        "dtype": "<f4",
        "shapes": {"w1": list(params.w1.shape), "w2": list(params.w2.shape)},
    })
    (directory / CHECKPOINT_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return directory


def load_checkpoint(directory):
    """Read a checkpoint directory back into (params, manifest)."""
    directory = Path(directory)
    mf_path = directory / CHECKPOINT_NAME
    if not mf_path.is_file():
        raise FileNotFoundError(f"no checkpoint manifest at {mf_path}")
    manifest = json.loads(mf_path.read_text())
    blob = (directory / manifest["weights_file"]).read_bytes()
    got = _sha256_bytes(blob)
    if got != manifest["weights_sha256"]:
        raise ValueError(
            f"checkpoint weights checksum mismatch in {directory}: "
            f"manifest {manifest['weights_sha256']}, file {got}")
    s1 = manifest["shapes"]["w1"]
    s2 = manifest["shapes"]["w2"]
    flat = np.frombuffer(blob, dtype=manifest["dtype"])
    n1 = s1[0] * s1[1]
    if flat.size != n1 + s2[0] * s2[1]:
        raise ValueError("checkpoint blob size does not match shapes")
    w1 = flat[:n1].reshape(s1).astype(np.float64)
    w2 = flat[n1:].reshape(s2).astype(np.float64)
    return GcnParams(w1=w1, w2=w2), manifest


def masks_to_json(train_idx, val_idx, test_idx) -> dict:
    return {
        "train": np.asarray(train_idx).tolist(),
        "val": np.asarray(val_idx).tolist(),
        "test": np.asarray(test_idx).tolist(),
    }


def masks_from_json(raw: dict):
    return (np.asarray(raw["train"], dtype=np.int64),
            np.asarray(raw["val"], dtype=np.int64),
            np.asarray(raw["test"], dtype=np.int64))


def write_run_report(out_dir, report: dict, timing: dict, csv_rows: list) -> None:
    """Emit report.json (deterministic), timing.json, and results.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    (out_dir / "timing.json").write_text(
        json.dumps(timing, indent=2, sort_keys=True) + "\n")
    if csv_rows:
        with open(out_dir / "results.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(csv_rows[0].keys()))
            writer.writeheader()
            writer.writerows(csv_rows)


def summarize(values) -> dict:
    arr = np.asarray(list(values), dtype=np.float64)
    return {
        "mean": float(arr.mean()) if arr.size else float("nan"),
        "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
    }
