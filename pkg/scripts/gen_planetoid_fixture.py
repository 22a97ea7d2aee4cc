#!/usr/bin/env python3
"""Generate synthetic Planetoid-style bundles for converter testing.

Writes the eight per-dataset files (ind.<name>.x/y/tx/ty/allx/ally/graph and
ind.<name>.test.index) with the same pickle encoding the canonical
distribution uses: python-2-era protocol-2 streams built from
copy_reg._reconstructor, numpy.core.multiarray._reconstruct and
scipy.sparse.csr.csr_matrix, with array buffers stored as BINSTRING payloads.
The streams are assembled by hand so the output is deterministic and does not
depend on the installed numpy/scipy pickling behavior.

    python3 scripts/gen_planetoid_fixture.py --name cora --out DIR [--tiny]

``--tiny`` emits a 40-node bundle (useful for parser tests; the converter's
Table-1 count check rejects it by design).  Without it the bundle matches the
published dataset statistics exactly (nodes/edges/classes/features).
"""

import argparse
import struct
from pathlib import Path

import numpy as np

# name -> (nodes, undirected edges, classes, features, labeled train rows, test rows)
FULL_SPECS = {
    "cora": (2708, 5429, 7, 1433, 140, 1000),
    "citeseer": (3327, 4732, 6, 3703, 120, 1000),
    "pubmed": (19717, 44338, 3, 500, 60, 1000),
}
# citeseer's test ids have gaps: span = tx rows + isolated ids
CITESEER_TEST_SPAN = 1015


class P2Pickler:
    """Minimal pickle-protocol-2 writer for the object shapes we need."""

    def __init__(self):
        self.out = bytearray(b"\x80\x02")
        self.memo_count = 0

    def _put(self):
        # keep memo indices flowing like cPickle did; nothing is ever fetched
        if self.memo_count < 256:
            self.out += b"q" + bytes([self.memo_count])
        else:
            self.out += b"r" + struct.pack("<I", self.memo_count)
        self.memo_count += 1

    def global_(self, module, name):
        self.out += f"c{module}\n{name}\n".encode("ascii")
        self._put()

    def none(self):
        self.out += b"N"

    def bool_(self, v):
        self.out += b"\x88" if v else b"\x89"

    def int_(self, v):
        if 0 <= v < 256:
            self.out += b"K" + bytes([v])
        elif 0 <= v < 65536:
            self.out += b"M" + struct.pack("<H", v)
        else:
            self.out += b"J" + struct.pack("<i", v)  # signed 32-bit

    def string(self, raw: bytes):
        if len(raw) < 256:
            self.out += b"U" + bytes([len(raw)]) + raw
        else:
            self.out += b"T" + struct.pack("<I", len(raw)) + raw
        self._put()

    def tuple_(self, arity):
        self.out += (b"", b"\x85", b"\x86", b"\x87")[arity]
        self._put()

    def mark(self):
        self.out += b"("

    def tuple_from_mark(self):
        self.out += b"t"
        self._put()

    def empty_dict(self):
        self.out += b"}"
        self._put()

    def empty_list(self):
        self.out += b"]"
        self._put()

    def setitems(self):
        self.out += b"u"

    def appends(self):
        self.out += b"e"

    def reduce(self):
        self.out += b"R"
        self._put()

    def build(self):
        self.out += b"b"

    def stop(self):
        self.out += b"."
        return bytes(self.out)

    # -- composites ---------------------------------------------------------

    def dtype(self, descr: str):
        """numpy dtype object, little-endian."""
        self.global_("numpy", "dtype")
        self.string(descr.encode())
        self.int_(0)
        self.int_(1)
        self.tuple_(3)
        self.reduce()
        # state: (version, byteorder, subdescr, names, fields, elsize, align, flags)
        self.mark()
        self.int_(3)
        self.string(b"|" if descr in ("u1", "b1") else b"<")
        self.none()
        self.none()
        self.none()
        self.int_(-1)
        self.int_(-1)
        self.int_(0)
        self.tuple_from_mark()
        self.build()

    def ndarray(self, arr: np.ndarray):
        descr = {np.dtype(np.float32): "f4", np.dtype(np.int32): "i4",
                 np.dtype(np.int64): "i8", np.dtype(np.uint8): "u1"}[arr.dtype]
        self.global_("numpy.core.multiarray", "_reconstruct")
        self.global_("numpy", "ndarray")
        self.int_(0)
        self.tuple_(1)
        self.string(b"b")
        self.tuple_(3)
        self.reduce()
        self.mark()
        self.int_(1)
        self.mark()
        for dim in arr.shape:
            self.int_(int(dim))
        self.tuple_from_mark()
        self.dtype(descr)
        self.bool_(False)
        self.string(np.ascontiguousarray(arr).astype(arr.dtype).tobytes())
        self.tuple_from_mark()
        self.build()

    def csr_matrix(self, data, indices, indptr, shape):
        self.global_("copy_reg", "_reconstructor")
        self.global_("scipy.sparse.csr", "csr_matrix")
        self.global_("__builtin__", "object")
        self.none()
        self.tuple_(3)
        self.reduce()
        self.empty_dict()
        self.mark()
        self.string(b"data")
        self.ndarray(np.asarray(data, dtype=np.float32))
        self.string(b"indices")
        self.ndarray(np.asarray(indices, dtype=np.int32))
        self.string(b"indptr")
        self.ndarray(np.asarray(indptr, dtype=np.int32))
        self.string(b"_shape")
        self.int_(shape[0])
        self.int_(shape[1])
        self.tuple_(2)
        self.string(b"maxprint")
        self.int_(50)
        self.setitems()
        self.build()

    def graph_dict(self, neighbors: dict):
        self.global_("collections", "defaultdict")
        self.global_("__builtin__", "list")
        self.tuple_(1)
        self.reduce()
        self.mark()
        for node in sorted(neighbors):
            self.int_(int(node))
            self.empty_list()
            self.mark()
            for other in neighbors[node]:
                self.int_(int(other))
            self.appends()
        self.setitems()


def dump_csr(path, dense_rows):
    rows = np.asarray(dense_rows, dtype=np.float32)
    indptr = [0]
    indices, data = [], []
    for row in rows:
        nz = np.flatnonzero(row)
        indices.extend(nz.tolist())
        data.extend(row[nz].tolist())
        indptr.append(len(indices))
    p = P2Pickler()
    p.csr_matrix(data, indices, indptr, rows.shape)
    path.write_bytes(p.stop())


def dump_array(path, arr):
    p = P2Pickler()
    p.ndarray(np.asarray(arr))
    path.write_bytes(p.stop())


def dump_graph(path, neighbors):
    p = P2Pickler()
    p.graph_dict(neighbors)
    path.write_bytes(p.stop())


def build_bundle(name, n, n_edges, classes, features, n_train, n_test,
                 test_span, seed, density=0.02):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, classes, size=n)
    n_allx = n - test_span
    test_ids_all = np.arange(n_allx, n)
    if test_span > n_test:
        # span endpoints must be present: the reconstruction derives the
        # span from min/max of the test index file
        middle = rng.choice(np.arange(1, test_span - 1), size=n_test - 2,
                            replace=False)
        present = np.sort(np.concatenate([[0], middle, [test_span - 1]]))
    else:
        present = np.arange(test_span)
    test_ids_present = test_ids_all[present]

    feats = np.zeros((n, features), dtype=np.float32)
    words = max(int(features * density), 1)
    for node in range(n):
        cols = rng.choice(features, size=words, replace=False)
        feats[node, cols] = 1.0 if name != "pubmed" else rng.random(words).astype(np.float32)
    missing = np.setdiff1d(test_ids_all, test_ids_present)
    feats[missing] = 0.0

    onehot = np.zeros((n, classes), dtype=np.int32)
    onehot[np.arange(n), labels] = 1
    onehot[missing] = 0

    # exactly n_edges distinct undirected pairs, no self-loops
    edges = set()
    while len(edges) < n_edges:
        u = int(rng.integers(n))
        v = int(rng.integers(n))
        if u != v:
            edges.add((min(u, v), max(u, v)))
    neighbors = {i: [] for i in range(n)}
    for u, v in sorted(edges):
        neighbors[u].append(v)
        neighbors[v].append(u)
    # the raw distribution carries occasional duplicates and self-references;
    # sprinkle a few to make sure the converter cleans them
    first = sorted(edges)[0]
    neighbors[first[0]].append(first[1])
    neighbors[first[0]].append(first[0])

    # file ordering permutes test rows: tx row k belongs to node test.index[k]
    order = rng.permutation(n_test)
    test_index_values = test_ids_present[order]
    labels = labels.copy()
    labels[missing] = 0  # zero one-hot rows map to class 0 downstream
    return {
        "x": feats[:n_train],
        "y": onehot[:n_train],
        "tx": feats[test_index_values],
        "ty": onehot[test_index_values],
        "allx": feats[:n_allx],
        "ally": onehot[:n_allx],
        "graph": neighbors,
        "test_index": test_index_values,
        "labels": labels,
    }


def write_bundle(out_dir: Path, name: str, bundle):
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_csr(out_dir / f"ind.{name}.x", bundle["x"])
    dump_array(out_dir / f"ind.{name}.y", bundle["y"])
    dump_csr(out_dir / f"ind.{name}.tx", bundle["tx"])
    dump_array(out_dir / f"ind.{name}.ty", bundle["ty"])
    dump_csr(out_dir / f"ind.{name}.allx", bundle["allx"])
    dump_array(out_dir / f"ind.{name}.ally", bundle["ally"])
    dump_graph(out_dir / f"ind.{name}.graph", bundle["graph"])
    (out_dir / f"ind.{name}.test.index").write_text(
        "".join(f"{int(i)}\n" for i in bundle["test_index"]))


def write_expected(out_dir: Path, name: str, bundle, n, n_edges, classes,
                   features):
    """Independent oracle for converter tests: the ground-truth assembly."""
    import json
    edges = set()
    for u, vs in bundle["graph"].items():
        for v in vs:
            if u != v:
                edges.add((min(u, v), max(u, v)))
    feats = np.zeros((n, features), dtype=np.float32)
    n_allx = bundle["allx"].shape[0]
    feats[:n_allx] = bundle["allx"]
    for k, node in enumerate(bundle["test_index"]):
        feats[int(node)] = bundle["tx"][k]
    onehot = np.zeros((n, classes), dtype=np.int64)
    onehot[:n_allx] = bundle["ally"]
    for k, node in enumerate(bundle["test_index"]):
        onehot[int(node)] = bundle["ty"][k]
    zero_rows = np.flatnonzero(onehot.sum(axis=1) == 0)
    expected = {
        "name": name,
        "node_count": int(n),
        "edge_count": len(edges),
        "class_count": int(classes),
        "feature_count": int(features),
        "labels": onehot.argmax(axis=1).tolist(),
        "zero_label_nodes": zero_rows.tolist(),
        "feature_row_sums": [round(float(s), 4) for s in feats.sum(axis=1)],
        "first_edges": sorted(edges)[:10],
    }
    (out_dir / "expected.json").write_text(json.dumps(expected, indent=1))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--name", required=True, choices=sorted(FULL_SPECS))
    ap.add_argument("--out", required=True)
    ap.add_argument("--tiny", action="store_true",
                    help="emit a 40-node bundle instead of full size")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    if args.tiny:
        n, n_edges, classes, features, n_train, n_test = 40, 60, 3, 12, 9, 10
        span = n_test + (2 if args.name == "citeseer" else 0)
    else:
        n, n_edges, classes, features, n_train, n_test = FULL_SPECS[args.name]
        span = CITESEER_TEST_SPAN if args.name == "citeseer" else n_test

    bundle = build_bundle(args.name, n, n_edges, classes, features, n_train,
                          n_test, span, seed=args.seed)
    out = Path(args.out)
    write_bundle(out, args.name, bundle)
    if args.tiny:
        write_expected(out, args.name, bundle, n, n_edges, classes, features)
    print(f"wrote ind.{args.name}.* to {args.out} "
          f"(n={n}, edges={n_edges}, classes={classes}, features={features})")


if __name__ == "__main__":
    main()
