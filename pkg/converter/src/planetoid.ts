/**
 * Reading and reassembling a Planetoid bundle (the eight ind.<name>.* files)
 * into flat arrays: features, integer labels, and an undirected edge list.
 *
 * The distribution stores labeled-node features (x), test features (tx) and
 * all non-test features (allx) separately; test rows live at the end of the
 * node ordering, permuted by ind.<name>.test.index, and citeseer leaves gaps
 * in that range for isolated nodes (their features and labels are zero).
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { NDArray, PyDict, PyGlobal, PyInstance, PyValue, loads, toNumbers } from './pickle';

export class ConvertError extends Error {}

export interface CSRData {
  rows: number;
  cols: number;
  data: number[];
  indices: number[];
  indptr: number[];
}

export interface Bundle {
  x: CSRData;
  y: DenseInts;
  tx: CSRData;
  ty: DenseInts;
  allx: CSRData;
  ally: DenseInts;
  graph: Map<number, number[]>;
  testIndex: number[];
}

export interface DenseInts {
  rows: number;
  cols: number;
  values: number[];
}

export interface Assembled {
  name: string;
  nodeCount: number;
  featureCount: number;
  classCount: number;
  features: Float32Array; // row-major nodeCount x featureCount
  labels: Int32Array;
  edges: Array<[number, number]>; // sorted, u < v, deduplicated
  zeroLabelNodes: number[];
}

const FILE_KEYS = ['x', 'y', 'tx', 'ty', 'allx', 'ally', 'graph'] as const;

function loadPickle(file: string): PyValue {
  return loads(new Uint8Array(fs.readFileSync(file)));
}

function asCsr(value: PyValue, file: string): CSRData {
  const inst = value as PyInstance;
  if (!inst || inst.kind !== 'instance' || !/csr/.test(inst.cls.name)) {
    throw new ConvertError(`${file}: expected a CSR matrix pickle`);
  }
  const state = inst.state as PyDict;
  if (!state || state.kind !== 'dict') {
    throw new ConvertError(`${file}: CSR pickle carries no state dict`);
  }
  const get = (key: string) => {
    const v = state.entries.get(key);
    if (v === undefined) throw new ConvertError(`${file}: CSR state lacks ${key}`);
    return v;
  };
  const shape = get('_shape') as number[];
  return {
    rows: shape[0],
    cols: shape[1],
    data: toNumbers(get('data') as NDArray),
    indices: toNumbers(get('indices') as NDArray),
    indptr: toNumbers(get('indptr') as NDArray),
  };
}

function asDense(value: PyValue, file: string): DenseInts {
  const arr = value as NDArray;
  if (!arr || arr.kind !== 'ndarray' || arr.shape.length !== 2) {
    throw new ConvertError(`${file}: expected a 2-d array pickle`);
  }
  return { rows: arr.shape[0], cols: arr.shape[1], values: toNumbers(arr) };
}

function asGraph(value: PyValue, file: string): Map<number, number[]> {
  const dict = value as PyDict;
  if (!dict || dict.kind !== 'dict') {
    throw new ConvertError(`${file}: expected the adjacency dictionary`);
  }
  const out = new Map<number, number[]>();
  for (const [k, v] of dict.entries) {
    if (typeof k !== 'number' || !Array.isArray(v)) {
      throw new ConvertError(`${file}: adjacency must map node -> list`);
    }
    out.set(k, v.map((x) => {
      if (typeof x !== 'number') throw new ConvertError(`${file}: non-int neighbor`);
      return x;
    }));
  }
  return out;
}

export function loadBundle(dir: string, name: string): Bundle {
  for (const key of FILE_KEYS) {
    const file = path.join(dir, `ind.${name}.${key}`);
    if (!fs.existsSync(file)) throw new ConvertError(`missing bundle file: ${file}`);
  }
  const indexFile = path.join(dir, `ind.${name}.test.index`);
  if (!fs.existsSync(indexFile)) {
    throw new ConvertError(`missing bundle file: ${indexFile}`);
  }
  const file = (key: string) => path.join(dir, `ind.${name}.${key}`);
  const testIndex = fs.readFileSync(indexFile, 'utf8')
    .split('\n').filter((s) => s.trim().length)
    .map((s) => {
      const v = Number(s.trim());
      if (!Number.isInteger(v) || v < 0) {
        throw new ConvertError(`test.index holds a non-index line: ${JSON.stringify(s)}`);
      }
      return v;
    });
  return {
    x: asCsr(loadPickle(file('x')), file('x')),
    y: asDense(loadPickle(file('y')), file('y')),
    tx: asCsr(loadPickle(file('tx')), file('tx')),
    ty: asDense(loadPickle(file('ty')), file('ty')),
    allx: asCsr(loadPickle(file('allx')), file('allx')),
    ally: asDense(loadPickle(file('ally')), file('ally')),
    graph: asGraph(loadPickle(file('graph')), file('graph')),
    testIndex,
  };
}

function scatterCsrRow(dst: Float32Array, offset: number, csr: CSRData, row: number) {
  for (let p = csr.indptr[row]; p < csr.indptr[row + 1]; p++) {
    dst[offset + csr.indices[p]] = csr.data[p];
  }
}

export function assemble(bundle: Bundle, name: string): Assembled {
  const f = bundle.allx.cols;
  if (bundle.tx.cols !== f || bundle.x.cols !== f) {
    throw new ConvertError('feature widths disagree between x/tx/allx');
  }
  const classCount = bundle.ally.cols;
  if (bundle.ty.cols !== classCount || bundle.y.cols !== classCount) {
    throw new ConvertError('label widths disagree between y/ty/ally');
  }
  const nAllx = bundle.allx.rows;
  if (bundle.testIndex.length !== bundle.tx.rows) {
    throw new ConvertError(
      `test.index lists ${bundle.testIndex.length} nodes but tx has ${bundle.tx.rows} rows`);
  }
  const minId = Math.min(...bundle.testIndex);
  const maxId = Math.max(...bundle.testIndex);
  if (minId !== nAllx) {
    throw new ConvertError(
      `test ids start at ${minId}, expected ${nAllx} (allx rows)`);
  }
  const n = maxId + 1;

  const features = new Float32Array(n * f);
  for (let row = 0; row < nAllx; row++) {
    scatterCsrRow(features, row * f, bundle.allx, row);
  }
  const labels = new Int32Array(n);
  const seen = new Uint8Array(n);
  const onehot = (dense: DenseInts, row: number): { label: number; zero: boolean } => {
    let best = 0;
    let bestVal = -Infinity;
    let total = 0;
    for (let c = 0; c < dense.cols; c++) {
      const v = dense.values[row * dense.cols + c];
      total += Math.abs(v);
      if (v > bestVal) { bestVal = v; best = c; }
    }
    return { label: total === 0 ? 0 : best, zero: total === 0 };
  };
  const zeroLabelNodes: number[] = [];
  for (let row = 0; row < nAllx; row++) {
    const { label, zero } = onehot(bundle.ally, row);
    labels[row] = label;
    seen[row] = 1;
    if (zero) zeroLabelNodes.push(row);
  }
  bundle.testIndex.forEach((node, k) => {
    scatterCsrRow(features, node * f, bundle.tx, k);
    const { label, zero } = onehot(bundle.ty, k);
    labels[node] = label;
    seen[node] = 1;
    if (zero) zeroLabelNodes.push(node);
  });
  // isolated ids inside the test span (the citeseer quirk): zero feature
  // rows, class-0 labels, reported in the manifest warning list
  for (let node = nAllx; node < n; node++) {
    if (!seen[node]) zeroLabelNodes.push(node);
  }
  zeroLabelNodes.sort((a, b) => a - b);

  const codes = new Set<number>();
  for (const [u, neighbors] of bundle.graph) {
    if (u >= n) throw new ConvertError(`graph node ${u} outside [0, ${n})`);
    for (const v of neighbors) {
      if (v >= n) throw new ConvertError(`graph node ${v} outside [0, ${n})`);
      if (u === v) continue; // drop self-loops
      const a = Math.min(u, v);
      const b = Math.max(u, v);
      codes.add(a * n + b);
    }
  }
  const edges = [...codes].sort((a, b) => a - b)
    .map((c) => [Math.floor(c / n), c % n] as [number, number]);

  return {
    name,
    nodeCount: n,
    featureCount: f,
    classCount,
    features,
    labels,
    edges,
    zeroLabelNodes,
  };
}
