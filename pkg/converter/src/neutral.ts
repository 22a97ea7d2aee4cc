/**
 * Emission of the neutral dataset directory: manifest.json, edges.txt,
 * features.bin (row-major little-endian float32) and labels.txt, with
 * SHA-256 checksums in the manifest.  Output bytes are deterministic.
 */

import * as crypto from 'node:crypto';
import * as fs from 'node:fs';
import * as path from 'node:path';

import { Assembled, ConvertError } from './planetoid';

/** nodes / undirected edges / classes / features per published dataset. */
export const EXPECTED_COUNTS: Record<string, [number, number, number, number]> = {
  cora: [2708, 5429, 7, 1433],
  citeseer: [3327, 4732, 6, 3703],
  pubmed: [19717, 44338, 3, 500],
};

export function checkCounts(a: Assembled): void {
  const expected = EXPECTED_COUNTS[a.name];
  if (!expected) throw new ConvertError(`unknown dataset name ${a.name}`);
  const got: [number, number, number, number] =
    [a.nodeCount, a.edges.length, a.classCount, a.featureCount];
  const fields = ['nodes', 'edges', 'classes', 'features'];
  const bad = fields.filter((_, i) => got[i] !== expected[i]);
  if (bad.length) {
    throw new ConvertError(
      `${a.name}: converted counts do not match the published statistics; ` +
      `got nodes/edges/classes/features = ${got.join('/')}, ` +
      `expected ${expected.join('/')} (mismatch in: ${bad.join(', ')}); ` +
      `refusing to emit a wrong dataset`);
  }
}

function sha256(data: Uint8Array | string): string {
  return crypto.createHash('sha256').update(data).digest('hex');
}

function featureBytes(a: Assembled): Uint8Array {
  const out = new Uint8Array(a.features.length * 4);
  const view = new DataView(out.buffer);
  for (let i = 0; i < a.features.length; i++) {
    view.setFloat32(i * 4, a.features[i], true);
  }
  return out;
}

/** Stable JSON: sorted keys, 2-space indent, trailing newline. */
export function stableJson(value: unknown): string {
  const render = (v: unknown, indent: string): string => {
    if (v === null || typeof v === 'number' || typeof v === 'boolean') {
      return JSON.stringify(v);
    }
    if (typeof v === 'string') return JSON.stringify(v);
    if (Array.isArray(v)) {
      if (v.length === 0) return '[]';
      const inner = v.map((x) => indent + '  ' + render(x, indent + '  '));
      return '[\n' + inner.join(',\n') + '\n' + indent + ']';
    }
    const obj = v as Record<string, unknown>;
    const keys = Object.keys(obj).sort();
    if (keys.length === 0) return '{}';
    const inner = keys.map(
      (k) => `${indent}  ${JSON.stringify(k)}: ${render(obj[k], indent + '  ')}`);
    return '{\n' + inner.join(',\n') + '\n' + indent + '}';
  };
  return render(value, '') + '\n';
}

export function writeNeutral(a: Assembled, outDir: string): string {
  fs.mkdirSync(outDir, { recursive: true });
  const edgesText = a.edges.map(([u, v]) => `${u} ${v}\n`).join('');
  const labelsText = Array.from(a.labels, (c) => `${c}\n`).join('');
  const features = featureBytes(a);

  fs.writeFileSync(path.join(outDir, 'edges.txt'), edgesText);
  fs.writeFileSync(path.join(outDir, 'features.bin'), features);
  fs.writeFileSync(path.join(outDir, 'labels.txt'), labelsText);

  const manifest = {
    name: a.name,
    node_count: a.nodeCount,
    edge_count: a.edges.length,
    feature_count: a.featureCount,
    class_count: a.classCount,
    files: {
      edges: 'edges.txt',
      features: 'features.bin',
      labels: 'labels.txt',
    },
    checksums: {
      'edges.txt': sha256(edgesText),
      'features.bin': sha256(features),
      'labels.txt': sha256(labelsText),
    },
    zero_label_nodes: a.zeroLabelNodes,
  };
  const manifestPath = path.join(outDir, 'manifest.json');
  fs.writeFileSync(manifestPath, stableJson(manifest));
  return manifestPath;
}
