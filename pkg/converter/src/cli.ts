#!/usr/bin/env node
/**
 * planetoid-convert: one-shot converter from the canonical Planetoid
 * distribution of cora/citeseer/pubmed to the neutral dataset format.
 *
 *   planetoid-convert --in DIR --name {cora|citeseer|pubmed} --out DIR
 *
 * Exits 0 on success, 2 on any input or validation error.  Counts are
 * checked against the published dataset statistics before anything is
 * written; a mismatch aborts loudly.
 */

import { assemble, ConvertError, loadBundle } from './planetoid';
import { checkCounts, EXPECTED_COUNTS, writeNeutral } from './neutral';

interface Args {
  inDir: string;
  name: string;
  outDir: string;
}

function parseArgs(argv: string[]): Args {
  const rest = argv[0] === 'convert' ? argv.slice(1) : argv;
  const flags = new Map<string, string>();
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    const value = rest[i + 1];
    if (!key?.startsWith('--') || value === undefined) {
      throw new ConvertError(`usage: convert --in DIR --name NAME --out DIR`);
    }
    flags.set(key.slice(2), value);
  }
  const inDir = flags.get('in');
  const name = flags.get('name');
  const outDir = flags.get('out');
  if (!inDir || !name || !outDir) {
    throw new ConvertError('usage: convert --in DIR --name NAME --out DIR');
  }
  if (!(name in EXPECTED_COUNTS)) {
    throw new ConvertError(
      `--name must be one of ${Object.keys(EXPECTED_COUNTS).sort().join(', ')}`);
  }
  return { inDir, name, outDir };
}

export function run(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    const bundle = loadBundle(args.inDir, args.name);
    const assembled = assemble(bundle, args.name);
    checkCounts(assembled);
    const manifestPath = writeNeutral(assembled, args.outDir);
    console.log(
      `converted ${args.name}: ${assembled.nodeCount} nodes, ` +
      `${assembled.edges.length} edges, ${assembled.classCount} classes, ` +
      `${assembled.featureCount} features -> ${manifestPath}`);
    if (assembled.zeroLabelNodes.length) {
      console.log(
        `warning: ${assembled.zeroLabelNodes.length} nodes had empty label ` +
        `rows (listed in the manifest as zero_label_nodes)`);
    }
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 2;
  }
}

if (require.main === module) {
  process.exit(run(process.argv.slice(2)));
}
