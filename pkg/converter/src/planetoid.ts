/**
 * Legacy citation-bundle conversion.
 *
 * A bundle is eight files named ind.<name>.<suffix>: pickled feature
 * matrices (x, tx, allx), one-hot label matrices (y, ty, ally), the
 * neighbor-list graph, and a plain-text test.index file. Node order is
 * the graph's: the allx rows come first, then the test rows, whose
 * positions within the tail are given by test.index (the file order is
 * shuffled; sorted order maps onto consecutive tail positions).
 *
 * Citeseer's test index famously skips some ids. Those gap nodes exist
 * in the graph but have no feature or label row; they get zero features
 * and label -1 and are excluded from every split. Any other dataset
 * with a non-contiguous test index is rejected outright.
 */

import * as fs from "fs";
import * as path from "path";

import { Dense, toDense, toGraph } from "./ndarray";
import { loads } from "./pickle";

export class ConvertError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConvertError";
  }
}

export const DATASET_NAMES = ["cora", "citeseer", "pubmed"] as const;
export type DatasetName = (typeof DATASET_NAMES)[number];

const PICKLED_SUFFIXES = ["x", "y", "tx", "ty", "allx", "ally", "graph"] as const;

/** The standard protocol holds out 500 nodes after the training rows. */
const VAL_SPLIT_SIZE = 500;

export interface Bundle {
  x: Dense;
  y: Dense;
  tx: Dense;
  ty: Dense;
  allx: Dense;
  ally: Dense;
  graph: Map<number, number[]>;
  testIndex: number[];
}

export interface ConvertedDataset {
  name: DatasetName;
  numNodes: number;
  numFeatures: number;
  numClasses: number;
  /** row-major numNodes x numFeatures */
  features: Float64Array;
  /** -1 marks unlabeled nodes */
  labels: Int32Array;
  /** undirected, i < j, sorted, no self loops, no duplicates */
  edges: Array<[number, number]>;
  train: number[];
  val: number[];
  test: number[];
  gapNodes: number[];
}

export function bundlePath(inputDir: string, name: DatasetName, suffix: string): string {
  return path.join(inputDir, `ind.${name}.${suffix}`);
}

function readPickled(inputDir: string, name: DatasetName, suffix: string): unknown {
  const file = bundlePath(inputDir, name, suffix);
  let buf: Buffer;
  try {
    buf = fs.readFileSync(file);
  } catch {
    throw new ConvertError(`missing bundle file ${file}`);
  }
  try {
    return loads(buf);
  } catch (err) {
    throw new ConvertError(`${file}: ${(err as Error).message}`);
  }
}

function readTestIndex(inputDir: string, name: DatasetName): number[] {
  const file = bundlePath(inputDir, name, "test.index");
  let text: string;
  try {
    text = fs.readFileSync(file, "ascii");
  } catch {
    throw new ConvertError(`missing bundle file ${file}`);
  }
  const ids: number[] = [];
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "") continue;
    if (!/^\d+$/.test(line)) {
      throw new ConvertError(`${file}:${i + 1}: not a node index: ${JSON.stringify(line)}`);
    }
    ids.push(parseInt(line, 10));
  }
  if (ids.length === 0) throw new ConvertError(`${file}: no test indices`);
  return ids;
}

export function readBundle(inputDir: string, name: DatasetName): Bundle {
  const raw: Record<string, unknown> = {};
  for (const suffix of PICKLED_SUFFIXES) {
    raw[suffix] = readPickled(inputDir, name, suffix);
  }
  const bundle: Bundle = {
    x: toDenseChecked(raw.x, name, "x"),
    y: toDenseChecked(raw.y, name, "y"),
    tx: toDenseChecked(raw.tx, name, "tx"),
    ty: toDenseChecked(raw.ty, name, "ty"),
    allx: toDenseChecked(raw.allx, name, "allx"),
    ally: toDenseChecked(raw.ally, name, "ally"),
    graph: toGraphChecked(raw.graph, name),
    testIndex: readTestIndex(inputDir, name),
  };
  validateShapes(bundle, name);
  return bundle;
}

function toDenseChecked(obj: unknown, name: DatasetName, suffix: string): Dense {
  try {
    return toDense(obj, suffix);
  } catch (err) {
    throw new ConvertError(`ind.${name}.${suffix}: ${(err as Error).message}`);
  }
}

function toGraphChecked(obj: unknown, name: DatasetName): Map<number, number[]> {
  try {
    return toGraph(obj, "graph");
  } catch (err) {
    throw new ConvertError(`ind.${name}.graph: ${(err as Error).message}`);
  }
}

function validateShapes(bundle: Bundle, name: DatasetName): void {
  const { x, y, tx, ty, allx, ally } = bundle;
  const checks: Array<[string, boolean]> = [
    ["x and y row counts differ", x.rows !== y.rows],
    ["tx and ty row counts differ", tx.rows !== ty.rows],
    ["allx and ally row counts differ", allx.rows !== ally.rows],
    ["x and allx feature widths differ", x.cols !== allx.cols],
    ["tx and allx feature widths differ", tx.cols !== allx.cols],
    ["y and ally class widths differ", y.cols !== ally.cols],
    ["ty and ally class widths differ", ty.cols !== ally.cols],
    ["no classes", ally.cols < 1],
    ["no features", allx.cols < 1],
    ["more training labels than allx rows", y.rows > allx.rows],
  ];
  for (const [message, bad] of checks) {
    if (bad) throw new ConvertError(`ind.${name}.*: ${message}`);
  }
}

/** argmax of a one-hot row; all zeros means unlabeled (-1). */
function labelOf(matrix: Dense, row: number): number {
  let best = -1;
  let bestValue = 0;
  for (let j = 0; j < matrix.cols; j++) {
    const v = matrix.values[row * matrix.cols + j];
    if (v > bestValue) {
      bestValue = v;
      best = j;
    }
  }
  return best;
}

export function convertBundle(bundle: Bundle, name: DatasetName): ConvertedDataset {
  const { allx, ally, tx, ty, y, graph, testIndex } = bundle;
  const numFeatures = allx.cols;
  const numClasses = ally.cols;

  const seen = new Set<number>();
  for (const id of testIndex) {
    if (seen.has(id)) throw new ConvertError(`duplicate test index ${id}`);
    seen.add(id);
  }
  const sorted = [...testIndex].sort((a, b) => a - b);
  const minId = sorted[0];
  const maxId = sorted[sorted.length - 1];
  if (minId !== allx.rows) {
    throw new ConvertError(
      `test indices start at ${minId}, expected ${allx.rows} (the row count of allx)`);
  }
  const span = maxId - minId + 1;
  if (span !== testIndex.length && name !== "citeseer") {
    throw new ConvertError(
      `test index has gaps (${testIndex.length} ids spanning ${span} positions); `
      + `only citeseer is known to need gap patching`);
  }
  if (testIndex.length !== tx.rows) {
    throw new ConvertError(
      `test index lists ${testIndex.length} ids but tx has ${tx.rows} rows`);
  }

  const numNodes = allx.rows + span;
  const features = new Float64Array(numNodes * numFeatures);
  const labels = new Int32Array(numNodes).fill(-1);

  features.set(allx.values.subarray(0, allx.rows * numFeatures), 0);
  for (let i = 0; i < allx.rows; i++) labels[i] = labelOf(ally, i);
  for (let i = 0; i < testIndex.length; i++) {
    const node = testIndex[i];
    features.set(
      tx.values.subarray(i * numFeatures, (i + 1) * numFeatures),
      node * numFeatures);
    labels[node] = labelOf(ty, i);
  }
  const gapNodes: number[] = [];
  for (let id = minId; id <= maxId; id++) {
    if (!seen.has(id)) gapNodes.push(id);
  }

  const edges = collectEdges(graph, numNodes);

  const train = range(0, y.rows);
  const val = range(y.rows, y.rows + Math.min(VAL_SPLIT_SIZE, allx.rows - y.rows));
  const test = sorted;
  for (const [splitName, ids] of [["train", train], ["val", val], ["test", test]] as const) {
    for (const id of ids) {
      if (labels[id] < 0) {
        throw new ConvertError(`${splitName} split contains unlabeled node ${id}`);
      }
    }
  }

  return {
    name,
    numNodes,
    numFeatures,
    numClasses,
    features,
    labels,
    edges,
    train,
    val,
    test,
    gapNodes,
  };
}

function collectEdges(graph: Map<number, number[]>, numNodes: number): Array<[number, number]> {
  const keys = new Set<number>();
  for (const [node, neighbors] of graph) {
    if (node < 0 || node >= numNodes) {
      throw new ConvertError(`graph node ${node} out of range for ${numNodes} nodes`);
    }
    for (const other of neighbors) {
      if (other < 0 || other >= numNodes) {
        throw new ConvertError(`graph neighbor ${other} of node ${node} out of range`);
      }
      if (other === node) continue; // self loops carry no information here
      const i = Math.min(node, other);
      const j = Math.max(node, other);
      keys.add(i * numNodes + j);
    }
  }
  return [...keys]
    .sort((a, b) => a - b)
    .map((key) => [Math.floor(key / numNodes), key % numNodes]);
}

function range(start: number, stop: number): number[] {
  const out: number[] = [];
  for (let i = start; i < stop; i++) out.push(i);
  return out;
}

export function convert(inputDir: string, name: DatasetName): ConvertedDataset {
  return convertBundle(readBundle(inputDir, name), name);
}
