/**
 * Writer for the portable dataset directory format.
 *
 * The five files are produced byte-for-byte the way the Python side
 * writes them, so converting the same bundle twice yields identical
 * directories and the output loads without any normalization step.
 */

import * as crypto from "crypto";
import * as fs from "fs";
import * as path from "path";

import { ConvertedDataset } from "./planetoid";

export interface ConversionReport {
  name: string;
  num_nodes: number;
  num_edges: number;
  num_features: number;
  num_classes: number;
  gap_nodes: number;
  split_sizes: { train: number; val: number; test: number };
  checksums: Record<string, string>;
}

/** Integer list in Python's default json.dumps spelling: [0, 1, 2]. */
function jsonIntList(values: number[]): string {
  return `[${values.join(", ")}]`;
}

function metaJson(ds: ConvertedDataset): Buffer {
  const meta = {
    name: ds.name,
    num_nodes: ds.numNodes,
    num_features: ds.numFeatures,
    num_classes: ds.numClasses,
    feature_dtype: "f64le",
  };
  return Buffer.from(JSON.stringify(meta, null, 2) + "\n", "utf8");
}

function edgesTsv(ds: ConvertedDataset): Buffer {
  const lines = ds.edges.map(([i, j]) => `${i}\t${j}`);
  return Buffer.from(lines.length ? lines.join("\n") + "\n" : "", "ascii");
}

function featuresBin(ds: ConvertedDataset): Buffer {
  const buf = Buffer.alloc(ds.features.length * 8);
  for (let i = 0; i < ds.features.length; i++) {
    buf.writeDoubleLE(ds.features[i], i * 8);
  }
  return buf;
}

function labelsTsv(ds: ConvertedDataset): Buffer {
  return Buffer.from(Array.from(ds.labels).join("\n") + "\n", "ascii");
}

function splitsJson(ds: ConvertedDataset): Buffer {
  const body = `{"train": ${jsonIntList(ds.train)}, `
    + `"val": ${jsonIntList(ds.val)}, `
    + `"test": ${jsonIntList(ds.test)}}`;
  return Buffer.from(body + "\n", "utf8");
}

export function writeDatasetDir(ds: ConvertedDataset, outDir: string): ConversionReport {
  const files: Array<[string, Buffer]> = [
    ["meta.json", metaJson(ds)],
    ["edges.tsv", edgesTsv(ds)],
    ["features.bin", featuresBin(ds)],
    ["labels.tsv", labelsTsv(ds)],
    ["splits.json", splitsJson(ds)],
  ];
  fs.mkdirSync(outDir, { recursive: true });
  const checksums: Record<string, string> = {};
  for (const [name, buf] of files) {
    fs.writeFileSync(path.join(outDir, name), buf);
    checksums[name] = crypto.createHash("sha256").update(buf).digest("hex");
  }
  return {
    name: ds.name,
    num_nodes: ds.numNodes,
    num_edges: ds.edges.length,
    num_features: ds.numFeatures,
    num_classes: ds.numClasses,
    gap_nodes: ds.gapNodes.length,
    split_sizes: {
      train: ds.train.length,
      val: ds.val.length,
      test: ds.test.length,
    },
    checksums,
  };
}
