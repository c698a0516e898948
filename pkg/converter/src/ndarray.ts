/**
 * Materialize unpickled numpy/scipy placeholders into plain numbers.
 *
 * Everything becomes row-major Float64Array matrices: the bundles only
 * hold small integers and floats, so doubles represent all of them
 * exactly.
 */

import { CsrRaw, DTypeRaw, NdArrayRaw } from "./pickle";

export class MaterializeError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "MaterializeError";
  }
}

export interface Dense {
  rows: number;
  cols: number;
  /** row-major, length rows * cols */
  values: Float64Array;
}

interface DTypeInfo {
  itemSize: number;
  read(view: DataView, byteOffset: number, littleEndian: boolean): number;
}

const DTYPES: Record<string, DTypeInfo> = {
  f8: { itemSize: 8, read: (v, o, le) => v.getFloat64(o, le) },
  f4: { itemSize: 4, read: (v, o, le) => v.getFloat32(o, le) },
  i8: { itemSize: 8, read: (v, o, le) => safeBigInt(v.getBigInt64(o, le)) },
  u8: { itemSize: 8, read: (v, o, le) => safeBigInt(v.getBigUint64(o, le)) },
  i4: { itemSize: 4, read: (v, o, le) => v.getInt32(o, le) },
  u4: { itemSize: 4, read: (v, o, le) => v.getUint32(o, le) },
  i2: { itemSize: 2, read: (v, o, le) => v.getInt16(o, le) },
  u2: { itemSize: 2, read: (v, o, le) => v.getUint16(o, le) },
  i1: { itemSize: 1, read: (v, o) => v.getInt8(o) },
  u1: { itemSize: 1, read: (v, o) => v.getUint8(o) },
  b1: { itemSize: 1, read: (v, o) => v.getUint8(o) },
};

function safeBigInt(value: bigint): number {
  const out = Number(value);
  if (!Number.isSafeInteger(out)) {
    throw new MaterializeError(`integer value ${value} exceeds safe range`);
  }
  return out;
}

function dtypeInfo(dtype: DTypeRaw | null): { info: DTypeInfo; littleEndian: boolean } {
  if (dtype === null) throw new MaterializeError("array has no dtype");
  const code = dtype.code.replace(/^[<>=|]/, "");
  const info = DTYPES[code];
  if (info === undefined) {
    throw new MaterializeError(`unsupported dtype ${dtype.code}`);
  }
  const orderChar = /^[<>=|]/.test(dtype.code) ? dtype.code[0] : dtype.byteorder;
  if (orderChar === ">") return { info, littleEndian: false };
  return { info, littleEndian: true };
}

/** Flatten an unpickled ndarray to numbers, checking shape and payload size. */
export function toNumbers(arr: NdArrayRaw, what: string): { shape: number[]; values: Float64Array } {
  if (arr.fortran) {
    throw new MaterializeError(`${what}: Fortran-order arrays are not supported`);
  }
  if (arr.data === null) {
    throw new MaterializeError(`${what}: array has no payload`);
  }
  const { info, littleEndian } = dtypeInfo(arr.dtype);
  const count = arr.shape.reduce((a, b) => a * b, 1);
  if (arr.data.length !== count * info.itemSize) {
    throw new MaterializeError(
      `${what}: payload is ${arr.data.length} bytes, expected `
      + `${count * info.itemSize} for shape [${arr.shape.join(", ")}]`);
  }
  const view = new DataView(arr.data.buffer, arr.data.byteOffset, arr.data.byteLength);
  const values = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    values[i] = info.read(view, i * info.itemSize, littleEndian);
  }
  return { shape: arr.shape.slice(), values };
}

function denseFromNdArray(arr: NdArrayRaw, what: string): Dense {
  const { shape, values } = toNumbers(arr, what);
  if (shape.length !== 2) {
    throw new MaterializeError(`${what}: expected a 2-d array, got shape [${shape.join(", ")}]`);
  }
  return { rows: shape[0], cols: shape[1], values };
}

function denseFromCsr(raw: CsrRaw, what: string): Dense {
  if (raw.shape === null || raw.data === null || raw.indices === null || raw.indptr === null) {
    throw new MaterializeError(`${what}: CSR state is incomplete`);
  }
  const [rows, cols] = raw.shape;
  const data = toNumbers(raw.data, `${what}.data`).values;
  const indices = toNumbers(raw.indices, `${what}.indices`).values;
  const indptr = toNumbers(raw.indptr, `${what}.indptr`).values;
  if (indptr.length !== rows + 1 || indptr[0] !== 0 || indptr[rows] !== data.length
      || indices.length !== data.length) {
    throw new MaterializeError(`${what}: inconsistent CSR index arrays`);
  }
  const values = new Float64Array(rows * cols);
  for (let i = 0; i < rows; i++) {
    if (indptr[i + 1] < indptr[i]) {
      throw new MaterializeError(`${what}: indptr is not monotone at row ${i}`);
    }
    for (let p = indptr[i]; p < indptr[i + 1]; p++) {
      const j = indices[p];
      if (!Number.isInteger(j) || j < 0 || j >= cols) {
        throw new MaterializeError(`${what}: column index ${j} out of range at row ${i}`);
      }
      values[i * cols + j] += data[p];
    }
  }
  return { rows, cols, values };
}

/** Accept either a dense 2-d ndarray or a CSR matrix. */
export function toDense(obj: unknown, what: string): Dense {
  if (obj instanceof NdArrayRaw) return denseFromNdArray(obj, what);
  if (obj instanceof CsrRaw) return denseFromCsr(obj, what);
  throw new MaterializeError(`${what}: expected a matrix, got ${describe(obj)}`);
}

/** Neighbor map from an unpickled dict: int keys to int-list values. */
export function toGraph(obj: unknown, what: string): Map<number, number[]> {
  if (!(obj instanceof Map)) {
    throw new MaterializeError(`${what}: expected a dict, got ${describe(obj)}`);
  }
  const graph = new Map<number, number[]>();
  for (const [key, value] of obj) {
    if (typeof key !== "number" || !Number.isInteger(key)) {
      throw new MaterializeError(`${what}: non-integer node key ${String(key)}`);
    }
    if (!Array.isArray(value)) {
      throw new MaterializeError(`${what}: neighbors of ${key} are not a list`);
    }
    const neighbors: number[] = [];
    for (const v of value) {
      if (typeof v !== "number" || !Number.isInteger(v)) {
        throw new MaterializeError(`${what}: non-integer neighbor ${String(v)} of node ${key}`);
      }
      neighbors.push(v);
    }
    graph.set(key, neighbors);
  }
  return graph;
}

function describe(obj: unknown): string {
  if (obj === null) return "None";
  if (Array.isArray(obj)) return "a list";
  if (obj instanceof Map) return "a dict";
  return typeof obj;
}
