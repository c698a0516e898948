/**
 * Minimal pickle reader for the legacy citation bundles.
 *
 * The input files were written by Python 2's cPickle at protocol 2 and
 * contain exactly five kinds of objects: numpy arrays, numpy dtypes,
 * scipy CSR matrices, collections.defaultdict neighbor maps, and the
 * plain containers underneath them. This loader implements the opcode
 * subset those files use (protocols 0-2 binary forms, plus the handful
 * of protocol 3/4 opcodes newer writers emit for the same structures)
 * and fails loudly on anything else.
 *
 * Python 2 byte strings are decoded as latin1 JS strings, which is a
 * lossless byte-per-character mapping; raw array payloads are recovered
 * with Buffer.from(s, "latin1").
 */

export class PickleError extends Error {
  constructor(message: string, offset?: number) {
    super(offset === undefined ? message : `${message} (at byte ${offset})`);
    this.name = "PickleError";
  }
}

/** Reference to a module-level name, e.g. numpy.ndarray. */
export class GlobalRef {
  constructor(readonly module: string, readonly name: string) {}

  matches(modules: readonly string[], name: string): boolean {
    return this.name === name && modules.includes(this.module);
  }
}

/** numpy dtype under reconstruction: code like "f8", byte order "<" etc. */
export class DTypeRaw {
  byteorder = "=";
  constructor(public code: string) {}
}

/** numpy ndarray under reconstruction; filled in by the BUILD opcode. */
export class NdArrayRaw {
  shape: number[] = [];
  dtype: DTypeRaw | null = null;
  fortran = false;
  data: Uint8Array | null = null;
}

/** scipy CSR matrix under reconstruction; state arrives via BUILD. */
export class CsrRaw {
  shape: [number, number] | null = null;
  data: NdArrayRaw | null = null;
  indices: NdArrayRaw | null = null;
  indptr: NdArrayRaw | null = null;
}

const NUMPY_RECONSTRUCT_MODULES = [
  "numpy.core.multiarray",
  "numpy._core.multiarray",
] as const;
const CSR_MODULES = [
  "scipy.sparse.csr",
  "scipy.sparse._csr",
  "scipy.sparse",
] as const;
const LIST_MODULES = ["__builtin__", "builtins"] as const;

const MARK_SENTINEL: unique symbol = Symbol("mark");

function latin1Bytes(s: string): Uint8Array {
  return Uint8Array.from(Buffer.from(s, "latin1"));
}

export function loads(buf: Buffer): unknown {
  return new Unpickler(buf).load();
}

class Unpickler {
  private pos = 0;
  private stack: unknown[] = [];
  private memo = new Map<number, unknown>();

  constructor(private buf: Buffer) {}

  load(): unknown {
    for (;;) {
      const offset = this.pos;
      const op = this.u8();
      switch (op) {
        case 0x80: // PROTO
          this.u8();
          break;
        case 0x95: // FRAME (protocol 4); length is advisory
          this.pos += 8;
          break;
        case 0x2e: { // STOP
          const value = this.pop();
          if (this.stack.length !== 0) {
            throw new PickleError("stack not empty at STOP", offset);
          }
          return value;
        }

        case 0x4e: this.stack.push(null); break;          // NONE
        case 0x88: this.stack.push(true); break;          // NEWTRUE
        case 0x89: this.stack.push(false); break;         // NEWFALSE
        case 0x4a: this.stack.push(this.buf.readInt32LE(this.chunk(4))); break;    // BININT
        case 0x4b: this.stack.push(this.buf.readUInt8(this.chunk(1))); break;      // BININT1
        case 0x4d: this.stack.push(this.buf.readUInt16LE(this.chunk(2))); break;   // BININT2
        case 0x49: this.stack.push(this.textInt(offset)); break;                   // INT
        case 0x4c: this.stack.push(this.textLong(offset)); break;                  // LONG
        case 0x8a: this.stack.push(this.long1(offset)); break;                     // LONG1
        case 0x8b: this.stack.push(this.longN(this.buf.readUInt32LE(this.chunk(4)), offset)); break; // LONG4
        case 0x47: this.stack.push(this.buf.readDoubleBE(this.chunk(8))); break;   // BINFLOAT
        case 0x46: this.stack.push(parseFloat(this.line())); break;                // FLOAT

        case 0x54: this.stack.push(this.latin1(this.buf.readUInt32LE(this.chunk(4)))); break; // BINSTRING
        case 0x55: this.stack.push(this.latin1(this.buf.readUInt8(this.chunk(1)))); break;    // SHORT_BINSTRING
        case 0x58: this.stack.push(this.utf8(this.buf.readUInt32LE(this.chunk(4)))); break;   // BINUNICODE
        case 0x8c: this.stack.push(this.utf8(this.buf.readUInt8(this.chunk(1)))); break;      // SHORT_BINUNICODE
        case 0x42: this.stack.push(this.bytes(this.buf.readUInt32LE(this.chunk(4)))); break;  // BINBYTES
        case 0x43: this.stack.push(this.bytes(this.buf.readUInt8(this.chunk(1)))); break;     // SHORT_BINBYTES

        case 0x28: this.stack.push(MARK_SENTINEL); break; // MARK
        case 0x30: this.pop(); break;                     // POP
        case 0x31: this.popMark(); break;                 // POP_MARK
        case 0x32: this.stack.push(this.stack[this.stack.length - 1]); break; // DUP

        case 0x29: this.stack.push([]); break;            // EMPTY_TUPLE
        case 0x74: this.stack.push(this.popMark()); break; // TUPLE
        case 0x85: this.stack.push([this.pop()]); break;  // TUPLE1
        case 0x86: { const b = this.pop(); this.stack.push([this.pop(), b]); break; } // TUPLE2
        case 0x87: { const c = this.pop(); const b = this.pop(); this.stack.push([this.pop(), b, c]); break; } // TUPLE3

        case 0x5d: this.stack.push([]); break;            // EMPTY_LIST
        case 0x6c: this.stack.push(this.popMark()); break; // LIST
        case 0x61: { const v = this.pop(); this.asList(offset).push(v); break; }   // APPEND
        case 0x65: { const items = this.popMark(); this.asList(offset).push(...items); break; } // APPENDS

        case 0x7d: this.stack.push(new Map()); break;     // EMPTY_DICT
        case 0x64: { // DICT
          const items = this.popMark();
          const map = new Map();
          for (let i = 0; i < items.length; i += 2) map.set(items[i], items[i + 1]);
          this.stack.push(map);
          break;
        }
        case 0x73: { // SETITEM
          const value = this.pop();
          const key = this.pop();
          this.asMap(offset).set(key, value);
          break;
        }
        case 0x75: { // SETITEMS
          const items = this.popMark();
          const map = this.asMap(offset);
          for (let i = 0; i < items.length; i += 2) map.set(items[i], items[i + 1]);
          break;
        }

        case 0x71: this.memo.set(this.buf.readUInt8(this.chunk(1)), this.top()); break;    // BINPUT
        case 0x72: this.memo.set(this.buf.readUInt32LE(this.chunk(4)), this.top()); break; // LONG_BINPUT
        case 0x70: this.memo.set(parseInt(this.line(), 10), this.top()); break;            // PUT
        case 0x94: this.memo.set(this.memo.size, this.top()); break;                       // MEMOIZE
        case 0x68: this.stack.push(this.memoGet(this.buf.readUInt8(this.chunk(1)), offset)); break;    // BINGET
        case 0x6a: this.stack.push(this.memoGet(this.buf.readUInt32LE(this.chunk(4)), offset)); break; // LONG_BINGET
        case 0x67: this.stack.push(this.memoGet(parseInt(this.line(), 10), offset)); break;            // GET

        case 0x63: this.stack.push(new GlobalRef(this.line(), this.line())); break; // GLOBAL
        case 0x93: { // STACK_GLOBAL
          const name = this.pop();
          const module = this.pop();
          if (typeof module !== "string" || typeof name !== "string") {
            throw new PickleError("STACK_GLOBAL expects two strings", offset);
          }
          this.stack.push(new GlobalRef(module, name));
          break;
        }

        case 0x52: { // REDUCE
          const args = this.pop();
          const callee = this.pop();
          this.stack.push(this.reduce(callee, args as unknown[], offset));
          break;
        }
        case 0x81: { // NEWOBJ
          const args = this.pop();
          const cls = this.pop();
          this.stack.push(this.newobj(cls, args as unknown[], offset));
          break;
        }
        case 0x62: { // BUILD
          const state = this.pop();
          this.build(this.top(), state, offset);
          break;
        }

        default:
          throw new PickleError(
            `unsupported pickle opcode 0x${op.toString(16).padStart(2, "0")}`,
            offset,
          );
      }
    }
  }

  // ---- constructors -------------------------------------------------

  private reduce(callee: unknown, args: unknown[], offset: number): unknown {
    if (!(callee instanceof GlobalRef)) {
      throw new PickleError("REDUCE callee is not a global", offset);
    }
    if (callee.name === "_reconstruct"
        && (NUMPY_RECONSTRUCT_MODULES as readonly string[]).includes(callee.module)) {
      return new NdArrayRaw();
    }
    if (callee.matches(["numpy"], "dtype")) {
      const code = args[0];
      if (typeof code !== "string") {
        throw new PickleError("numpy.dtype argument is not a string", offset);
      }
      return new DTypeRaw(code);
    }
    if (callee.matches(["collections"], "defaultdict")) {
      return new Map();
    }
    if (callee.name === "_reconstructor"
        && (callee.module === "copy_reg" || callee.module === "copyreg")) {
      return this.newobj(args[0], [], offset);
    }
    throw new PickleError(
      `unsupported constructor ${callee.module}.${callee.name}`, offset);
  }

  private newobj(cls: unknown, _args: unknown[], offset: number): unknown {
    if (!(cls instanceof GlobalRef)) {
      throw new PickleError("NEWOBJ class is not a global", offset);
    }
    if (cls.matches(CSR_MODULES, "csr_matrix")) return new CsrRaw();
    if (cls.matches(["numpy"], "ndarray")) return new NdArrayRaw();
    if (cls.matches(["collections"], "defaultdict")) return new Map();
    throw new PickleError(`unsupported class ${cls.module}.${cls.name}`, offset);
  }

  private build(obj: unknown, state: unknown, offset: number): void {
    if (obj instanceof NdArrayRaw) {
      if (!Array.isArray(state) || state.length < 5) {
        throw new PickleError("bad ndarray state", offset);
      }
      const [, shape, dtype, fortran, data] = state as
        [unknown, unknown, unknown, unknown, unknown];
      if (!Array.isArray(shape) || !shape.every((d) => typeof d === "number")) {
        throw new PickleError("ndarray shape is not a tuple of ints", offset);
      }
      if (!(dtype instanceof DTypeRaw)) {
        throw new PickleError("ndarray state has no dtype", offset);
      }
      obj.shape = shape as number[];
      obj.dtype = dtype;
      obj.fortran = Boolean(fortran);
      if (typeof data === "string") obj.data = latin1Bytes(data);
      else if (data instanceof Uint8Array) obj.data = data;
      else throw new PickleError("ndarray payload is not raw bytes "
        + "(object arrays are not supported)", offset);
      return;
    }
    if (obj instanceof DTypeRaw) {
      if (!Array.isArray(state) || typeof state[1] !== "string") {
        throw new PickleError("bad dtype state", offset);
      }
      obj.byteorder = state[1];
      return;
    }
    if (obj instanceof CsrRaw) {
      if (!(state instanceof Map)) {
        throw new PickleError("CSR state is not a dict", offset);
      }
      const shape = state.get("_shape");
      if (!Array.isArray(shape) || shape.length !== 2
          || !shape.every((d) => typeof d === "number")) {
        throw new PickleError("CSR state has no valid _shape", offset);
      }
      obj.shape = [shape[0], shape[1]];
      for (const field of ["data", "indices", "indptr"] as const) {
        const arr = state.get(field);
        if (!(arr instanceof NdArrayRaw)) {
          throw new PickleError(`CSR state field ${field} is not an array`, offset);
        }
        obj[field] = arr;
      }
      return;
    }
    throw new PickleError("BUILD on unsupported object", offset);
  }

  // ---- stack and buffer helpers ------------------------------------

  private pop(): unknown {
    if (this.stack.length === 0) throw new PickleError("pop from empty stack", this.pos);
    return this.stack.pop();
  }

  private top(): unknown {
    if (this.stack.length === 0) throw new PickleError("empty stack", this.pos);
    return this.stack[this.stack.length - 1];
  }

  private popMark(): unknown[] {
    const idx = this.stack.lastIndexOf(MARK_SENTINEL);
    if (idx < 0) throw new PickleError("no MARK on stack", this.pos);
    const items = this.stack.splice(idx + 1);
    this.stack.pop();
    return items;
  }

  private asList(offset: number): unknown[] {
    const target = this.top();
    if (!Array.isArray(target)) throw new PickleError("APPEND target is not a list", offset);
    return target;
  }

  private asMap(offset: number): Map<unknown, unknown> {
    const target = this.top();
    if (!(target instanceof Map)) throw new PickleError("SETITEM target is not a dict", offset);
    return target;
  }

  private memoGet(key: number, offset: number): unknown {
    if (!this.memo.has(key)) throw new PickleError(`memo key ${key} not set`, offset);
    return this.memo.get(key);
  }

  private chunk(n: number): number {
    const at = this.pos;
    if (at + n > this.buf.length) throw new PickleError("truncated pickle", at);
    this.pos += n;
    return at;
  }

  private u8(): number {
    return this.buf.readUInt8(this.chunk(1));
  }

  private latin1(n: number): string {
    const at = this.chunk(n);
    return this.buf.toString("latin1", at, at + n);
  }

  private utf8(n: number): string {
    const at = this.chunk(n);
    return this.buf.toString("utf8", at, at + n);
  }

  private bytes(n: number): Uint8Array {
    const at = this.chunk(n);
    return Uint8Array.from(this.buf.subarray(at, at + n));
  }

  private line(): string {
    const end = this.buf.indexOf(0x0a, this.pos);
    if (end < 0) throw new PickleError("unterminated line", this.pos);
    const text = this.buf.toString("latin1", this.pos, end);
    this.pos = end + 1;
    return text;
  }

  private textInt(offset: number): number | boolean {
    const text = this.line();
    if (text === "00") return false;
    if (text === "01") return true;
    const value = parseInt(text, 10);
    if (!Number.isFinite(value)) throw new PickleError(`bad INT literal ${text}`, offset);
    return value;
  }

  private textLong(offset: number): number {
    const text = this.line().replace(/L$/, "");
    const value = Number(BigInt(text));
    if (!Number.isSafeInteger(value)) {
      throw new PickleError(`LONG ${text} exceeds safe integer range`, offset);
    }
    return value;
  }

  private long1(offset: number): number {
    const n = this.buf.readUInt8(this.chunk(1));
    return this.longN(n, offset);
  }

  /** Little-endian two's-complement integer of n bytes. */
  private longN(n: number, offset: number): number {
    if (n === 0) return 0;
    const at = this.chunk(n);
    let value = 0n;
    for (let i = n - 1; i >= 0; i--) {
      value = (value << 8n) | BigInt(this.buf[at + i]);
    }
    if (this.buf[at + n - 1] & 0x80) value -= 1n << BigInt(8 * n);
    const out = Number(value);
    if (!Number.isSafeInteger(out)) {
      throw new PickleError("integer exceeds safe range", offset);
    }
    return out;
  }
}
