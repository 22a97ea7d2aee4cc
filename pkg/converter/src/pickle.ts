/**
 * Minimal pickle virtual machine covering the object shapes found in the
 * Planetoid distribution: python-2-era protocol-2 streams holding scipy CSR
 * matrices, numpy arrays, and a defaultdict of neighbor lists.  Protocol 3-5
 * framing and byte opcodes are handled too so python-3 re-pickles parse.
 *
 * Values surface as plain tagged objects; nothing is executed.
 */

export type PyValue =
  | null
  | boolean
  | number
  | string
  | PyValue[]
  | PyBytes
  | PyGlobal
  | PyDict
  | NDArray
  | DType
  | PyInstance;

export interface PyBytes {
  kind: 'bytes';
  data: Uint8Array;
}

export interface PyGlobal {
  kind: 'global';
  module: string;
  name: string;
}

export interface PyDict {
  kind: 'dict';
  entries: Map<string | number, PyValue>;
  defaultFactory?: PyGlobal;
}

export interface NDArray {
  kind: 'ndarray';
  shape: number[];
  descr: string; // e.g. '<f4', '<i4', '|u1'
  data: Uint8Array;
}

export interface DType {
  kind: 'dtype';
  descr: string;
  byteorder: string;
}

/** Generic reduced-then-built instance (csr_matrix arrives this way). */
export interface PyInstance {
  kind: 'instance';
  cls: PyGlobal;
  state: PyValue;
}

export class PickleError extends Error {}

const MARK: unique symbol = Symbol('mark');
type StackItem = PyValue | typeof MARK;

function latin1(bytes: Uint8Array): string {
  let s = '';
  for (let i = 0; i < bytes.length; i++) s += String.fromCharCode(bytes[i]);
  return s;
}

function asString(v: PyValue): string {
  if (typeof v === 'string') return v;
  if (v && typeof v === 'object' && (v as PyBytes).kind === 'bytes') {
    return latin1((v as PyBytes).data);
  }
  throw new PickleError(`expected a string, got ${JSON.stringify(v)}`);
}

function asBytes(v: PyValue): Uint8Array {
  if (v && typeof v === 'object' && (v as PyBytes).kind === 'bytes') {
    return (v as PyBytes).data;
  }
  if (typeof v === 'string') {
    const out = new Uint8Array(v.length);
    for (let i = 0; i < v.length; i++) out[i] = v.charCodeAt(i) & 0xff;
    return out;
  }
  throw new PickleError('expected a byte payload');
}

function isGlobal(v: PyValue, module: RegExp, name: string): boolean {
  return !!v && typeof v === 'object' && (v as PyGlobal).kind === 'global' &&
    module.test((v as PyGlobal).module) && (v as PyGlobal).name === name;
}

function reduce(fn: PyValue, args: PyValue[]): PyValue {
  if (isGlobal(fn, /^copy_?reg$/, '_reconstructor')) {
    const cls = args[0] as PyGlobal;
    return { kind: 'instance', cls, state: null };
  }
  if (isGlobal(fn, /^numpy(\.|_)?(core|_core)?(\.multiarray)?$/, '_reconstruct') ||
      isGlobal(fn, /multiarray$/, '_reconstruct')) {
    return { kind: 'ndarray', shape: [], descr: '', data: new Uint8Array(0) };
  }
  if (isGlobal(fn, /^numpy$/, 'ndarray')) {
    return { kind: 'ndarray', shape: [], descr: '', data: new Uint8Array(0) };
  }
  if (isGlobal(fn, /^numpy$/, 'dtype')) {
    return { kind: 'dtype', descr: asString(args[0]), byteorder: '<' };
  }
  if (isGlobal(fn, /^collections$/, 'defaultdict')) {
    return { kind: 'dict', entries: new Map(), defaultFactory: args[0] as PyGlobal };
  }
  if (isGlobal(fn, /^_codecs$/, 'encode')) {
    return { kind: 'bytes', data: asBytes(args[0]) };
  }
  // scipy >= 1.8 pickles sparse matrices through sparse containers rebuilt
  // from (cls, (data, indices, indptr), shape)-style calls; surface as an
  // instance and let BUILD attach the state.
  if ((fn as PyGlobal)?.kind === 'global') {
    return { kind: 'instance', cls: fn as PyGlobal, state: args as PyValue };
  }
  throw new PickleError('REDUCE on a non-global callable');
}

function applyBuild(obj: PyValue, state: PyValue): PyValue {
  if (obj && typeof obj === 'object' && (obj as NDArray).kind === 'ndarray') {
    const arr = obj as NDArray;
    const s = state as PyValue[];
    // state: (version?, shape, dtype, fortranOrder, raw)
    const off = s.length === 5 ? 1 : 0;
    arr.shape = (s[off] as PyValue[]).map((d) => d as number);
    const dt = s[off + 1] as DType;
    arr.descr = (dt.byteorder === '|' ? '|' : '<') + dt.descr;
    if (s[off + 2]) throw new PickleError('fortran-order arrays unsupported');
    const raw = s[off + 3];
    arr.data = Array.isArray(raw)
      ? numberListToBytes(raw as number[], arr.descr)
      : asBytes(raw);
    return arr;
  }
  if (obj && typeof obj === 'object' && (obj as DType).kind === 'dtype') {
    const dt = obj as DType;
    const s = state as PyValue[];
    if (Array.isArray(s) && s.length >= 2) dt.byteorder = asString(s[1]);
    return dt;
  }
  if (obj && typeof obj === 'object' && (obj as PyInstance).kind === 'instance') {
    (obj as PyInstance).state = state;
    return obj;
  }
  if (obj && typeof obj === 'object' && (obj as PyDict).kind === 'dict') {
    const st = state as PyDict;
    for (const [k, v] of st.entries) (obj as PyDict).entries.set(k, v);
    return obj;
  }
  throw new PickleError('BUILD on an unsupported object');
}

function numberListToBytes(values: number[], descr: string): Uint8Array {
  const out = new Uint8Array(values.length * itemSize(descr));
  const view = new DataView(out.buffer);
  values.forEach((v, i) => writeScalar(view, i, v, descr));
  return out;
}

export function itemSize(descr: string): number {
  const d = descr.replace(/^[<>|=]/, '');
  const size = parseInt(d.slice(1), 10);
  if (!Number.isFinite(size)) throw new PickleError(`bad dtype ${descr}`);
  return size;
}

function writeScalar(view: DataView, index: number, v: number, descr: string) {
  const d = descr.replace(/^[<>|=]/, '');
  switch (d) {
    case 'f4': view.setFloat32(index * 4, v, true); break;
    case 'f8': view.setFloat64(index * 8, v, true); break;
    case 'i4': view.setInt32(index * 4, v, true); break;
    case 'i8': view.setBigInt64(index * 8, BigInt(v), true); break;
    case 'u1': view.setUint8(index, v); break;
    default: throw new PickleError(`unsupported dtype ${descr}`);
  }
}

/** Decode an NDArray's buffer to plain numbers (row-major). */
export function toNumbers(arr: NDArray): number[] {
  const d = arr.descr.replace(/^[<>|=]/, '');
  const view = new DataView(arr.data.buffer, arr.data.byteOffset, arr.data.byteLength);
  const count = arr.data.byteLength / itemSize(arr.descr);
  const out = new Array<number>(count);
  for (let i = 0; i < count; i++) {
    switch (d) {
      case 'f4': out[i] = view.getFloat32(i * 4, true); break;
      case 'f8': out[i] = view.getFloat64(i * 8, true); break;
      case 'i4': out[i] = view.getInt32(i * 4, true); break;
      case 'i8': out[i] = Number(view.getBigInt64(i * 8, true)); break;
      case 'u1': out[i] = view.getUint8(i); break;
      case 'b1': out[i] = view.getUint8(i); break;
      default: throw new PickleError(`unsupported dtype ${arr.descr}`);
    }
  }
  return out;
}

export function loads(buf: Uint8Array): PyValue {
  const stack: StackItem[] = [];
  const memo: PyValue[] = [];
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  let pos = 0;

  const u1 = () => buf[pos++];
  const u2 = () => { const v = view.getUint16(pos, true); pos += 2; return v; };
  const u4 = () => { const v = view.getUint32(pos, true); pos += 4; return v; };
  const i4 = () => { const v = view.getInt32(pos, true); pos += 4; return v; };
  const take = (n: number) => { const v = buf.subarray(pos, pos + n); pos += n; return v; };
  const line = () => {
    const end = buf.indexOf(0x0a, pos);
    if (end < 0) throw new PickleError('unterminated text opcode');
    const s = latin1(buf.subarray(pos, end));
    pos = end + 1;
    return s;
  };
  const pop = (): PyValue => {
    const v = stack.pop();
    if (v === undefined || v === MARK) throw new PickleError('stack underflow');
    return v;
  };
  const popToMark = (): PyValue[] => {
    const items: PyValue[] = [];
    for (;;) {
      const v = stack.pop();
      if (v === undefined) throw new PickleError('no MARK on stack');
      if (v === MARK) break;
      items.push(v);
    }
    return items.reverse();
  };
  const memoPut = (index: number) => {
    const top = stack[stack.length - 1];
    if (top === undefined || top === MARK) throw new PickleError('PUT on empty stack');
    memo[index] = top;
  };

  for (;;) {
    const op = u1();
    switch (op) {
      case 0x80: u1(); break;                       // PROTO
      case 0x95: take(8); break;                    // FRAME
      case 0x2e: {                                  // STOP
        const result = pop();
        if (stack.length) throw new PickleError('extra items on stack at STOP');
        return result;
      }
      case 0x28: stack.push(MARK); break;           // MARK
      case 0x4e: stack.push(null); break;           // NONE
      case 0x88: stack.push(true); break;           // NEWTRUE
      case 0x89: stack.push(false); break;          // NEWFALSE
      case 0x4a: stack.push(i4()); break;           // BININT
      case 0x4b: stack.push(u1()); break;           // BININT1
      case 0x4d: stack.push(u2()); break;           // BININT2
      case 0x8a: {                                  // LONG1
        const n = u1();
        const raw = take(n);
        let value = 0n;
        for (let i = n - 1; i >= 0; i--) value = (value << 8n) | BigInt(raw[i]);
        if (n && raw[n - 1] & 0x80) value -= 1n << BigInt(8 * n);
        stack.push(Number(value));
        break;
      }
      case 0x47: {                                  // BINFLOAT (big-endian)
        const v = view.getFloat64(pos, false); pos += 8;
        stack.push(v);
        break;
      }
      case 0x55: stack.push({ kind: 'bytes', data: take(u1()) } as PyBytes); break; // SHORT_BINSTRING
      case 0x54: stack.push({ kind: 'bytes', data: take(u4()) } as PyBytes); break; // BINSTRING
      case 0x58: stack.push(new TextDecoder().decode(take(u4()))); break;           // BINUNICODE
      case 0x8c: stack.push(new TextDecoder().decode(take(u1()))); break;           // SHORT_BINUNICODE
      case 0x42: stack.push({ kind: 'bytes', data: take(u4()) } as PyBytes); break; // BINBYTES
      case 0x43: stack.push({ kind: 'bytes', data: take(u1()) } as PyBytes); break; // SHORT_BINBYTES
      case 0x63: {                                  // GLOBAL
        const module = line();
        const name = line();
        stack.push({ kind: 'global', module, name } as PyGlobal);
        break;
      }
      case 0x93: {                                  // STACK_GLOBAL
        const name = asString(pop());
        const module = asString(pop());
        stack.push({ kind: 'global', module, name } as PyGlobal);
        break;
      }
      case 0x71: memoPut(u1()); break;              // BINPUT
      case 0x72: memoPut(u4()); break;              // LONG_BINPUT
      case 0x94: memoPut(memo.length); break;       // MEMOIZE
      case 0x68: stack.push(memo[u1()]); break;     // BINGET
      case 0x6a: stack.push(memo[u4()]); break;     // LONG_BINGET
      case 0x29: stack.push([]); break;             // EMPTY_TUPLE
      case 0x85: stack.push([pop()]); break;        // TUPLE1
      case 0x86: { const b = pop(); const a = pop(); stack.push([a, b]); break; }   // TUPLE2
      case 0x87: { const c = pop(); const b = pop(); const a = pop(); stack.push([a, b, c]); break; } // TUPLE3
      case 0x74: stack.push(popToMark()); break;    // TUPLE
      case 0x5d: stack.push([]); break;             // EMPTY_LIST
      case 0x7d: stack.push({ kind: 'dict', entries: new Map() } as PyDict); break; // EMPTY_DICT
      case 0x61: {                                  // APPEND
        const v = pop();
        const list = stack[stack.length - 1];
        if (!Array.isArray(list)) throw new PickleError('APPEND to non-list');
        list.push(v);
        break;
      }
      case 0x65: {                                  // APPENDS
        const items = popToMark();
        const list = stack[stack.length - 1];
        if (!Array.isArray(list)) throw new PickleError('APPENDS to non-list');
        list.push(...items);
        break;
      }
      case 0x73: {                                  // SETITEM
        const v = pop();
        const k = pop();
        setItem(stack[stack.length - 1], k, v);
        break;
      }
      case 0x75: {                                  // SETITEMS
        const items = popToMark();
        const target = stack[stack.length - 1];
        for (let i = 0; i < items.length; i += 2) setItem(target, items[i], items[i + 1]);
        break;
      }
      case 0x52: {                                  // REDUCE
        const args = pop();
        const fn = pop();
        stack.push(reduce(fn, args as PyValue[]));
        break;
      }
      case 0x62: {                                  // BUILD
        const state = pop();
        const obj = pop();
        stack.push(applyBuild(obj, state));
        break;
      }
      default:
        throw new PickleError(
          `unsupported pickle opcode 0x${op.toString(16)} at offset ${pos - 1}`);
    }
  }
}

function setItem(target: StackItem | undefined, key: PyValue, value: PyValue) {
  if (!target || target === MARK) throw new PickleError('SETITEM on empty stack');
  if ((target as PyDict).kind !== 'dict') throw new PickleError('SETITEM on non-dict');
  const k = typeof key === 'number' ? key : asString(key);
  (target as PyDict).entries.set(k, value);
}
