/**
 * Dense (N, C, H, W) float32 depth tensor.
 *
 * Every render returns a fresh tensor backed by its own buffer
 * (snapshot semantics): nothing in this package mutates a tensor after
 * handing it out.
 */

export type Shape4 = [number, number, number, number];

export class DepthTensor {
  readonly shape: Shape4;
  readonly data: Float32Array;

  constructor(shape: Shape4, data: Float32Array) {
    const count = shape[0] * shape[1] * shape[2] * shape[3];
    if (shape.some((d) => !Number.isInteger(d) || d < 0)) {
      throw new RangeError(`invalid shape ${shape.join("x")}`);
    }
    if (data.length !== count) {
      throw new RangeError(
        `data length ${data.length} does not match shape ${shape.join("x")}`,
      );
    }
    this.shape = [shape[0], shape[1], shape[2], shape[3]];
    this.data = data;
  }

  get envs(): number {
    return this.shape[0];
  }

  get cameras(): number {
    return this.shape[1];
  }

  get height(): number {
    return this.shape[2];
  }

  get width(): number {
    return this.shape[3];
  }

  index(n: number, c: number, y: number, x: number): number {
    const [N, C, H, W] = this.shape;
    if (n < 0 || n >= N || c < 0 || c >= C || y < 0 || y >= H || x < 0 || x >= W) {
      throw new RangeError(
        `index (${n}, ${c}, ${y}, ${x}) out of bounds for ${this.shape.join("x")}`,
      );
    }
    return ((n * C + c) * H + y) * W + x;
  }

  get(n: number, c: number, y: number, x: number): number {
    return this.data[this.index(n, c, y, x)];
  }

  /** Read-only view of one environment's (C, H, W) block. */
  envData(n: number): Float32Array {
    const [N, C, H, W] = this.shape;
    if (n < 0 || n >= N) {
      throw new RangeError(`env ${n} out of bounds for ${N} envs`);
    }
    const size = C * H * W;
    return this.data.subarray(n * size, (n + 1) * size);
  }

  /** Bitwise equality, distinguishing NaN payloads and signed zeros. */
  bitEquals(other: DepthTensor): boolean {
    if (this.shape.some((d, i) => d !== other.shape[i])) {
      return false;
    }
    const a = new Uint32Array(this.data.buffer, this.data.byteOffset, this.data.length);
    const b = new Uint32Array(other.data.buffer, other.data.byteOffset, other.data.length);
    for (let i = 0; i < a.length; i++) {
      if (a[i] !== b[i]) {
        return false;
      }
    }
    return true;
  }

  /** Deep copy. */
  clone(): DepthTensor {
    return new DepthTensor(this.shape, this.data.slice());
  }
}

/** Bitwise equality of two float32 arrays. */
export function bitEqual(a: Float32Array, b: Float32Array): boolean {
  if (a.length !== b.length) {
    return false;
  }
  const ua = new Uint32Array(a.buffer, a.byteOffset, a.length);
  const ub = new Uint32Array(b.buffer, b.byteOffset, b.length);
  for (let i = 0; i < ua.length; i++) {
    if (ua[i] !== ub[i]) {
      return false;
    }
  }
  return true;
}
