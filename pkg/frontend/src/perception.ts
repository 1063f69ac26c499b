/**
 * Perception utilities as pure functions on arrays: velocity-gated
 * feature scales, random side masking, and privileged height-map
 * extraction. These mirror the renderer's semantics; the side-mask
 * draws reproduce its counter-based streams bit-for-bit.
 */

import { categorical, streamKey, uniform } from "./rng.js";
import { DepthTensor } from "./tensor.js";

// ---------------------------------------------------------------------------
// DFSV
// ---------------------------------------------------------------------------

export interface DfsvConfig {
  gain?: number;
  threshold?: number;
}

function sigmoid(x: number): number {
  if (x >= 0) {
    return 1 / (1 + Math.exp(-x));
  }
  const ex = Math.exp(x);
  return ex / (1 + ex);
}

/**
 * Per-camera feature scale in (0, 1): a sigmoid of the commanded linear
 * velocity projected onto each camera's forward direction, minus the
 * speed threshold, times the gain.
 */
export function dfsvScales(
  config: DfsvConfig,
  vLin: readonly number[],
  forwards: ReadonlyArray<readonly number[]>,
): Float64Array {
  const gain = config.gain ?? 10.0;
  const threshold = config.threshold ?? 0.1;
  if (!(gain > 0)) {
    throw new RangeError("gain must be positive");
  }
  const out = new Float64Array(forwards.length);
  for (let c = 0; c < forwards.length; c++) {
    const f = forwards[c];
    if (f.length !== vLin.length) {
      throw new RangeError(
        `forward ${c} has ${f.length} components, command has ${vLin.length}`,
      );
    }
    let norm2 = 0;
    for (const v of f) {
      norm2 += v * v;
    }
    const norm = Math.sqrt(norm2);
    if (norm < 1e-12) {
      throw new RangeError("camera forward directions must be nonzero");
    }
    let along = 0;
    for (let d = 0; d < f.length; d++) {
      along += vLin[d] * (f[d] / norm);
    }
    out[c] = sigmoid(gain * (along - threshold));
  }
  return out;
}

// ---------------------------------------------------------------------------
// RSM
// ---------------------------------------------------------------------------

export const RSM_MODES = ["none", "small", "large"] as const;

export const DEFAULT_RSM_PROBS: Record<string, [number, number, number]> = {
  flat: [0.2, 0.4, 0.4],
  slope_pyramid: [0.2, 0.4, 0.4],
  stairs_up: [0.2, 0.4, 0.4],
  stairs_down: [0.2, 0.4, 0.4],
  stepping_stones: [0.6, 0.3, 0.1],
};

export interface RsmConfig {
  fSmall?: number;
  fLarge?: number;
  probs?: Record<string, [number, number, number]>;
  fillLow?: number;
  /** Upper fill bound; omitted means the camera far limit. */
  fillHigh?: number;
  seed?: number;
}

function rsmDefaults(config: RsmConfig) {
  const fSmall = config.fSmall ?? 0.125;
  const fLarge = config.fLarge ?? 0.25;
  if (!(fSmall >= 0 && fSmall <= 0.5 && fLarge >= 0 && fLarge <= 0.5)) {
    throw new RangeError("mask fractions must be in [0, 0.5]");
  }
  return {
    fSmall,
    fLarge,
    probs: config.probs ?? DEFAULT_RSM_PROBS,
    fillLow: config.fillLow ?? 0.3,
    fillHigh: config.fillHigh,
    seed: config.seed ?? 0,
  };
}

/** Columns masked on each side for a mode index (0 none, 1 small, 2 large). */
export function rsmMaskColumns(
  config: RsmConfig,
  mode: number,
  width: number,
): number {
  const cfg = rsmDefaults(config);
  if (mode === 0) {
    return 0;
  }
  const fraction = mode === 1 ? cfg.fSmall : cfg.fLarge;
  return Math.floor(fraction * width);
}

/** Mask mode per (env, cam) for a terrain kind; matches the renderer's draws. */
export function rsmSampleModes(
  config: RsmConfig,
  kind: string,
  numEnvs: number,
  numCameras: number,
  episode = 0,
): number[][] {
  const cfg = rsmDefaults(config);
  const probs = cfg.probs[kind];
  if (probs === undefined) {
    throw new RangeError(`no side-mask probabilities for terrain kind "${kind}"`);
  }
  const sum = probs[0] + probs[1] + probs[2];
  if (probs.some((p) => !(p >= 0)) || Math.abs(sum - 1) > 1e-8) {
    throw new RangeError(
      `probs["${kind}"] must be 3 nonnegative values summing to 1`,
    );
  }
  const key = streamKey(cfg.seed, "rsm-mode");
  const modes: number[][] = [];
  for (let env = 0; env < numEnvs; env++) {
    const row: number[] = [];
    for (let cam = 0; cam < numCameras; cam++) {
      row.push(categorical(key, probs, [episode, env, cam]));
    }
    modes.push(row);
  }
  return modes;
}

/**
 * Overwrite side bands of an (N, C, H, W) depth tensor with uniform
 * random fill in [fillLow, fillHigh ?? dMax]. Pixels outside the bands
 * are returned bit-identical; fill draws reproduce the renderer's
 * stream exactly, including the float32 rounding.
 */
export function rsmApply(
  depth: DepthTensor,
  modes: ReadonlyArray<readonly number[]>,
  config: RsmConfig,
  dMax: number | readonly number[],
  step = 0,
): DepthTensor {
  const cfg = rsmDefaults(config);
  const [n, c, h, w] = depth.shape;
  if (modes.length !== n || modes.some((row) => row.length !== c)) {
    throw new RangeError(`modes shape does not match (N, C) = (${n}, ${c})`);
  }
  const high = new Float64Array(c);
  for (let cam = 0; cam < c; cam++) {
    const limit =
      cfg.fillHigh ?? (typeof dMax === "number" ? dMax : dMax[cam]);
    if (!Number.isFinite(limit)) {
      throw new RangeError("fill upper bound must be finite");
    }
    high[cam] = limit;
  }

  const key = streamKey(cfg.seed, "rsm-fill");
  const out = depth.clone();
  for (let e = 0; e < n; e++) {
    for (let cam = 0; cam < c; cam++) {
      const k = rsmMaskColumns(config, modes[e][cam], w);
      if (k === 0) {
        continue;
      }
      for (let y = 0; y < h; y++) {
        for (let s = 0; s < k; s++) {
          for (const x of [s, w - k + s]) {
            out.data[out.index(e, cam, y, x)] = uniform(
              key,
              [step, e, cam, y, x],
              cfg.fillLow,
              high[cam],
            );
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Privileged height map
// ---------------------------------------------------------------------------

/** Nearest-node sampled terrain grid, as produced by the `terrain` CLI. */
export interface HeightFieldInit {
  origin: readonly [number, number, number];
  cellSize: number;
  /** Row-major (ny, nx) heights. */
  heights: ArrayLike<number>;
  /** Row-major (ny, nx) support flags (nonzero = supported). */
  validity: ArrayLike<number>;
  ny: number;
  nx: number;
  floorHeight?: number;
}

/** Round half to even, matching the renderer's nearest-node rule. */
function rint(v: number): number {
  const floor = Math.floor(v);
  if (v - floor === 0.5) {
    return floor % 2 === 0 ? floor : floor + 1;
  }
  return Math.round(v);
}

export class HeightField {
  readonly origin: [number, number, number];
  readonly cellSize: number;
  readonly heights: Float64Array;
  readonly validity: Uint8Array;
  readonly ny: number;
  readonly nx: number;
  readonly floorHeight: number;

  constructor(init: HeightFieldInit) {
    const { ny, nx } = init;
    if (!Number.isInteger(ny) || !Number.isInteger(nx) || ny < 1 || nx < 1) {
      throw new RangeError(`invalid grid dims ${ny}x${nx}`);
    }
    if (init.heights.length !== ny * nx || init.validity.length !== ny * nx) {
      throw new RangeError("heights/validity length must equal ny*nx");
    }
    if (!(init.cellSize > 0)) {
      throw new RangeError("cellSize must be positive");
    }
    this.origin = [init.origin[0], init.origin[1], init.origin[2]];
    this.cellSize = init.cellSize;
    this.heights = Float64Array.from(init.heights);
    this.validity = Uint8Array.from(init.validity, (v) => (v ? 1 : 0));
    this.ny = ny;
    this.nx = nx;
    this.floorHeight = init.floorHeight ?? 0;
  }

  /** Nearest-node height and support flag; void outside the grid. */
  sample(x: number, y: number): { height: number; valid: boolean } {
    const ix = rint((x - this.origin[0]) / this.cellSize);
    const iy = rint((y - this.origin[1]) / this.cellSize);
    if (ix < 0 || ix >= this.nx || iy < 0 || iy >= this.ny) {
      return { height: this.floorHeight, valid: false };
    }
    const at = iy * this.nx + ix;
    return { height: this.heights[at], valid: this.validity[at] !== 0 };
  }
}

export interface HeightMapConfig {
  numForward?: number;
  numLateral?: number;
  cell?: number;
  forwardRange?: [number, number];
  lateralRange?: [number, number];
}

export interface HeightMapObs {
  /** Row-major (numForward, numLateral) heights relative to the root. */
  values: Float64Array;
  /** Row-major (numForward, numLateral) support flags. */
  validity: Uint8Array;
  numForward: number;
  numLateral: number;
}

function heightMapDefaults(config: HeightMapConfig) {
  const numForward = config.numForward ?? 16;
  const numLateral = config.numLateral ?? 10;
  const cell = config.cell ?? 0.1;
  const forwardRange = config.forwardRange ?? [-0.6, 1.0];
  const lateralRange = config.lateralRange ?? [-0.5, 0.5];
  if (numForward < 1 || numLateral < 1 || !(cell > 0)) {
    throw new RangeError("grid dimensions must be positive");
  }
  const close = (a: number, b: number) => Math.abs(a - b) <= 1e-8 + 1e-5 * Math.abs(b);
  if (
    !close(forwardRange[1] - forwardRange[0], numForward * cell) ||
    !close(lateralRange[1] - lateralRange[0], numLateral * cell)
  ) {
    throw new RangeError("ranges must equal cell * count along both axes");
  }
  return { numForward, numLateral, cell, forwardRange, lateralRange };
}

/** Heading of the rotated x-axis for a (w, x, y, z) quaternion, radians. */
export function quatYaw(q: readonly [number, number, number, number]): number {
  const [w, x, y, z] = q;
  // Rows of the rotation matrix applied to e_x.
  const fx = 1 - 2 * (y * y + z * z);
  const fy = 2 * (x * y + w * z);
  return Math.atan2(fy, fx);
}

/**
 * Heading-aligned terrain heights around a root pose: the grid sits at
 * the root's ground-plane position, rotated by the root's yaw only, and
 * reports heights relative to the root height. `rootRot` is either a
 * (w, x, y, z) quaternion or a plain yaw angle in radians.
 */
export function extractHeightMap(
  hf: HeightField,
  rootPos: readonly [number, number, number],
  rootRot: readonly [number, number, number, number] | number,
  config: HeightMapConfig = {},
): HeightMapObs {
  const cfg = heightMapDefaults(config);
  const yaw = typeof rootRot === "number" ? rootRot : quatYaw(rootRot);
  const cy = Math.cos(yaw);
  const sy = Math.sin(yaw);
  const values = new Float64Array(cfg.numForward * cfg.numLateral);
  const validity = new Uint8Array(cfg.numForward * cfg.numLateral);
  for (let i = 0; i < cfg.numForward; i++) {
    const f = cfg.forwardRange[0] + (i + 0.5) * cfg.cell;
    for (let j = 0; j < cfg.numLateral; j++) {
      const l = cfg.lateralRange[0] + (j + 0.5) * cfg.cell;
      const wx = rootPos[0] + cy * f - sy * l;
      const wy = rootPos[1] + sy * f + cy * l;
      const { height, valid } = hf.sample(wx, wy);
      const at = i * cfg.numLateral + j;
      values[at] = height - rootPos[2];
      validity[at] = valid ? 1 : 0;
    }
  }
  return {
    values,
    validity,
    numForward: cfg.numForward,
    numLateral: cfg.numLateral,
  };
}
