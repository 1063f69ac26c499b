/**
 * Reader/writer for the renderer's dense depth frame format.
 *
 * Layout: ASCII magic "MDPT", uint16 version, then four uint32 dims
 * (envs, cameras, height, width), all little-endian, followed by the
 * float32 payload in row-major (N, C, H, W) order. Files carry exactly
 * header + payload: trailing bytes are an error.
 */

import * as fs from "node:fs";

import { DepthTensor, Shape4 } from "./tensor.js";

export const MDPT_MAGIC = "MDPT";
export const MDPT_VERSION = 1;
export const MDPT_HEADER_SIZE = 22;

export class FormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FormatError";
  }
}

const LITTLE_ENDIAN_PLATFORM = (() => {
  const probe = new Uint8Array(new Uint16Array([1]).buffer);
  return probe[0] === 1;
})();

/** Parse one frame file from bytes. */
export function parseFrames(bytes: Uint8Array): DepthTensor {
  if (bytes.byteLength < MDPT_HEADER_SIZE) {
    throw new FormatError(
      `file too short for header: ${bytes.byteLength} bytes`,
    );
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const magic = String.fromCharCode(bytes[0], bytes[1], bytes[2], bytes[3]);
  if (magic !== MDPT_MAGIC) {
    throw new FormatError(`bad magic ${JSON.stringify(magic)}`);
  }
  const version = view.getUint16(4, true);
  if (version !== MDPT_VERSION) {
    throw new FormatError(`unsupported version ${version}`);
  }
  const shape: Shape4 = [
    view.getUint32(6, true),
    view.getUint32(10, true),
    view.getUint32(14, true),
    view.getUint32(18, true),
  ];
  const count = shape[0] * shape[1] * shape[2] * shape[3];
  const expected = MDPT_HEADER_SIZE + 4 * count;
  if (bytes.byteLength !== expected) {
    throw new FormatError(
      `payload size mismatch: expected ${expected} bytes for shape ` +
        `${shape.join("x")}, got ${bytes.byteLength}`,
    );
  }
  let data: Float32Array;
  if (LITTLE_ENDIAN_PLATFORM) {
    // slice() copies, which also realigns the 22-byte header offset.
    data = new Float32Array(
      bytes.buffer.slice(
        bytes.byteOffset + MDPT_HEADER_SIZE,
        bytes.byteOffset + expected,
      ),
    );
  } else {
    data = new Float32Array(count);
    for (let i = 0; i < count; i++) {
      data[i] = view.getFloat32(MDPT_HEADER_SIZE + 4 * i, true);
    }
  }
  return new DepthTensor(shape, data);
}

/** Encode a tensor into frame-file bytes. */
export function encodeFrames(tensor: DepthTensor): Uint8Array {
  const count = tensor.data.length;
  const bytes = new Uint8Array(MDPT_HEADER_SIZE + 4 * count);
  const view = new DataView(bytes.buffer);
  for (let i = 0; i < 4; i++) {
    bytes[i] = MDPT_MAGIC.charCodeAt(i);
  }
  view.setUint16(4, MDPT_VERSION, true);
  for (let d = 0; d < 4; d++) {
    view.setUint32(6 + 4 * d, tensor.shape[d], true);
  }
  for (let i = 0; i < count; i++) {
    view.setFloat32(MDPT_HEADER_SIZE + 4 * i, tensor.data[i], true);
  }
  return bytes;
}

export function readFrames(path: string): DepthTensor {
  return parseFrames(fs.readFileSync(path));
}

export function writeFrames(path: string, tensor: DepthTensor): void {
  fs.writeFileSync(path, encodeFrames(tensor));
}

export interface Grid {
  height: number;
  width: number;
  data: Float32Array;
}

/** Read a single 2-D grid stored as a 1x1xHxW frame file. */
export function readGrid(path: string): Grid {
  const tensor = readFrames(path);
  const [n, c, h, w] = tensor.shape;
  if (n !== 1 || c !== 1) {
    throw new FormatError(`expected a 1x1xHxW grid, got ${tensor.shape.join("x")}`);
  }
  return { height: h, width: w, data: tensor.data };
}
