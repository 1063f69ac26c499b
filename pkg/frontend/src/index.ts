/**
 * TypeScript bindings for the multidepth renderer.
 *
 * The renderer is consumed strictly across its process boundary: scene
 * handles drive the `render` CLI subcommand through generated config
 * files and parse its dense frame files, while the perception helpers
 * are pure functions on arrays that mirror the renderer's semantics.
 *
 * @example
 * import { Scene } from "multidepth-bindings";
 *
 * const scene = new Scene({
 *   envs: 2,
 *   terrain: { kind: "flat" },
 *   cameras: [
 *     { name: "front", width: 48, height: 27, hfovDeg: 87, vfovDeg: 58,
 *       dMax: 6, position: [-1.5, 0, 1.0], lookAt: [0.5, 0, 0.4] },
 *   ],
 * });
 * const depth = await scene.render();   // DepthTensor, shape [2, 1, 27, 48]
 * scene.dispose();
 */

export {
  Scene,
  render,
  type Pose,
  type CameraOffset,
  type SceneOptions,
} from "./scene.js";
export { DepthTensor, bitEqual, type Shape4 } from "./tensor.js";
export {
  FormatError,
  MDPT_HEADER_SIZE,
  MDPT_MAGIC,
  MDPT_VERSION,
  encodeFrames,
  parseFrames,
  readFrames,
  readGrid,
  writeFrames,
  type Grid,
} from "./mdpt.js";
export {
  DEFAULT_RSM_PROBS,
  HeightField,
  RSM_MODES,
  dfsvScales,
  extractHeightMap,
  quatYaw,
  rsmApply,
  rsmMaskColumns,
  rsmSampleModes,
  type DfsvConfig,
  type HeightFieldInit,
  type HeightMapConfig,
  type HeightMapObs,
  type RsmConfig,
} from "./perception.js";
export {
  emitConfig,
  type BodyOptions,
  type CameraOptions,
  type CameraRandomizationOptions,
  type SensorOptions,
  type TerrainOptions,
  type Vec3,
} from "./config.js";
export { cliCommand, runCli, type CliResult } from "./cli.js";
