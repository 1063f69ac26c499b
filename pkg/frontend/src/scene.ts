/**
 * Scene handles: build a scene description, step body poses, and render
 * to a dense (N, C, H, W) depth tensor through the renderer CLI.
 *
 * A handle owns no live renderer state. render() writes the scene as a
 * config file, runs one `render` subcommand (or one per environment when
 * environments have diverged poses), and parses the resulting frame
 * file. Each call returns a tensor backed by a buffer parsed fresh from
 * that output, so returned arrays are never aliased or mutated later.
 *
 * Pose semantics: the config format carries one pose per body, shared
 * by all environments of a run. While every environment holds identical
 * poses, render() performs a single N-env run and its payload is
 * bit-identical to that CLI invocation. Once setBodyPose() makes
 * environments diverge, render() performs one single-env run per
 * environment and stacks the rows in order; with sensor noise enabled,
 * each of those runs pins its sensor seed to (base sensor seed + env)
 * so rows stay distinct and reproducible.
 *
 * Handles are single-owner: concurrent render() calls on one handle are
 * rejected, and dispose() invalidates the handle permanently.
 */

import * as fs from "node:fs/promises";
import * as os from "node:os";
import * as path from "node:path";

import { runCli } from "./cli.js";
import {
  BodyOptions,
  CameraOptions,
  CameraRandomizationOptions,
  SectionValues,
  SensorOptions,
  TerrainOptions,
  Vec3,
  cameraRandomizationSection,
  emitConfig,
  sensorSection,
  terrainSection,
} from "./config.js";
import { readFrames } from "./mdpt.js";
import { DepthTensor } from "./tensor.js";

export interface Pose {
  position: Vec3;
  /** Roll/pitch/yaw in degrees; omitted means no rotation. */
  eulerDeg?: Vec3;
}

export interface CameraOffset {
  position?: Vec3;
  eulerDeg?: Vec3;
  fovDeg?: number;
}

export interface SceneOptions {
  envs: number;
  seed?: number;
  terrain?: TerrainOptions;
  bodies?: BodyOptions[];
  cameras: CameraOptions[];
  sensor?: SensorOptions;
  /** Apply the sensor noise/dropout pipeline; defaults to true iff `sensor` is given. */
  noise?: boolean;
  cameraRandomization?: CameraRandomizationOptions;
  backend?: "numba" | "numpy";
  threads?: number;
}

const NAME_RE = /^[A-Za-z0-9_]+$/;

function checkVec3(value: readonly number[], what: string): Vec3 {
  if (value.length !== 3 || value.some((v) => !Number.isFinite(v))) {
    throw new RangeError(`${what} must be 3 finite numbers`);
  }
  return [value[0], value[1], value[2]];
}

function vecEq(a: readonly number[], b: readonly number[]): boolean {
  return a.length === b.length && a.every((v, i) => v === b[i]);
}

const ZERO: Vec3 = [0, 0, 0];

export class Scene {
  readonly envs: number;
  readonly seed: number;

  #options: SceneOptions;
  #bodies: BodyOptions[];
  #cameras: CameraOptions[];
  /** Per-env body poses, keyed by body name. */
  #poses: Array<Map<string, Pose>>;
  #cameraOffsets: Map<number, CameraOffset> = new Map();
  #noise: boolean;
  #disposed = false;
  #busy = false;

  constructor(options: SceneOptions) {
    if (!Number.isInteger(options.envs) || options.envs < 1) {
      throw new RangeError(`envs must be a positive integer, got ${options.envs}`);
    }
    if (!options.cameras || options.cameras.length === 0) {
      throw new RangeError("a scene needs at least one camera");
    }
    const res0 = [options.cameras[0].height, options.cameras[0].width];
    for (const cam of options.cameras) {
      if (!NAME_RE.test(cam.name)) {
        throw new RangeError(`invalid camera name ${JSON.stringify(cam.name)}`);
      }
      if (cam.lookAt !== undefined && cam.eulerDeg !== undefined) {
        throw new RangeError(
          `camera ${cam.name}: give either lookAt or eulerDeg, not both`,
        );
      }
      if (cam.height !== res0[0] || cam.width !== res0[1]) {
        throw new RangeError("all cameras in a scene must share one resolution");
      }
    }
    const camNames = new Set(options.cameras.map((c) => c.name));
    if (camNames.size !== options.cameras.length) {
      throw new RangeError("camera names must be unique");
    }
    const bodies = options.bodies ?? [];
    const bodyNames = new Set(bodies.map((b) => b.name));
    if (bodyNames.size !== bodies.length) {
      throw new RangeError("body names must be unique");
    }
    for (const body of bodies) {
      if (!NAME_RE.test(body.name)) {
        throw new RangeError(`invalid body name ${JSON.stringify(body.name)}`);
      }
    }

    this.envs = options.envs;
    this.seed = options.seed ?? 0;
    this.#options = options;
    this.#bodies = bodies.map((b) => ({ ...b }));
    this.#cameras = options.cameras.map((c) => ({ ...c }));
    this.#noise = options.noise ?? options.sensor !== undefined;
    this.#poses = [];
    for (let e = 0; e < this.envs; e++) {
      const envPoses = new Map<string, Pose>();
      for (const body of bodies) {
        envPoses.set(body.name, {
          position: checkVec3(body.position ?? ZERO, `body ${body.name} position`),
          eulerDeg: body.eulerDeg
            ? checkVec3(body.eulerDeg, `body ${body.name} eulerDeg`)
            : undefined,
        });
      }
      this.#poses.push(envPoses);
    }
  }

  get disposed(): boolean {
    return this.#disposed;
  }

  get bodyNames(): string[] {
    return this.#bodies.map((b) => b.name);
  }

  get cameraNames(): string[] {
    return this.#cameras.map((c) => c.name);
  }

  #assertLive(): void {
    if (this.#disposed) {
      throw new Error("scene handle has been disposed");
    }
  }

  /** Invalidate the handle; all later calls throw. Idempotent. */
  dispose(): void {
    this.#disposed = true;
  }

  setBodyPose(env: number, body: string, pose: Pose): void {
    this.#assertLive();
    if (!Number.isInteger(env) || env < 0 || env >= this.envs) {
      throw new RangeError(`env ${env} out of range for ${this.envs} envs`);
    }
    const envPoses = this.#poses[env];
    if (!envPoses.has(body)) {
      throw new RangeError(
        `unknown body ${JSON.stringify(body)}; scene has [${this.bodyNames.join(", ")}]`,
      );
    }
    envPoses.set(body, {
      position: checkVec3(pose.position, `body ${body} position`),
      eulerDeg: pose.eulerDeg
        ? checkVec3(pose.eulerDeg, `body ${body} eulerDeg`)
        : undefined,
    });
  }

  /**
   * Replace the mount offset of one camera (by index or name). Position
   * offsets translate the mount; eulerDeg offsets add to the mount
   * angles of eulerDeg-defined cameras (rejected for lookAt cameras,
   * which re-aim from the shifted position instead); fovDeg widens or
   * narrows both FOV axes together.
   */
  setCameraOffsets(camera: number | string, offset: CameraOffset): void {
    this.#assertLive();
    const index =
      typeof camera === "number"
        ? camera
        : this.#cameras.findIndex((c) => c.name === camera);
    if (!Number.isInteger(index) || index < 0 || index >= this.#cameras.length) {
      throw new RangeError(`unknown camera ${JSON.stringify(camera)}`);
    }
    const cam = this.#cameras[index];
    if (offset.eulerDeg !== undefined && cam.lookAt !== undefined) {
      throw new RangeError(
        `camera ${cam.name} is aimed with lookAt; eulerDeg offsets do not apply`,
      );
    }
    const clean: CameraOffset = {};
    if (offset.position !== undefined) {
      clean.position = checkVec3(offset.position, "offset position");
    }
    if (offset.eulerDeg !== undefined) {
      clean.eulerDeg = checkVec3(offset.eulerDeg, "offset eulerDeg");
    }
    if (offset.fovDeg !== undefined) {
      if (!Number.isFinite(offset.fovDeg)) {
        throw new RangeError("offset fovDeg must be finite");
      }
      clean.fovDeg = offset.fovDeg;
    }
    this.#cameraOffsets.set(index, clean);
  }

  /** True while every environment holds identical body poses. */
  get homogeneous(): boolean {
    const first = this.#poses[0];
    for (let e = 1; e < this.envs; e++) {
      const envPoses = this.#poses[e];
      for (const [name, pose] of first) {
        const other = envPoses.get(name)!;
        if (
          !vecEq(pose.position, other.position) ||
          !vecEq(pose.eulerDeg ?? ZERO, other.eulerDeg ?? ZERO)
        ) {
          return false;
        }
      }
    }
    return true;
  }

  #configText(runEnvs: number, envIndex: number | null): string {
    const opts = this.#options;
    const sections: Array<[string, SectionValues]> = [];
    sections.push([
      "run",
      {
        envs: runEnvs,
        steps: 1,
        seed: this.seed,
        backend: opts.backend,
        threads: opts.threads,
      },
    ]);
    if (opts.terrain) {
      sections.push(["terrain", terrainSection(opts.terrain)]);
    }
    const poses = this.#poses[envIndex ?? 0];
    for (const body of this.#bodies) {
      const pose = poses.get(body.name)!;
      sections.push([
        `body.${body.name}`,
        {
          mesh: body.mesh,
          position: pose.position,
          euler_deg: pose.eulerDeg,
        },
      ]);
    }
    for (let i = 0; i < this.#cameras.length; i++) {
      const cam = this.#cameras[i];
      const offset = this.#cameraOffsets.get(i);
      const position = checkVec3(cam.position ?? ZERO, `camera ${cam.name} position`);
      if (offset?.position) {
        for (let k = 0; k < 3; k++) {
          position[k] += offset.position[k];
        }
      }
      let eulerDeg = cam.eulerDeg ? checkVec3(cam.eulerDeg, "eulerDeg") : undefined;
      if (offset?.eulerDeg) {
        const base = eulerDeg ?? [0, 0, 0];
        eulerDeg = [
          base[0] + offset.eulerDeg[0],
          base[1] + offset.eulerDeg[1],
          base[2] + offset.eulerDeg[2],
        ];
      }
      const fovDelta = offset?.fovDeg ?? 0;
      sections.push([
        `camera.${cam.name}`,
        {
          width: cam.width,
          height: cam.height,
          hfov_deg: cam.hfovDeg + fovDelta,
          vfov_deg: cam.vfovDeg + fovDelta,
          d_max: cam.dMax,
          position,
          look_at: cam.lookAt,
          euler_deg: eulerDeg,
          parent_body: cam.parentBody,
        },
      ]);
    }
    if (opts.cameraRandomization) {
      sections.push([
        "camera_randomization",
        cameraRandomizationSection(opts.cameraRandomization),
      ]);
    }
    if (this.#noise) {
      const sensor = opts.sensor ?? {};
      const baseSeed = sensor.seed ?? this.seed;
      const section = sensorSection(sensor);
      // Per-env runs re-seed the sensor stream so rows stay distinct.
      section.seed = envIndex === null ? sensor.seed : baseSeed + envIndex;
      sections.push(["sensor", section]);
    }
    return emitConfig(sections);
  }

  /** The exact config text a homogeneous render submits (for inspection). */
  configText(): string {
    this.#assertLive();
    return this.#configText(this.envs, null);
  }

  async #renderOne(
    tmp: string,
    label: string,
    runEnvs: number,
    envIndex: number | null,
  ): Promise<DepthTensor> {
    const dir = path.join(tmp, label);
    await fs.mkdir(dir, { recursive: true });
    const cfgPath = path.join(dir, "scene.cfg");
    await fs.writeFile(cfgPath, this.#configText(runEnvs, envIndex));
    const outDir = path.join(dir, "out");
    const args = ["render", "--scene", cfgPath, "--out", outDir];
    if (!this.#noise) {
      args.push("--no-noise");
    }
    await runCli(args);
    return readFrames(path.join(outDir, "frame_0000.mdpt"));
  }

  /**
   * Render every environment once and return the stacked
   * (envs, cameras, height, width) tensor.
   */
  async render(): Promise<DepthTensor> {
    this.#assertLive();
    if (this.#busy) {
      throw new Error("a render is already in progress on this scene handle");
    }
    this.#busy = true;
    try {
      const tmp = await fs.mkdtemp(path.join(os.tmpdir(), "mdpt-bind-"));
      try {
        const expected: [number, number, number, number] = [
          this.envs,
          this.#cameras.length,
          this.#cameras[0].height,
          this.#cameras[0].width,
        ];
        let result: DepthTensor;
        if (this.homogeneous) {
          result = await this.#renderOne(tmp, "all", this.envs, null);
        } else {
          const perEnv: DepthTensor[] = [];
          for (let e = 0; e < this.envs; e++) {
            perEnv.push(await this.#renderOne(tmp, `env${e}`, 1, e));
          }
          const block = perEnv[0].data.length;
          const data = new Float32Array(block * this.envs);
          for (let e = 0; e < this.envs; e++) {
            data.set(perEnv[e].data, e * block);
          }
          result = new DepthTensor(
            [this.envs, perEnv[0].cameras, perEnv[0].height, perEnv[0].width],
            data,
          );
        }
        if (result.shape.some((d, i) => d !== expected[i])) {
          throw new Error(
            `renderer returned shape ${result.shape.join("x")}, ` +
              `expected ${expected.join("x")}`,
          );
        }
        return result;
      } finally {
        await fs.rm(tmp, { recursive: true, force: true });
      }
    } finally {
      this.#busy = false;
    }
  }
}

/** Convenience wrapper mirroring the renderer's function name. */
export async function render(scene: Scene): Promise<DepthTensor> {
  return scene.render();
}
