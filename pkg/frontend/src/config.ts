/**
 * Scene description types and the emitter for the renderer's config
 * text format: `[section]` headers and `key = value` lines, with
 * space-separated numeric lists.
 */

export type Vec3 = [number, number, number];

export interface TerrainOptions {
  kind: "flat" | "slope_pyramid" | "stairs_up" | "stairs_down" | "stepping_stones";
  cellSize?: number;
  size?: [number, number];
  seed?: number;
  inclineDeg?: number;
  platformSize?: number;
  stepLength?: number;
  stepHeight?: number;
  numSteps?: number;
  width?: number;
  platformLength?: number;
  stoneSize?: number;
  stoneGap?: number;
  heightVariation?: number;
  floorDepth?: number;
  circularStones?: boolean;
}

export interface BodyOptions {
  name: string;
  /** Mesh spec string, e.g. "box 0.5 0.5 0.5", "icosphere 0.3 1", "obj path". */
  mesh: string;
  position?: Vec3;
  eulerDeg?: Vec3;
}

export interface CameraOptions {
  name: string;
  width: number;
  height: number;
  hfovDeg: number;
  vfovDeg: number;
  dMax?: number;
  position?: Vec3;
  /** Aim at a world point; exclusive with eulerDeg. */
  lookAt?: Vec3;
  /** Roll/pitch/yaw mount angles in degrees; exclusive with lookAt. */
  eulerDeg?: Vec3;
  parentBody?: string;
}

export interface SensorOptions {
  noiseScale?: number;
  dropoutP?: number;
  maxDelay?: number;
  dropoutFill?: number;
  seed?: number;
}

export interface CameraRandomizationOptions {
  translation?: number;
  rotRollDeg?: number;
  rotPitchDeg?: number;
  rotYawDeg?: number;
  fovDeg?: number;
  seed?: number;
}

function fmt(value: number | boolean | string): string {
  if (typeof value === "boolean") {
    return value ? "true" : "false";
  }
  if (typeof value === "number") {
    if (!Number.isFinite(value)) {
      throw new RangeError(`config values must be finite, got ${value}`);
    }
    return String(value);
  }
  return value;
}

function fmtList(values: readonly number[]): string {
  return values.map(fmt).join(" ");
}

export type SectionValues = Record<
  string,
  number | boolean | string | readonly number[] | undefined
>;

/** Render ordered sections into config text. */
export function emitConfig(sections: Array<[string, SectionValues]>): string {
  const lines: string[] = [];
  for (const [name, values] of sections) {
    lines.push(`[${name}]`);
    for (const [key, value] of Object.entries(values)) {
      if (value === undefined) {
        continue;
      }
      lines.push(
        `${key} = ${Array.isArray(value) ? fmtList(value) : fmt(value as number | boolean | string)}`,
      );
    }
    lines.push("");
  }
  return lines.join("\n");
}

export function terrainSection(terrain: TerrainOptions): SectionValues {
  return {
    kind: terrain.kind,
    cell_size: terrain.cellSize,
    size: terrain.size,
    seed: terrain.seed,
    incline_deg: terrain.inclineDeg,
    platform_size: terrain.platformSize,
    step_length: terrain.stepLength,
    step_height: terrain.stepHeight,
    num_steps: terrain.numSteps,
    width: terrain.width,
    platform_length: terrain.platformLength,
    stone_size: terrain.stoneSize,
    stone_gap: terrain.stoneGap,
    height_variation: terrain.heightVariation,
    floor_depth: terrain.floorDepth,
    circular_stones: terrain.circularStones,
  };
}

export function sensorSection(sensor: SensorOptions): SectionValues {
  return {
    noise_scale: sensor.noiseScale,
    dropout_p: sensor.dropoutP,
    max_delay: sensor.maxDelay,
    dropout_fill: sensor.dropoutFill,
    seed: sensor.seed,
  };
}

export function cameraRandomizationSection(
  rand: CameraRandomizationOptions,
): SectionValues {
  return {
    translation: rand.translation,
    rot_roll_deg: rand.rotRollDeg,
    rot_pitch_deg: rand.rotPitchDeg,
    rot_yaw_deg: rand.rotYawDeg,
    fov_deg: rand.fovDeg,
    seed: rand.seed,
  };
}
