"""Structured text configuration: parsing, serialization, builders.

The format is line-oriented key-value text with nested sections:

    # comment
    [terrain]
    kind = stairs_up
    step_height = 0.12

    [camera.front]
    width = 48
    height = 27
    position = 0.05 0.0 0.55

Section names may be dotted to express one level of nesting
([camera.front], [body.crate]). Values are typed on read: ``true`` /
``false``, integers, floats, quoted strings, bare words, and
whitespace-separated lists of those. parse -> serialize -> parse is a
fixed point.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .camera import CameraModel, look_at_pose
from .mesh import TriMesh, load_obj, make_box, make_icosphere, make_plane
from .perception import DfsvConfig, RsmConfig
from .scene import Scene
from .sensor import CameraRandomization, SensorConfig
from .terrain import TerrainSpec
from .transforms import RigidPose, quat_from_euler

Scalar = bool | int | float | str
Value = Scalar | list[Scalar]
ConfigDict = dict[str, dict[str, Value]]

_SECTION_RE = re.compile(r"^\[([A-Za-z0-9_.-]+)\]$")
_KEY_RE = re.compile(r"^[A-Za-z0-9_.-]+$")
_INT_RE = re.compile(r"^[+-]?\d+$")


class ConfigError(Exception):
    """Malformed configuration text or values."""


def _parse_scalar(token: str) -> Scalar:
    if token == "true":
        return True
    if token == "false":
        return False
    if _INT_RE.match(token):
        return int(token)
    try:
        return float(token)
    except ValueError:
        return token


def _parse_value(raw: str, where: str) -> Value:
    raw = raw.strip()
    if not raw:
        raise ConfigError(f"{where}: empty value")
    if raw.startswith('"'):
        if not (raw.endswith('"') and len(raw) >= 2):
            raise ConfigError(f"{where}: unterminated quoted string")
        return raw[1:-1]
    tokens = raw.split()
    if len(tokens) == 1:
        return _parse_scalar(tokens[0])
    return [_parse_scalar(t) for t in tokens]


def parse_config(text: str) -> ConfigDict:
    cfg: ConfigDict = {}
    section: str | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        where = f"line {lineno}"
        m = _SECTION_RE.match(stripped)
        if m:
            section = m.group(1)
            if section in cfg:
                raise ConfigError(f"{where}: duplicate section [{section}]")
            cfg[section] = {}
            continue
        if "=" not in stripped:
            raise ConfigError(f"{where}: expected 'key = value' or '[section]'")
        if section is None:
            raise ConfigError(f"{where}: key outside any section")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"{where}: bad key {key!r}")
        if key in cfg[section]:
            raise ConfigError(f"{where}: duplicate key {key!r} in [{section}]")
        cfg[section][key] = _parse_value(raw, where)
    return cfg


def _format_scalar(v: Scalar) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    s = str(v)
    if s == "" or any(ch.isspace() for ch in s) or s.startswith('"'):
        return f'"{s}"'
    return s


def serialize_config(cfg: ConfigDict) -> str:
    lines = []
    for section, entries in cfg.items():
        if not _SECTION_RE.match(f"[{section}]"):
            raise ConfigError(f"bad section name {section!r}")
        lines.append(f"[{section}]")
        for key, value in entries.items():
            if not _KEY_RE.match(key):
                raise ConfigError(f"bad key {key!r} in [{section}]")
            if isinstance(value, list):
                if not value:
                    raise ConfigError(f"empty list for {section}.{key}")
                body = " ".join(_format_scalar(v) for v in value)
            else:
                body = _format_scalar(value)
            lines.append(f"{key} = {body}")
        lines.append("")
    return "\n".join(lines)


def load_config(path) -> ConfigDict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


# ---------------------------------------------------------------------------
# Typed access helpers
# ---------------------------------------------------------------------------

_MISSING = object()


def _get(cfg: ConfigDict, section: str, key: str, default=_MISSING):
    entries = cfg.get(section)
    if entries is None or key not in entries:
        if default is _MISSING:
            raise ConfigError(f"missing required key {key!r} in [{section}]")
        return default
    return entries[key]


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


def _as_bool(value, where: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{where}: expected true/false, got {value!r}")
    return value


def _as_str(value, where: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a string, got {value!r}")
    return value


def _as_floats(value, n: int, where: str) -> list[float]:
    items = value if isinstance(value, list) else [value]
    if len(items) != n:
        raise ConfigError(f"{where}: expected {n} numbers")
    return [_as_float(v, where) for v in items]


# ---------------------------------------------------------------------------
# Domain builders
# ---------------------------------------------------------------------------

_TERRAIN_FLOAT_KEYS = (
    "cell_size", "incline_deg", "platform_size", "step_length", "step_height",
    "width", "platform_length", "stone_size", "stone_gap", "height_variation",
    "floor_depth",
)
_TERRAIN_INT_KEYS = ("seed", "num_steps")
_TERRAIN_BOOL_KEYS = ("unchecked", "circular_stones")


def terrain_spec_from_config(cfg: ConfigDict, section: str = "terrain") -> TerrainSpec:
    entries = cfg.get(section)
    if entries is None:
        raise ConfigError(f"missing [{section}] section")
    kind = _as_str(_get(cfg, section, "kind"), f"{section}.kind")
    kwargs = {}
    for key, value in entries.items():
        where = f"{section}.{key}"
        if key == "kind":
            continue
        elif key == "size":
            sx, sy = _as_floats(value, 2, where)
            kwargs["size"] = (sx, sy)
        elif key in _TERRAIN_FLOAT_KEYS:
            kwargs[key] = _as_float(value, where)
        elif key in _TERRAIN_INT_KEYS:
            kwargs[key] = _as_int(value, where)
        elif key in _TERRAIN_BOOL_KEYS:
            kwargs[key] = _as_bool(value, where)
        else:
            raise ConfigError(f"{where}: unknown terrain key")
    try:
        return TerrainSpec(kind=kind, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def sensor_config_from_config(cfg: ConfigDict) -> SensorConfig:
    entries = cfg.get("sensor", {})
    kwargs = {}
    for key, value in entries.items():
        where = f"sensor.{key}"
        if key in ("noise_scale", "dropout_p", "max_delay", "dropout_fill"):
            kwargs[key] = _as_float(value, where)
        elif key == "seed":
            kwargs[key] = _as_int(value, where)
        else:
            raise ConfigError(f"{where}: unknown sensor key")
    try:
        return SensorConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[sensor]: {exc}") from exc


def dfsv_config_from_config(cfg: ConfigDict) -> DfsvConfig:
    entries = cfg.get("dfsv", {})
    kwargs = {}
    for key, value in entries.items():
        where = f"dfsv.{key}"
        if key in ("gain", "threshold"):
            kwargs[key] = _as_float(value, where)
        else:
            raise ConfigError(f"{where}: unknown dfsv key")
    try:
        return DfsvConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[dfsv]: {exc}") from exc


def rsm_config_from_config(cfg: ConfigDict) -> RsmConfig:
    entries = cfg.get("rsm", {})
    kwargs = {}
    probs = {}
    for key, value in entries.items():
        where = f"rsm.{key}"
        if key in ("f_small", "f_large", "fill_low", "fill_high"):
            kwargs[key] = _as_float(value, where)
        elif key == "seed":
            kwargs[key] = _as_int(value, where)
        elif key.startswith("p."):
            kind = key[2:]
            p = _as_floats(value, 3, where)
            probs[kind] = (p[0], p[1], p[2])
        else:
            raise ConfigError(f"{where}: unknown rsm key")
    if probs:
        merged = dict(RsmConfig().probs)
        merged.update(probs)
        kwargs["probs"] = merged
    try:
        return RsmConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[rsm]: {exc}") from exc


def camera_randomization_from_config(cfg: ConfigDict) -> CameraRandomization | None:
    entries = cfg.get("camera_randomization")
    if entries is None:
        return None
    kwargs = {}
    for key, value in entries.items():
        where = f"camera_randomization.{key}"
        if key in ("translation", "rot_roll_deg", "rot_pitch_deg",
                   "rot_yaw_deg", "fov_deg"):
            kwargs[key] = _as_float(value, where)
        elif key == "seed":
            kwargs[key] = _as_int(value, where)
        else:
            raise ConfigError(f"{where}: unknown camera_randomization key")
    try:
        return CameraRandomization(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[camera_randomization]: {exc}") from exc


def _mesh_from_spec(value, where: str, base_dir) -> TriMesh:
    items = value if isinstance(value, list) else [value]
    kind = items[0]
    args = items[1:]
    if not isinstance(kind, str):
        raise ConfigError(f"{where}: mesh spec must start with a word")
    try:
        if kind == "box":
            sx, sy, sz = (_as_float(a, where) for a in args)
            return make_box(size=(sx, sy, sz))
        if kind == "plane":
            sx, sy = (_as_float(a, where) for a in args)
            return make_plane(size=(sx, sy))
        if kind == "icosphere":
            radius = _as_float(args[0], where)
            subdiv = _as_int(args[1], where) if len(args) > 1 else 2
            return make_icosphere(radius=radius, subdivisions=subdiv)
        if kind == "obj":
            if len(args) != 1 or not isinstance(args[0], str):
                raise ConfigError(f"{where}: obj needs a single path")
            path = args[0]
            if base_dir is not None:
                import os.path
                if not os.path.isabs(path):
                    path = os.path.join(base_dir, path)
            try:
                return load_obj(path)
            except OSError as exc:
                raise ConfigError(f"{where}: cannot read mesh {path}: {exc}") from exc
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{where}: bad mesh spec: {exc}") from exc
    raise ConfigError(f"{where}: unknown mesh kind {kind!r} "
                      f"(expected box/plane/icosphere/obj)")


@dataclass(frozen=True)
class BodySpec:
    name: str
    mesh: TriMesh
    position: tuple[float, float, float]
    euler_deg: tuple[float, float, float]

    def initial_pose(self) -> RigidPose:
        return RigidPose(
            np.array(self.position),
            quat_from_euler(*(np.radians(self.euler_deg))))


def body_specs_from_config(cfg: ConfigDict, base_dir=None) -> list[BodySpec]:
    specs = []
    for section, entries in cfg.items():
        if not section.startswith("body."):
            continue
        name = section[len("body."):]
        mesh = _mesh_from_spec(_get(cfg, section, "mesh"), f"{section}.mesh",
                               base_dir)
        pos = _as_floats(_get(cfg, section, "position", [0.0, 0.0, 0.0]),
                         3, f"{section}.position")
        euler = _as_floats(_get(cfg, section, "euler_deg", [0.0, 0.0, 0.0]),
                           3, f"{section}.euler_deg")
        for key in entries:
            if key not in ("mesh", "position", "euler_deg"):
                raise ConfigError(f"{section}.{key}: unknown body key")
        specs.append(BodySpec(name, mesh, tuple(pos), tuple(euler)))
    return specs


def cameras_from_config(cfg: ConfigDict,
                        body_names: list[str]) -> list[CameraModel]:
    cameras = []
    for section, entries in cfg.items():
        if not section.startswith("camera."):
            continue
        name = section[len("camera."):]
        where = f"[{section}]"
        width = _as_int(_get(cfg, section, "width"), f"{section}.width")
        height = _as_int(_get(cfg, section, "height"), f"{section}.height")
        hfov = _as_float(_get(cfg, section, "hfov_deg"), f"{section}.hfov_deg")
        vfov = _as_float(_get(cfg, section, "vfov_deg"), f"{section}.vfov_deg")
        d_max = _as_float(_get(cfg, section, "d_max", 10.0), f"{section}.d_max")
        pos = np.array(_as_floats(_get(cfg, section, "position", [0.0, 0.0, 0.0]),
                                  3, f"{section}.position"))
        if "look_at" in entries and "euler_deg" in entries:
            raise ConfigError(f"{where}: give either look_at or euler_deg, not both")
        if "look_at" in entries:
            target = np.array(_as_floats(entries["look_at"], 3,
                                         f"{section}.look_at"))
            mount = look_at_pose(pos, target)
        else:
            euler = _as_floats(_get(cfg, section, "euler_deg", [0.0, 0.0, 0.0]),
                               3, f"{section}.euler_deg")
            mount = RigidPose(pos, quat_from_euler(*np.radians(euler)))
        parent = _get(cfg, section, "parent_body", None)
        parent_index: int | None
        if parent is None or parent == "world":
            parent_index = None
        else:
            parent_name = _as_str(parent, f"{section}.parent_body")
            if parent_name not in body_names:
                raise ConfigError(
                    f"{section}.parent_body: unknown body {parent_name!r}")
            parent_index = body_names.index(parent_name)
        for key in entries:
            if key not in ("width", "height", "hfov_deg", "vfov_deg", "d_max",
                           "position", "euler_deg", "look_at", "parent_body"):
                raise ConfigError(f"{section}.{key}: unknown camera key")
        try:
            cameras.append(CameraModel(
                width=width, height=height, hfov_deg=hfov, vfov_deg=vfov,
                d_max=d_max, mount=mount, parent_body=parent_index, name=name))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    return cameras


@dataclass(frozen=True)
class RunConfig:
    envs: int = 1
    steps: int = 1
    seed: int = 0
    backend: str | None = None
    threads: int | None = None

    def __post_init__(self):
        if self.envs < 1 or self.steps < 1:
            raise ValueError("envs and steps must be >= 1")


def run_config_from_config(cfg: ConfigDict) -> RunConfig:
    entries = cfg.get("run", {})
    kwargs = {}
    for key, value in entries.items():
        where = f"run.{key}"
        if key in ("envs", "steps", "seed", "threads"):
            kwargs[key] = _as_int(value, where)
        elif key == "backend":
            kwargs[key] = _as_str(value, where)
        else:
            raise ConfigError(f"{where}: unknown run key")
    try:
        return RunConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[run]: {exc}") from exc


def scene_from_config(cfg: ConfigDict, num_envs: int, base_dir=None,
                      terrain_mesh: TriMesh | None = None) -> Scene:
    """Build a Scene (bodies at initial poses, cameras, terrain mesh)."""
    bodies = body_specs_from_config(cfg, base_dir)
    cameras = cameras_from_config(cfg, [b.name for b in bodies])
    if not cameras:
        raise ConfigError("config defines no [camera.<name>] section")
    try:
        scene = Scene(
            num_envs=num_envs,
            bodies=[(b.name, b.mesh) for b in bodies],
            cameras=cameras,
            terrain=terrain_mesh,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for b_idx, body in enumerate(bodies):
        pose = body.initial_pose()
        for env in range(num_envs):
            scene.set_body_pose(env, b_idx, pose)
    return scene
