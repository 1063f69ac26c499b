"""File formats: MDPT raw depth frames and PGM (P5) previews.

MDPT is a minimal binary container for a depth batch D of shape
(N, C, H, W): magic ``MDPT``, version u16, the four dims as u32 (all
little-endian, 22 header bytes total), followed by N*C*H*W float32
little-endian meters in row-major [env][cam][row][col] order. Writing
then reading reproduces the array bit-exactly.

PGM previews map depth linearly from [0, d_max] to gray [255, 0], so
near surfaces render bright and the far limit black.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"MDPT"
VERSION = 1
_HEADER = struct.Struct("<4sHIIII")

HEADER_SIZE = _HEADER.size  # 22 bytes


class FormatError(ValueError):
    """Raised when a file does not decode as the expected format."""


def write_frames(path, data: np.ndarray) -> None:
    """Write an (N, C, H, W) float32 depth batch."""
    arr = np.ascontiguousarray(data, dtype=np.float32)
    if arr.ndim != 4:
        raise ValueError(f"expected (N, C, H, W) data, got shape {arr.shape}")
    n, c, h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, c, h, w))
        fh.write(arr.astype("<f4", copy=False).tobytes())


def read_frames(path) -> np.ndarray:
    """Read an MDPT file back into an (N, C, H, W) float32 array."""
    with open(path, "rb") as fh:
        header = fh.read(HEADER_SIZE)
        if len(header) != HEADER_SIZE:
            raise FormatError(f"{path}: truncated header")
        magic, version, n, c, h, w = _HEADER.unpack(header)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        count = n * c * h * w
        payload = fh.read(4 * count)
        if len(payload) != 4 * count:
            raise FormatError(
                f"{path}: payload holds {len(payload)} bytes, "
                f"expected {4 * count}")
        extra = fh.read(1)
        if extra:
            raise FormatError(f"{path}: trailing bytes after payload")
    return np.frombuffer(payload, dtype="<f4").reshape(n, c, h, w).astype(
        np.float32, copy=False)


def write_grid(path, grid: np.ndarray) -> None:
    """Write a 2-D grid (heights, masks) as a 1x1xHxW frame file."""
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ValueError(f"expected a 2-D grid, got shape {grid.shape}")
    write_frames(path, grid.astype(np.float32)[None, None])


def read_grid(path) -> np.ndarray:
    """Read a grid written by :func:`write_grid` back to 2-D."""
    data = read_frames(path)
    if data.shape[:2] != (1, 1):
        raise FormatError(f"{path}: not a single-grid file (shape {data.shape})")
    return data[0, 0]


def depth_to_u8(depth: np.ndarray, d_max: float) -> np.ndarray:
    """Map [0, d_max] depth to 8-bit gray with near = bright."""
    if d_max <= 0:
        raise ValueError("d_max must be positive")
    frac = np.clip(np.asarray(depth, dtype=np.float64) / d_max, 0.0, 1.0)
    return np.round(255.0 * (1.0 - frac)).astype(np.uint8)


def write_pgm(path, image: np.ndarray) -> None:
    """Write an 8-bit grayscale image as binary PGM (P5)."""
    img = np.ascontiguousarray(image)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError("image must be a 2-D uint8 array")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM (P5) written by :func:`write_pgm`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4 and pos < len(blob):
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if blob[pos:pos + 1] == b"#":
            while pos < len(blob) and blob[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        fields.append(blob[start:pos])
    if len(fields) != 4 or fields[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM")
    w, h, maxval = (int(f) for f in fields[1:])
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    data = blob[pos:pos + w * h]
    if len(data) != w * h:
        raise FormatError(f"{path}: truncated pixel data")
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w)
