"""Cube file I/O and run artifacts.

Cube file format (version 1): a 40-byte little-endian header followed by the
raw payload in band-sequential (BSQ) order, i.e. each n1 x n2 band plane in
row-major order, one band after another.

    bytes 0..7    magic  b"SWLRTRC1"
    bytes 8..9    format version (uint16) = 1
    byte  10      dtype tag: 4 = float32, 8 = float64
    byte  11      byte-order tag: 1 = little-endian (the only value written)
    bytes 12..23  n1, n2, n3 (uint32 each)
    bytes 24..39  declared value range, min then max (float64 each)

Run configs are plain ``key = value`` text files ('#' starts a comment);
CLI flags override file values.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"SWLRTRC1"
FORMAT_VERSION = 1
HEADER = struct.Struct("<8sHBB3I2d")
_DTYPE_TAGS = {4: np.dtype("<f4"), 8: np.dtype("<f8")}


class CubeFormatError(ValueError):
    """Raised when a cube file is malformed or unreadable."""


@dataclass
class HsiCube:
    """A rows x cols x bands image cube with its declared value range."""

    data: np.ndarray
    value_range: tuple[float, float] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise ValueError(f"cube data must be 3-dimensional, got ndim={self.data.ndim}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("cube data contains non-finite values")
        if self.value_range is None:
            self.value_range = (float(self.data.min()), float(self.data.max()))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


def write_cube(cube: HsiCube, path, dtype: str = "float64") -> None:
    """Write a cube file; ``dtype`` is 'float32' or 'float64'."""
    tag = {"float32": 4, "float64": 8}.get(dtype)
    if tag is None:
        raise ValueError(f"unsupported dtype {dtype!r}")
    n1, n2, n3 = cube.shape
    vmin, vmax = cube.value_range
    header = HEADER.pack(MAGIC, FORMAT_VERSION, tag, 1, n1, n2, n3, vmin, vmax)
    # BSQ: band-major, each band plane row-major.
    payload = np.ascontiguousarray(np.moveaxis(cube.data, 2, 0)).astype(_DTYPE_TAGS[tag])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_cube(path) -> HsiCube:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"cube file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < HEADER.size:
        raise CubeFormatError(f"truncated header in {path}")
    magic, version, tag, order, n1, n2, n3, vmin, vmax = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CubeFormatError(f"bad magic in {path}: {magic!r}")
    if version != FORMAT_VERSION:
        raise CubeFormatError(f"unsupported format version {version} in {path}")
    if tag not in _DTYPE_TAGS:
        raise CubeFormatError(f"unknown dtype tag {tag} in {path}")
    if order != 1:
        raise CubeFormatError(f"unsupported byte-order tag {order} in {path}")
    dtype = _DTYPE_TAGS[tag]
    expected = HEADER.size + n1 * n2 * n3 * dtype.itemsize
    if len(raw) < expected:
        raise CubeFormatError(f"truncated payload in {path}: {len(raw)} < {expected} bytes")
    flat = np.frombuffer(raw, dtype=dtype, count=n1 * n2 * n3, offset=HEADER.size)
    if np.isnan(flat).any():
        raise CubeFormatError(f"NaN in payload of {path}")
    data = np.moveaxis(flat.reshape((n3, n1, n2)), 0, 2)
    return HsiCube(data=np.ascontiguousarray(data), value_range=(vmin, vmax))


def normalize(cube: HsiCube) -> HsiCube:
    """Affinely map the cube onto [0,1]; the original range is kept so the
    mapping can be undone with :func:`denormalize`."""
    lo = float(cube.data.min())
    hi = float(cube.data.max())
    if hi <= lo:
        raise ValueError("cannot normalize a constant cube (max == min)")
    return HsiCube(data=(cube.data - lo) / (hi - lo), value_range=(lo, hi))


def denormalize(cube: HsiCube) -> HsiCube:
    lo, hi = cube.value_range
    return HsiCube(data=cube.data * (hi - lo) + lo, value_range=(lo, hi))


def read_config(path) -> dict[str, str]:
    """Parse a ``key = value`` config file into a string dict."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def write_csv(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
