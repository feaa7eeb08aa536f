"""Multi-modal flow-field snapshots: data model, FFB container, manifests,
scattered-to-grid interpolation and crop windows.

Grids are stored row-major with shape ``(height, width)``; row ``i`` maps to
``y = ymin + i * dy`` and column ``j`` to ``x = xmin + j * dx`` (grid nodes
include both bounds).
"""

from __future__ import annotations

import csv
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import DataError, FormatError, InputError

CHANNELS = ("u", "v", "p", "nut", "nuTilda")

FFB_MAGIC = b"FFB1"
MANIFEST_HEADER = ("id", "path", "drag", "lift", "angle_of_attack", "shape_id")

IDW_NEIGHBOURS = 8
IDW_POWER = 2.0


@dataclass(frozen=True)
class FlowField:
    """Immutable stack of named scalar grids sharing one ``height x width`` extent."""

    names: tuple
    data: np.ndarray  # (C, H, W) float32, read-only

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        data = np.array(self.data, dtype=np.float32, copy=True)
        if data.ndim != 3:
            raise DataError(f"expected a (C, H, W) stack, got shape {data.shape}")
        if data.shape[0] != len(names):
            raise DataError(f"{len(names)} channel names for {data.shape[0]} grids")
        if len(set(names)) != len(names):
            raise DataError(f"duplicate channel names: {names}")
        if data.shape[1] < 1 or data.shape[2] < 1:
            raise DataError("empty grid")
        if not np.isfinite(data).all():
            raise DataError("flow field contains NaN or Inf")
        data.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_channels(cls, channels: Mapping[str, np.ndarray] | Iterable[tuple]) -> "FlowField":
        items = list(channels.items()) if isinstance(channels, Mapping) else list(channels)
        if not items:
            raise DataError("a flow field needs at least one channel")
        shapes = {np.shape(g) for _, g in items}
        if len(shapes) != 1:
            raise DataError(f"channel grids differ in shape: {sorted(shapes)}")
        return cls(tuple(n for n, _ in items), np.stack([np.asarray(g, dtype=np.float32) for _, g in items]))

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def channels(self) -> list:
        return [(n, self.data[i]) for i, n in enumerate(self.names)]

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.data[self.names.index(name)]
        except ValueError:
            raise InputError(f"no channel named {name!r}; have {self.names}") from None

    def has_canonical_channels(self) -> bool:
        return all(c in self.names for c in CHANNELS)

    def canonical(self) -> "FlowField":
        """Return the five canonical channels in canonical order."""
        missing = [c for c in CHANNELS if c not in self.names]
        if missing:
            raise DataError(f"missing canonical channels {missing}")
        if self.names == CHANNELS:
            return self
        return FlowField(CHANNELS, np.stack([self.channel(c) for c in CHANNELS]))

    def __eq__(self, other):
        if not isinstance(other, FlowField):
            return NotImplemented
        return self.names == other.names and np.array_equal(self.data, other.data)

    __hash__ = None


@dataclass(frozen=True)
class SampleRecord:
    id: str
    field: FlowField | None
    drag: float
    lift: float
    angle_of_attack: float | None = None
    shape_id: str | None = None
    path: str | None = None
    source: object = field(default=None, compare=False, repr=False)  # zero-arg callable -> FlowField

    def __post_init__(self):
        if not (math.isfinite(self.drag) and math.isfinite(self.lift)):
            raise DataError(f"record {self.id!r}: non-finite targets")

    def load(self) -> FlowField:
        if self.field is not None:
            return self.field
        if self.source is not None:
            return self.source()
        if self.path is None:
            raise DataError(f"record {self.id!r} has neither a field nor a path")
        return read_field(self.path)


@dataclass(frozen=True)
class ScatteredSamples:
    points: np.ndarray  # (N, 2)
    values: dict = field(default_factory=dict)  # channel name -> (N,)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        vals = {str(k): np.asarray(v, dtype=np.float64).ravel() for k, v in self.values.items()}
        if len(pts) == 0:
            raise InputError("scattered samples need at least one point")
        for name, v in vals.items():
            if len(v) != len(pts):
                raise InputError(f"channel {name!r}: {len(v)} values for {len(pts)} points")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)


# ---------------------------------------------------------------------------
# FFB container

def write_field(field: FlowField, path) -> None:
    """Write ``field`` as an FFB container (little-endian, channel-major)."""
    header = bytearray(FFB_MAGIC)
    header += struct.pack("<III", field.height, field.width, len(field.names))
    for name in field.names:
        raw = name.encode("utf-8")
        header += struct.pack("<H", len(raw)) + raw
    with open(path, "wb") as fh:
        fh.write(bytes(header))
        fh.write(np.ascontiguousarray(field.data, dtype="<f4").tobytes())


def read_field(path) -> FlowField:
    with open(path, "rb") as fh:
        buf = fh.read()
    return decode_field(buf)


def decode_field(buf: bytes) -> FlowField:
    if len(buf) < 16 or buf[:4] != FFB_MAGIC:
        raise FormatError(f"bad FFB magic {bytes(buf[:4])!r}")
    height, width, count = struct.unpack_from("<III", buf, 4)
    offset = 16
    names = []
    for _ in range(count):
        if offset + 2 > len(buf):
            raise FormatError("truncated channel table")
        (n,) = struct.unpack_from("<H", buf, offset)
        offset += 2
        try:
            names.append(buf[offset:offset + n].decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise FormatError("channel name is not UTF-8") from exc
        offset += n
    expected = count * height * width * 4
    if len(buf) - offset != expected:
        raise DataError(f"payload holds {len(buf) - offset} bytes, header implies {expected}")
    if height == 0 or width == 0 or count == 0:
        raise DataError("FFB header declares an empty field")
    data = np.frombuffer(buf, dtype="<f4", count=count * height * width, offset=offset)
    return FlowField(tuple(names), data.reshape(count, height, width))


# ---------------------------------------------------------------------------
# manifests

def write_manifest(records: Sequence[SampleRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for r in records:
            w.writerow([
                r.id, r.path or "", repr(float(r.drag)), repr(float(r.lift)),
                "" if r.angle_of_attack is None else repr(float(r.angle_of_attack)),
                r.shape_id or "",
            ])


def read_manifest(path) -> list:
    """Load manifest rows as lazy records; relative paths resolve against the manifest directory."""
    base = Path(path).parent
    records, seen = [], set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MANIFEST_HEADER:
            raise FormatError(f"manifest header must be {','.join(MANIFEST_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(MANIFEST_HEADER):
                raise FormatError(f"manifest line {lineno}: expected 6 columns")
            rid, rel, drag, lift, aoa, shape = row
            if rid in seen:
                raise DataError(f"duplicate record id {rid!r}")
            seen.add(rid)
            try:
                drag, lift = float(drag), float(lift)
                aoa = float(aoa) if aoa else None
            except ValueError as exc:
                raise DataError(f"manifest line {lineno}: {exc}") from None
            full = rel if os.path.isabs(rel) else str(base / rel)
            records.append(SampleRecord(rid, None, drag, lift, aoa, shape or None, full))
    return records


# ---------------------------------------------------------------------------
# grid operations

def grid_coordinates(width: int, height: int, bounds) -> tuple:
    xmin, xmax, ymin, ymax = map(float, bounds)
    xs = np.linspace(xmin, xmax, width) if width > 1 else np.array([0.5 * (xmin + xmax)])
    ys = np.linspace(ymin, ymax, height) if height > 1 else np.array([0.5 * (ymin + ymax)])
    return xs, ys


def interpolate_grid(samples: ScatteredSamples, width: int, height: int, bounds,
                     k: int = IDW_NEIGHBOURS, power: float = IDW_POWER) -> FlowField:
    """Inverse-distance-weighted resampling of scattered values onto a regular grid.

    Each node averages its ``k`` nearest samples with weights ``1 / d**power``;
    a node that coincides with a sample takes that sample's value.
    """
    if width < 1 or height < 1:
        raise InputError("grid must be at least 1x1")
    xmin, xmax, ymin, ymax = map(float, bounds)
    if not (xmax > xmin and ymax > ymin):
        raise InputError(f"degenerate bounds {bounds}")
    if not samples.values:
        raise InputError("scattered samples carry no channels")
    xs, ys = grid_coordinates(width, height, bounds)
    gx, gy = np.meshgrid(xs, ys)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])

    kk = min(k, len(samples.points))
    dist, idx = cKDTree(samples.points).query(nodes, k=kk)
    dist = dist.reshape(len(nodes), kk)
    idx = idx.reshape(len(nodes), kk)
    exact = dist[:, 0] == 0.0
    with np.errstate(divide="ignore"):
        w = 1.0 / dist ** power
    w[exact] = 0.0
    w[exact, 0] = 1.0
    w /= w.sum(axis=1, keepdims=True)

    grids = []
    for name, vals in samples.values.items():
        grids.append((name, (w * vals[idx]).sum(axis=1).reshape(height, width)))
    return FlowField.from_channels(grids)


def crop_window(field: FlowField, rect) -> FlowField:
    x0, y0, w, h = (int(v) for v in rect)
    if w < 1 or h < 1 or x0 < 0 or y0 < 0 or x0 + w > field.width or y0 + h > field.height:
        raise InputError(f"crop {rect} outside {field.width}x{field.height} field")
    return FlowField(field.names, field.data[:, y0:y0 + h, x0:x0 + w])


def normalize_channel(grid: np.ndarray) -> tuple:
    """Min-max scale to [0, 1].

    Returns ``(scaled, lo, hi, degenerate)``; a constant grid maps to zeros and
    sets ``degenerate``.
    """
    g = np.asarray(grid, dtype=np.float64)
    lo, hi = float(g.min()), float(g.max())
    if hi == lo:
        return np.zeros_like(g), lo, hi, True
    return (g - lo) / (hi - lo), lo, hi, False


def normalize_field(field: FlowField) -> np.ndarray:
    """Per-channel min-max normalisation; returns a float64 (C, H, W) stack."""
    return np.stack([normalize_channel(g)[0] for g in field.data])
