"""Attention heatmaps: container, processing and on-disk formats.

Grids are stored row-major as ``values[row, col]`` with shape
``(height, width)``. Cell ``(col, row)`` covers the square
``[col, col + 1] x [row, row + 1]`` and is represented by its center
``(col + 0.5, row + 0.5)`` whenever a single point is needed.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from ._io import atomic_write_bytes
from .exceptions import FormatError, NoRegionError
from .geometry import BoundingBox, Point
from .validation import check_choice, check_fraction, check_grid, check_positive, check_positive_int

GHM_MAGIC = b"GHM1"
_GHM_HEADER = struct.Struct("<4sII")

# 4-connectivity structuring element for component labelling
_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

CENTROID_MODES = ("weighted", "uniform")


@dataclass(frozen=True, eq=False)
class Heatmap:
    """A grid of confidences in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        arr = check_grid(self.values).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, Heatmap):
            return NotImplemented
        return self.values.shape == other.values.shape and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"Heatmap(width={self.width}, height={self.height}, max={self.values.max():.4g})"


@dataclass(frozen=True, eq=False)
class HotRegion:
    threshold_used: float
    bbox: BoundingBox
    centroid: Point
    cell_count: int
    mask: np.ndarray = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, HotRegion):
            return NotImplemented
        return (
            self.threshold_used == other.threshold_used
            and self.bbox == other.bbox
            and self.centroid == other.centroid
            and self.cell_count == other.cell_count
            and np.array_equal(self.mask, other.mask)
        )

    def to_dict(self) -> dict:
        return {
            "threshold_used": self.threshold_used,
            "bbox": self.bbox.as_list(),
            "centroid": self.centroid.as_list(),
            "cell_count": self.cell_count,
        }


def as_heatmap(h) -> Heatmap:
    return h if isinstance(h, Heatmap) else Heatmap(h)


def _raw_grid(h) -> np.ndarray:
    if isinstance(h, Heatmap):
        return h.values
    return check_grid(h, unit_range=False)


def normalize_max(h) -> Heatmap:
    """Divide by the grid maximum; an all-zero grid comes back unchanged.

    Accepts a :class:`Heatmap` or any non-negative 2-D array.
    """
    arr = _raw_grid(h)
    peak = arr.max()
    if isinstance(h, Heatmap) and peak in (0.0, 1.0):
        return h
    if peak == 0:
        return Heatmap(arr)
    out = arr / peak
    # division by the max can only overshoot 1 through rounding
    np.minimum(out, 1.0, out=out)
    return Heatmap(out)


def argmax(h) -> Point:
    """Cell coordinates ``(col, row)`` of the maximum; ties go to the first in row-major order."""
    arr = _raw_grid(h)
    row, col = np.unravel_index(int(np.argmax(arr)), arr.shape)
    return Point(float(col), float(row))


def cell_center(cell: Point) -> Point:
    return Point(cell.x + 0.5, cell.y + 0.5)


def hottest_region(h, tau: float = 0.5, centroid: str = "weighted") -> HotRegion:
    """The 4-connected supra-threshold component that holds the global maximum.

    Cells with ``value >= tau * max`` are kept. The returned bbox is in cell
    coordinates using cell extents, so a single cell at ``(c, r)`` yields
    ``(c, r, c + 1, r + 1)``. The centroid averages cell centers, weighted by
    value unless ``centroid="uniform"``.
    """
    tau = check_fraction(tau, "tau", low_open=True)
    check_choice(centroid, "centroid", CENTROID_MODES)
    arr = _raw_grid(h)
    peak = arr.max()
    if peak <= 0:
        raise NoRegionError("heatmap has no positive cell; cannot extract a hot region")
    threshold = tau * peak
    labels, _ = ndimage.label(arr >= threshold, structure=_FOUR_CONNECTED)
    peak_row, peak_col = np.unravel_index(int(np.argmax(arr)), arr.shape)
    mask = labels == labels[peak_row, peak_col]
    rows, cols = np.nonzero(mask)
    if centroid == "weighted":
        weights = arr[rows, cols]
    else:
        weights = np.ones(rows.size)
    total = weights.sum()
    cx = float(np.dot(weights, cols + 0.5) / total)
    cy = float(np.dot(weights, rows + 0.5) / total)
    bbox = BoundingBox(float(cols.min()), float(rows.min()), float(cols.max() + 1), float(rows.max() + 1))
    mask.setflags(write=False)
    return HotRegion(
        threshold_used=float(threshold),
        bbox=bbox,
        centroid=Point(cx, cy),
        cell_count=int(rows.size),
        mask=mask,
    )


def gaussian_mask(center: Point, sigma: float, width: int, height: int) -> Heatmap:
    """Isotropic Gaussian evaluated at cell centers, peak 1 at ``center``."""
    sigma = check_positive(sigma, "sigma")
    width = check_positive_int(width, "width")
    height = check_positive_int(height, "height")
    xs = np.arange(width) + 0.5
    ys = np.arange(height) + 0.5
    sq = (xs[None, :] - center.x) ** 2 + (ys[:, None] - center.y) ** 2
    return Heatmap(np.exp(-sq / (2.0 * sigma * sigma)))


def _lerp_axis(arr: np.ndarray, new_len: int, axis: int) -> np.ndarray:
    old_len = arr.shape[axis]
    if old_len == new_len:
        return arr
    # align cell centers, then clamp to the edge cells
    src = (np.arange(new_len) + 0.5) * (old_len / new_len) - 0.5
    src = np.clip(src, 0.0, old_len - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, old_len - 1)
    frac = src - lo
    a = np.take(arr, lo, axis=axis)
    b = np.take(arr, hi, axis=axis)
    shape = [1, 1]
    shape[axis] = new_len
    # a + (b - a) * t reproduces a exactly when a == b, so constants survive
    return a + (b - a) * frac.reshape(shape)


def resample(h, new_width: int, new_height: int) -> Heatmap:
    """Bilinear resampling with edge clamping."""
    new_width = check_positive_int(new_width, "new_width")
    new_height = check_positive_int(new_height, "new_height")
    hm = as_heatmap(h)
    if hm.shape == (new_height, new_width):
        return hm
    arr = hm.values
    out = _lerp_axis(_lerp_axis(arr, new_height, 0), new_width, 1)
    np.clip(out, arr.min(), arr.max(), out=out)
    return Heatmap(out)


def encode_ghm(h) -> bytes:
    hm = as_heatmap(h)
    header = _GHM_HEADER.pack(GHM_MAGIC, hm.width, hm.height)
    return header + hm.values.astype("<f4").tobytes(order="C")


def decode_ghm(data: bytes, source: str = "<bytes>") -> Heatmap:
    if len(data) < _GHM_HEADER.size:
        raise FormatError(f"{source}: file too short for a GHM1 header ({len(data)} bytes)")
    magic, width, height = _GHM_HEADER.unpack_from(data)
    if magic != GHM_MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}, expected {GHM_MAGIC!r}")
    if width < 1 or height < 1:
        raise FormatError(f"{source}: invalid dimensions {width}x{height}")
    expected = _GHM_HEADER.size + 4 * width * height
    if len(data) != expected:
        kind = "short" if len(data) < expected else "has trailing bytes"
        raise FormatError(f"{source}: file {kind}: {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f4", offset=_GHM_HEADER.size).reshape(height, width)
    if not np.all(np.isfinite(values)):
        raise FormatError(f"{source}: non-finite cell values")
    try:
        return Heatmap(values.astype(np.float64))
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from None


def read_ghm(path) -> Heatmap:
    path = Path(path)
    return decode_ghm(path.read_bytes(), source=str(path))


def write_ghm(h, path) -> None:
    atomic_write_bytes(path, encode_ghm(h))


def encode_pgm(h) -> bytes:
    """8-bit binary PGM, value = round(v * 255)."""
    hm = as_heatmap(h)
    pixels = np.rint(hm.values * 255).astype(np.uint8)
    header = f"P5\n{hm.width} {hm.height}\n255\n".encode("ascii")
    return header + pixels.tobytes(order="C")


def write_pgm(h, path) -> None:
    atomic_write_bytes(path, encode_pgm(h))


__all__ = [
    "CENTROID_MODES",
    "GHM_MAGIC",
    "Heatmap",
    "HotRegion",
    "argmax",
    "as_heatmap",
    "cell_center",
    "decode_ghm",
    "encode_ghm",
    "encode_pgm",
    "gaussian_mask",
    "hottest_region",
    "normalize_max",
    "read_ghm",
    "resample",
    "write_ghm",
    "write_pgm",
]
