"""Point and axis-aligned box arithmetic.

Boxes are closed real intervals: width is ``x_max - x_min`` (no +1), and a
box with zero width or height is legal but has zero area.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .exceptions import InvalidArgumentError
from .validation import check_finite_real, check_positive


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", check_finite_real(self.x, "x"))
        object.__setattr__(self, "y", check_finite_real(self.y, "y"))

    def as_list(self) -> list[float]:
        return [self.x, self.y]


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        for name in ("x_min", "y_min", "x_max", "y_max"):
            object.__setattr__(self, name, check_finite_real(getattr(self, name), name))
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise InvalidArgumentError(
                f"invalid box ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max}): "
                "min must not exceed max"
            )

    @classmethod
    def from_list(cls, coords) -> BoundingBox:
        if len(coords) != 4:
            raise InvalidArgumentError(f"bbox needs 4 coordinates, got {len(coords)}")
        return cls(*coords)

    def as_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def inside(self, width: float, height: float) -> bool:
        """True when the box lies within [0, width] x [0, height]."""
        return self.x_min >= 0 and self.y_min >= 0 and self.x_max <= width and self.y_max <= height

    def contains(self, p: Point) -> bool:
        return self.x_min <= p.x <= self.x_max and self.y_min <= p.y <= self.y_max


def intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; 0 when the union has zero area."""
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    # clamp guards against a last-ulp excursion when the boxes are identical
    return min(1.0, inter / union)


def center(b: BoundingBox) -> Point:
    return Point((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0)


def euclidean(p: Point, q: Point) -> float:
    return math.hypot(p.x - q.x, p.y - q.y)


def normalized_distance(p: Point, q: Point, image_w: float, image_h: float) -> float:
    """Distance between two pixel points after scaling the image to the unit square."""
    image_w = check_positive(image_w, "image_w")
    image_h = check_positive(image_h, "image_h")
    return math.hypot((p.x - q.x) / image_w, (p.y - q.y) / image_h)
