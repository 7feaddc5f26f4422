"""Pick the object a person is looking at from an attention heatmap and detections.

The heatmap's hottest region gives a box ``H`` and a centroid. Detections whose
box overlaps ``H`` compete on IoU (largest by default, smallest when
``overlap_rule="smallest"``); if none overlaps, the detection whose center is
closest to the centroid wins. Remaining ties go to the smaller
center-to-centroid distance and then to the lower list index.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .exceptions import InvalidDataError, ParseError
from .geometry import BoundingBox, center, euclidean, iou
from .heatmap import CENTROID_MODES, HotRegion, hottest_region, normalize_max, resample
from .validation import check_choice, check_fraction, check_positive

OVERLAP_RULES = ("largest", "smallest")
RULES_FIRED = ("overlap", "nearest", "none")

# values closer than this count as ties; centroids carry rounding error, so
# geometrically equal distances rarely compare equal bit for bit
IOU_TIE_TOL = 1e-12
DIST_TIE_TOL = 1e-9


@dataclass(frozen=True)
class Detection:
    bbox: BoundingBox
    label: str
    score: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.label, str) or not self.label:
            raise InvalidDataError(f"detection label must be a non-empty string, got {self.label!r}")
        if self.score is not None:
            object.__setattr__(self, "score", check_fraction(self.score, "score"))

    def to_dict(self) -> dict:
        out = {"label": self.label, "bbox": self.bbox.as_list()}
        if self.score is not None:
            out["score"] = self.score
        return out

    @classmethod
    def from_dict(cls, d: dict) -> Detection:
        return cls(bbox=BoundingBox.from_list(d["bbox"]), label=d["label"], score=d.get("score"))


@dataclass(frozen=True)
class DetectionSet:
    frame_id: str
    image_w: int
    image_h: int
    detections: tuple[Detection, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "frame_id", str(self.frame_id))
        check_positive(self.image_w, "image_w")
        check_positive(self.image_h, "image_h")
        object.__setattr__(self, "detections", tuple(self.detections))
        for i, det in enumerate(self.detections):
            if not det.bbox.inside(self.image_w, self.image_h):
                raise InvalidDataError(
                    f"frame {self.frame_id!r}: detection {i} box {det.bbox.as_list()} "
                    f"lies outside the {self.image_w}x{self.image_h} image"
                )

    def __len__(self):
        return len(self.detections)

    def to_dict(self) -> dict:
        return {
            "frame_id": self.frame_id,
            "image_w": self.image_w,
            "image_h": self.image_h,
            "detections": [d.to_dict() for d in self.detections],
        }

    @classmethod
    def from_dict(cls, d: dict) -> DetectionSet:
        try:
            dets = tuple(Detection.from_dict(x) for x in d.get("detections", []))
            return cls(frame_id=d["frame_id"], image_w=d["image_w"], image_h=d["image_h"], detections=dets)
        except KeyError as exc:
            raise InvalidDataError(f"detection record missing field {exc.args[0]!r}") from None
        except TypeError as exc:
            raise InvalidDataError(f"malformed detection record: {exc}") from None


@dataclass(frozen=True)
class GazeSelection:
    frame_id: str
    selected: Optional[int]
    label: Optional[str]
    rule_fired: str
    hot_region: HotRegion
    bbox: Optional[BoundingBox] = None

    def to_dict(self) -> dict:
        return {
            "frame_id": self.frame_id,
            "selected": self.selected,
            "label": self.label,
            "bbox": self.bbox.as_list() if self.bbox is not None else None,
            "rule_fired": self.rule_fired,
            "hot_region": self.hot_region.to_dict(),
        }


def select_gazed_object(
    h,
    d: DetectionSet,
    tau: float = 0.5,
    overlap_rule: str = "largest",
    centroid: str = "weighted",
) -> GazeSelection:
    """Select the gazed detection for one frame.

    ``h`` may be a Heatmap or any non-negative grid; it is max-normalized and,
    when its size differs from the image, bilinearly resampled to image pixels
    before the hot region is extracted.

    Raises NoRegionError for an all-zero heatmap.
    """
    check_choice(overlap_rule, "overlap_rule", OVERLAP_RULES)
    check_choice(centroid, "centroid", CENTROID_MODES)
    hm = normalize_max(h)
    hm = resample(hm, int(d.image_w), int(d.image_h))
    region = hottest_region(hm, tau=tau, centroid=centroid)

    if not d.detections:
        return GazeSelection(d.frame_id, None, None, "none", region)

    hot_box = region.bbox
    dists = [euclidean(center(det.bbox), region.centroid) for det in d.detections]
    overlaps = [iou(hot_box, det.bbox) for det in d.detections]
    candidates = [i for i, v in enumerate(overlaps) if v > 0]

    if candidates:
        sign = -1.0 if overlap_rule == "largest" else 1.0
        candidates = _near_min(candidates, [sign * v for v in overlaps], IOU_TIE_TOL)
        rule = "overlap"
    else:
        candidates = list(range(len(d.detections)))
        rule = "nearest"
    best = _near_min(candidates, dists, DIST_TIE_TOL)[0]

    chosen = d.detections[best]
    return GazeSelection(d.frame_id, best, chosen.label, rule, region, chosen.bbox)


def _near_min(indices, values, tol):
    """Indices whose value is within ``tol`` of the minimum, in ascending order."""
    lowest = min(values[i] for i in indices)
    return [i for i in indices if values[i] <= lowest + tol]


def load_detection_sets(path) -> list[DetectionSet]:
    """Read a file holding one JSON detection record per line (a single record also works)."""
    path = Path(path)
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path, lineno) from None
            try:
                out.append(DetectionSet.from_dict(obj))
            except (InvalidDataError, ValueError) as exc:
                raise ParseError(str(exc), path, lineno) from None
    return out


def load_detection_set(path) -> DetectionSet:
    """Read a single detection record; accepts pretty-printed JSON as well as one line."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object", path)
    try:
        return DetectionSet.from_dict(obj)
    except (InvalidDataError, ValueError) as exc:
        raise ParseError(str(exc), path) from None


def dumps_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
