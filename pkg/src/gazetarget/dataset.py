"""Frame annotations: schema, JSON Lines I/O, participant splits and summaries."""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .exceptions import InvalidArgumentError, InvalidDataError, ParseError, RecordValidationError
from .geometry import BoundingBox, Point, center, euclidean
from .validation import check_fraction

FIELDS = (
    "frame_id",
    "participant",
    "session",
    "trial",
    "image_w",
    "image_h",
    "head_bbox",
    "objects",
    "target_label",
    "gaze_point",
    "distractor_present",
)

DEFAULT_GAZE_TOLERANCE = 2.0


@dataclass(frozen=True)
class SceneObject:
    label: str
    bbox: BoundingBox

    def to_dict(self) -> dict:
        return {"label": self.label, "bbox": self.bbox.as_list()}


@dataclass(frozen=True)
class FrameRecord:
    frame_id: str
    participant: str
    session: int
    trial: int
    image_w: int
    image_h: int
    head_bbox: BoundingBox
    objects: tuple[SceneObject, ...]
    target_label: str
    gaze_point: Point
    distractor_present: bool = False

    @property
    def target(self) -> SceneObject:
        return next(o for o in self.objects if o.label == self.target_label)

    @property
    def gaze_point_normalized(self) -> Point:
        return Point(self.gaze_point.x / self.image_w, self.gaze_point.y / self.image_h)

    def to_dict(self) -> dict:
        return {
            "frame_id": self.frame_id,
            "participant": self.participant,
            "session": self.session,
            "trial": self.trial,
            "image_w": self.image_w,
            "image_h": self.image_h,
            "head_bbox": self.head_bbox.as_list(),
            "objects": [o.to_dict() for o in self.objects],
            "target_label": self.target_label,
            "gaze_point": self.gaze_point.as_list(),
            "distractor_present": self.distractor_present,
        }

    @classmethod
    def from_dict(cls, d: dict) -> FrameRecord:
        if not isinstance(d, dict):
            raise InvalidDataError("record must be a JSON object")
        missing = [f for f in FIELDS if f not in d]
        if missing:
            raise InvalidDataError(f"record missing field(s): {', '.join(missing)}")
        unknown = sorted(set(d) - set(FIELDS))
        if unknown:
            raise InvalidDataError(f"record has unknown field(s): {', '.join(unknown)}")
        try:
            objects = tuple(SceneObject(o["label"], BoundingBox.from_list(o["bbox"])) for o in d["objects"])
            return cls(
                frame_id=str(d["frame_id"]),
                participant=str(d["participant"]),
                session=_as_int(d["session"], "session"),
                trial=_as_int(d["trial"], "trial"),
                image_w=_as_int(d["image_w"], "image_w"),
                image_h=_as_int(d["image_h"], "image_h"),
                head_bbox=BoundingBox.from_list(d["head_bbox"]),
                objects=objects,
                target_label=d["target_label"],
                gaze_point=Point(*d["gaze_point"]),
                distractor_present=bool(d["distractor_present"]),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidDataError(f"malformed record: {exc}") from None


def _as_int(value, name):
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidDataError(f"{name} must be an integer, got {value!r}")
    return value


def validate_record(rec: FrameRecord, gaze_tolerance: float = DEFAULT_GAZE_TOLERANCE) -> FrameRecord:
    """Check the annotation invariants; raise RecordValidationError naming the broken rule."""
    fid = rec.frame_id
    if not 1 <= rec.session <= 5:
        raise RecordValidationError(fid, "session-range", f"session must be 1..5, got {rec.session}")
    if not 1 <= rec.trial <= 2:
        raise RecordValidationError(fid, "trial-range", f"trial must be 1..2, got {rec.trial}")
    if rec.image_w <= 0 or rec.image_h <= 0:
        raise RecordValidationError(fid, "image-size", f"image size {rec.image_w}x{rec.image_h} must be positive")
    for name, box in [("head_bbox", rec.head_bbox)] + [(f"object {o.label!r}", o.bbox) for o in rec.objects]:
        if not box.inside(rec.image_w, rec.image_h):
            raise RecordValidationError(fid, "box-inside-image", f"{name} {box.as_list()} lies outside the image")
    for o in rec.objects:
        if not isinstance(o.label, str) or not o.label:
            raise RecordValidationError(fid, "object-label", "object labels must be non-empty strings")
    n_target = sum(o.label == rec.target_label for o in rec.objects)
    if n_target != 1:
        raise RecordValidationError(
            fid, "target-unique", f"target_label {rec.target_label!r} appears {n_target} times among objects"
        )
    # with a distractor on the table the count is not enforced
    if not rec.distractor_present and len(rec.objects) != rec.session:
        raise RecordValidationError(
            fid, "session-object-count", f"session {rec.session} expects {rec.session} objects, got {len(rec.objects)}"
        )
    target_center = center(rec.target.bbox)
    off = euclidean(rec.gaze_point, target_center)
    if off > gaze_tolerance:
        raise RecordValidationError(
            fid,
            "gaze-point-at-target-center",
            f"gaze_point {rec.gaze_point.as_list()} is {off:.3f} px from the center "
            f"{target_center.as_list()} of target {rec.target_label!r} (tolerance {gaze_tolerance} px)",
        )
    return rec


def load_records(path, gaze_tolerance: float = DEFAULT_GAZE_TOLERANCE) -> list[FrameRecord]:
    path = Path(path)
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path, lineno) from None
            try:
                rec = FrameRecord.from_dict(obj)
            except (InvalidDataError, ValueError) as exc:
                raise ParseError(str(exc), path, lineno) from None
            records.append(validate_record(rec, gaze_tolerance))
    return records


def record_to_line(rec: FrameRecord) -> str:
    return json.dumps(rec.to_dict(), sort_keys=True, separators=(",", ":"))


def dump_records(records, path) -> None:
    atomic_write_text(path, "".join(record_to_line(r) + "\n" for r in records))


@dataclass(frozen=True)
class SplitSpec:
    train_participants: frozenset
    test_participants: frozenset
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "train_participants", frozenset(self.train_participants))
        object.__setattr__(self, "test_participants", frozenset(self.test_participants))
        if self.train_participants & self.test_participants:
            raise InvalidArgumentError("train and test participant sets overlap")

    def apply(self, records) -> tuple[list[FrameRecord], list[FrameRecord]]:
        train = [r for r in records if r.participant in self.train_participants]
        test = [r for r in records if r.participant in self.test_participants]
        return train, test


def split_by_participant(records, test_fraction: float = 0.3, seed: int = 0) -> SplitSpec:
    """Shuffle participants with a seeded RNG and send ``ceil(N * test_fraction)`` to test."""
    test_fraction = check_fraction(test_fraction, "test_fraction")
    participants = sorted({r.participant for r in records})
    n = len(participants)
    if n < 2:
        raise InvalidArgumentError(f"need at least 2 participants to split, got {n}")
    # the epsilon keeps 10 * 0.3 == 3.0000000000000004 from rounding up to 4
    n_test = math.ceil(n * test_fraction - 1e-9)
    if n_test < 1:
        raise InvalidArgumentError(f"test_fraction {test_fraction} leaves the test set empty")
    if n_test >= n:
        raise InvalidArgumentError(f"test_fraction {test_fraction} leaves the train set empty")
    order = np.random.default_rng(seed).permutation(n)
    test = {participants[i] for i in order[:n_test]}
    train = set(participants) - test
    return SplitSpec(frozenset(train), frozenset(test), seed)


@dataclass
class DatasetSummary:
    total_frames: int = 0
    distractor_frames: int = 0
    videos: int = 0
    per_participant: dict = field(default_factory=dict)
    per_session: dict = field(default_factory=dict)
    per_trial: dict = field(default_factory=dict)
    per_label: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "total_frames": self.total_frames,
            "distractor_frames": self.distractor_frames,
            "videos": self.videos,
            "per_participant": dict(self.per_participant),
            "per_session": {str(k): v for k, v in self.per_session.items()},
            "per_trial": {str(k): v for k, v in self.per_trial.items()},
            "per_label": dict(self.per_label),
        }


def dataset_summary(records) -> DatasetSummary:
    """Frame counts per participant, session, trial and target label.

    A video is one (participant, session, trial, target) clip, matching the
    one-clip-per-gazed-object collection protocol.
    """
    records = list(records)
    return DatasetSummary(
        total_frames=len(records),
        distractor_frames=sum(r.distractor_present for r in records),
        videos=len({(r.participant, r.session, r.trial, r.target_label) for r in records}),
        per_participant=dict(sorted(Counter(r.participant for r in records).items())),
        per_session=dict(sorted(Counter(r.session for r in records).items())),
        per_trial=dict(sorted(Counter(r.trial for r in records).items())),
        per_label=dict(sorted(Counter(r.target_label for r in records).items())),
    )
