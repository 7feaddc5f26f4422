"""Synthetic table-top scenes with a known gaze target.

Each frame gets its own RNG stream keyed by ``(seed, frame_index)``, and every
frame draws the same sequence of random variables whatever the noise settings
are. Two configs that differ only in one noise amplitude therefore see the same
scenes and the same underlying noise draws, scaled differently.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .dataset import FrameRecord, SceneObject, record_to_line
from .exceptions import InvalidArgumentError, PlacementError
from .fusion import Detection, DetectionSet, dumps_line
from .geometry import BoundingBox, Point, center, iou
from .heatmap import Heatmap, normalize_max, write_ghm
from .metrics import MetricsConfig, MetricsReport
from .pipeline import evaluate_frame, fold_results
from .validation import check_fraction, check_positive_int

OBJECT_LABELS = ("cup", "box", "ball", "bottle", "book")
DISTRACTOR_LABEL = "snack"

MAX_PLACEMENT_IOU = 0.05
MAX_PLACEMENT_TRIES = 1000
N_PARTICIPANTS = 10


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    image_w: int = 320
    image_h: int = 240
    n_objects: int = 3
    object_size_min: int = 24
    object_size_max: int = 48
    gaze_sigma_frac: float = 0.02
    gaze_offset_sigma: float = 0.0
    detection_jitter_sigma: float = 0.0
    detection_dropout_p: float = 0.0
    distractor_p: float = 0.0
    noise_floor: float = 0.0

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidArgumentError(f"seed must be a non-negative integer, got {self.seed!r}")
        check_positive_int(self.image_w, "image_w")
        check_positive_int(self.image_h, "image_h")
        n = check_positive_int(self.n_objects, "n_objects")
        if n > len(OBJECT_LABELS):
            raise InvalidArgumentError(f"n_objects must be in 1..{len(OBJECT_LABELS)}, got {n}")
        lo = check_positive_int(self.object_size_min, "object_size_min")
        hi = check_positive_int(self.object_size_max, "object_size_max")
        if lo > hi:
            raise InvalidArgumentError(f"object_size_min ({lo}) exceeds object_size_max ({hi})")
        band_w, band_h = self._band_size()
        if hi > band_w or hi > band_h:
            raise InvalidArgumentError(
                f"object_size_max ({hi}) does not fit the {band_w}x{band_h} px table band"
            )
        for name in ("gaze_sigma_frac", "gaze_offset_sigma", "detection_jitter_sigma"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v) or v < 0:
                raise InvalidArgumentError(f"{name} must be a finite number >= 0, got {v!r}")
        check_fraction(self.detection_dropout_p, "detection_dropout_p")
        check_fraction(self.distractor_p, "distractor_p")
        check_fraction(self.noise_floor, "noise_floor", high_open=True)

    def table_band(self) -> BoundingBox:
        """Region of the image where objects are placed (the table top)."""
        return BoundingBox(
            round(0.05 * self.image_w),
            round(0.45 * self.image_h),
            round(0.95 * self.image_w),
            round(0.95 * self.image_h),
        )

    def _band_size(self):
        b = self.table_band()
        return int(b.width), int(b.height)


def _place_boxes(rng, cfg: SimConfig, count: int, frame_index: int) -> list[BoundingBox]:
    band = cfg.table_band()
    placed: list[BoundingBox] = []
    for k in range(count):
        for _ in range(MAX_PLACEMENT_TRIES):
            w, h = rng.integers(cfg.object_size_min, cfg.object_size_max + 1, size=2)
            x = rng.integers(band.x_min, band.x_max - w + 1)
            y = rng.integers(band.y_min, band.y_max - h + 1)
            box = BoundingBox(float(x), float(y), float(x + w), float(y + h))
            if all(iou(box, other) <= MAX_PLACEMENT_IOU for other in placed):
                placed.append(box)
                break
        else:
            raise PlacementError(
                f"frame {frame_index}: could not place object {k + 1} of {count} "
                f"after {MAX_PLACEMENT_TRIES} tries"
            )
    return placed


def _blob(cfg: SimConfig, c: Point) -> np.ndarray:
    sigma = cfg.gaze_sigma_frac * cfg.image_w
    if sigma == 0:
        out = np.zeros((cfg.image_h, cfg.image_w))
        col = min(int(c.x), cfg.image_w - 1)
        row = min(int(c.y), cfg.image_h - 1)
        out[row, col] = 1.0
        return out
    gx = np.exp(-((np.arange(cfg.image_w) + 0.5 - c.x) ** 2) / (2 * sigma**2))
    gy = np.exp(-((np.arange(cfg.image_h) + 0.5 - c.y) ** 2) / (2 * sigma**2))
    return np.outer(gy, gx)


def _jittered(box: BoundingBox, noise: np.ndarray, cfg: SimConfig) -> BoundingBox:
    coords = np.asarray(box.as_list()) + noise * cfg.detection_jitter_sigma
    xs = np.clip(np.sort(coords[[0, 2]]), 0, cfg.image_w)
    ys = np.clip(np.sort(coords[[1, 3]]), 0, cfg.image_h)
    return BoundingBox(float(xs[0]), float(ys[0]), float(xs[1]), float(ys[1]))


def synth_frame(cfg: SimConfig, frame_index: int) -> tuple[Heatmap, DetectionSet, FrameRecord]:
    if frame_index < 0:
        raise InvalidArgumentError(f"frame_index must be >= 0, got {frame_index}")
    rng = np.random.default_rng([cfg.seed, frame_index])
    W, H = cfg.image_w, cfg.image_h

    has_distractor = bool(rng.random() < cfg.distractor_p)
    labels = [OBJECT_LABELS[i] for i in rng.permutation(len(OBJECT_LABELS))[: cfg.n_objects]]
    target = int(rng.integers(cfg.n_objects))
    n_total = cfg.n_objects + has_distractor
    boxes = _place_boxes(rng, cfg, n_total, frame_index)
    if has_distractor:
        labels.append(DISTRACTOR_LABEL)
    objects = tuple(SceneObject(lbl, box) for lbl, box in zip(labels, boxes))

    head_cx = W / 2 + rng.normal() * 0.05 * W
    head_w, head_h = 0.1 * W, 0.14 * H
    head_x = float(np.clip(head_cx - head_w / 2, 0, W - head_w))
    head = BoundingBox(head_x, 0.05 * H, head_x + head_w, 0.05 * H + head_h)

    offset = rng.standard_normal(2)
    noise = rng.random((H, W))
    jitter = rng.standard_normal((n_total, 4))
    dropped = rng.random(n_total) < cfg.detection_dropout_p

    gaze = center(boxes[target])
    blob_center = Point(
        float(np.clip(gaze.x + offset[0] * cfg.gaze_offset_sigma * W, 0, W)),
        float(np.clip(gaze.y + offset[1] * cfg.gaze_offset_sigma * H, 0, H)),
    )
    raw = _blob(cfg, blob_center) + cfg.noise_floor * noise
    # round through float32 so the in-memory map equals what GHM1 stores
    values = normalize_max(raw).values.astype(np.float32).astype(np.float64)
    heatmap = Heatmap(values)

    frame_id = f"{frame_index:06d}"
    detections = tuple(
        Detection(_jittered(obj.bbox, jitter[i], cfg), obj.label)
        for i, obj in enumerate(objects)
        if not dropped[i]
    )
    dets = DetectionSet(frame_id, W, H, detections)
    record = FrameRecord(
        frame_id=frame_id,
        participant=f"P{frame_index % N_PARTICIPANTS:02d}",
        session=cfg.n_objects,
        trial=(frame_index // N_PARTICIPANTS) % 2 + 1,
        image_w=W,
        image_h=H,
        head_bbox=head,
        objects=objects,
        target_label=labels[target],
        gaze_point=gaze,
        distractor_present=has_distractor,
    )
    return heatmap, dets, record


def default_metrics_config() -> MetricsConfig:
    return MetricsConfig(distractor_label=DISTRACTOR_LABEL)


def run_simulation(
    cfg: SimConfig,
    n_frames: int,
    metrics_cfg: MetricsConfig | None = None,
    overlap_rule: str = "largest",
) -> MetricsReport:
    n_frames = check_positive_int(n_frames, "n_frames")
    if metrics_cfg is None:
        metrics_cfg = default_metrics_config()
    results, records = [], []
    for i in range(n_frames):
        heatmap, dets, rec = synth_frame(cfg, i)
        results.append(evaluate_frame(heatmap, dets, rec, metrics_cfg, overlap_rule))
        records.append(rec)
    return fold_results(results, records, metrics_cfg)


def persist_simulation(cfg: SimConfig, n_frames: int, out_dir) -> Path:
    """Write ``annotations.jsonl``, ``detections.jsonl`` and ``heatmaps/<frame_id>.ghm``."""
    n_frames = check_positive_int(n_frames, "n_frames")
    out_dir = Path(out_dir)
    heat_dir = out_dir / "heatmaps"
    heat_dir.mkdir(parents=True, exist_ok=True)
    ann_lines, det_lines = [], []
    for i in range(n_frames):
        heatmap, dets, rec = synth_frame(cfg, i)
        write_ghm(heatmap, heat_dir / f"{rec.frame_id}.ghm")
        ann_lines.append(record_to_line(rec) + "\n")
        det_lines.append(dumps_line(dets.to_dict()) + "\n")
    atomic_write_text(out_dir / "annotations.jsonl", "".join(ann_lines))
    atomic_write_text(out_dir / "detections.jsonl", "".join(det_lines))
    return out_dir

