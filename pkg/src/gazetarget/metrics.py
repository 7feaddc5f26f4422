"""Evaluation metrics for attention heatmaps and gazed-object selection."""
from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .exceptions import InvalidArgumentError, InvalidConfigurationError, PairingError
from .geometry import Point, normalized_distance
from .heatmap import CENTROID_MODES, Heatmap, argmax, as_heatmap, cell_center, gaussian_mask, resample
from .validation import check_choice, check_fraction, check_positive, check_positive_int

AUC_AGGREGATIONS = ("mean", "pooled")


@dataclass(frozen=True)
class MetricsConfig:
    grid_w: int = 64
    grid_h: int = 64
    sigma: float = 3.0
    mask_threshold: float = 0.5
    tau: float = 0.5
    auc_aggregation: str = "mean"
    centroid: str = "weighted"
    distractor_label: Optional[str] = None

    def __post_init__(self):
        check_positive_int(self.grid_w, "grid_w")
        check_positive_int(self.grid_h, "grid_h")
        check_positive(self.sigma, "sigma")
        check_fraction(self.mask_threshold, "mask_threshold", low_open=True, high_open=True)
        check_fraction(self.tau, "tau", low_open=True)
        check_choice(self.auc_aggregation, "auc_aggregation", AUC_AGGREGATIONS)
        check_choice(self.centroid, "centroid", CENTROID_MODES)


def roc_auc(scores, labels) -> float:
    """Trapezoidal area under the ROC curve swept over every distinct score.

    Tied scores move the curve diagonally, which is what makes a constant
    prediction score exactly 0.5.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels, dtype=bool).ravel()
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InvalidConfigurationError(
            f"ROC needs both classes, got {n_pos} positive and {n_neg} negative cells"
        )
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    last_of_run = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    tps = np.cumsum(y)[last_of_run]
    fps = last_of_run + 1 - tps
    tpr = np.r_[0, tps] / n_pos
    fpr = np.r_[0, fps] / n_neg
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1])) / 2.0)


def ground_truth_mask(gt_point: Point, cfg: MetricsConfig) -> np.ndarray:
    """Binary target cells: the Gaussian around the gaze point cut at ``mask_threshold`` of its peak."""
    c = Point(gt_point.x * cfg.grid_w, gt_point.y * cfg.grid_h)
    mask = gaussian_mask(c, cfg.sigma, cfg.grid_w, cfg.grid_h).values
    return mask >= cfg.mask_threshold


def auc_inputs(pred, gt_point: Point, cfg: MetricsConfig) -> tuple[np.ndarray, np.ndarray]:
    if not (0 <= gt_point.x <= 1 and 0 <= gt_point.y <= 1):
        raise InvalidConfigurationError(f"gt_point {gt_point.as_list()} is outside the unit square")
    scores = resample(as_heatmap(pred), cfg.grid_w, cfg.grid_h).values
    labels = ground_truth_mask(gt_point, cfg)
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.size:
        raise InvalidConfigurationError(
            f"ground-truth mask has {n_pos} of {labels.size} positive cells; "
            f"sigma={cfg.sigma} / mask_threshold={cfg.mask_threshold} do not suit a "
            f"{cfg.grid_w}x{cfg.grid_h} grid"
        )
    return scores, labels


def auc_frame(pred, gt_point: Point, cfg: MetricsConfig = MetricsConfig()) -> float:
    """AUC of the prediction against the thresholded Gaussian mask at ``gt_point`` (normalized coords)."""
    scores, labels = auc_inputs(pred, gt_point, cfg)
    return roc_auc(scores, labels)


def distance_frame(pred, gt_point: Point, image_w: float, image_h: float) -> float:
    h = as_heatmap(pred)
    peak = cell_center(argmax(h))
    # map the cell center and the normalized target into image pixels
    p = Point(peak.x / h.width * image_w, peak.y / h.height * image_h)
    q = Point(gt_point.x * image_w, gt_point.y * image_h)
    return normalized_distance(p, q, image_w, image_h)


def _paired(selections, truths):
    selections = list(selections)
    truths = list(truths)
    if len(selections) != len(truths):
        raise PairingError(f"{len(selections)} selections but {len(truths)} ground-truth records")
    for s, t in zip(selections, truths):
        if s.frame_id != t.frame_id:
            raise PairingError(f"frame_id mismatch: selection {s.frame_id!r} vs record {t.frame_id!r}")
    return list(zip(selections, truths))


def _is_hit(sel, rec) -> bool:
    # a frame with no selection is a false negative
    return sel.rule_fired != "none" and sel.label == rec.target_label


def accuracy(selections, truths) -> float:
    pairs = _paired(selections, truths)
    if not pairs:
        return 0.0
    return sum(_is_hit(s, t) for s, t in pairs) / len(pairs)


def _grouped(pairs, key):
    hits = defaultdict(int)
    totals = defaultdict(int)
    for s, t in pairs:
        k = key(t)
        totals[k] += 1
        hits[k] += _is_hit(s, t)
    return {k: hits[k] / totals[k] for k in sorted(totals)}, dict(sorted(totals.items()))


def breakdown(selections, truths) -> tuple[dict, dict]:
    """Accuracy per ground-truth target label and per session."""
    pairs = _paired(selections, truths)
    per_object, _ = _grouped(pairs, lambda t: t.target_label)
    per_session, _ = _grouped(pairs, lambda t: t.session)
    return per_object, per_session


def distractor_error_rate(selections, truths, distractor_label: str) -> Optional[float]:
    """Share of distractor-present frames in which the distractor was selected; None if there are none."""
    pairs = [(s, t) for s, t in _paired(selections, truths) if t.distractor_present]
    if not pairs:
        return None
    return sum(s.rule_fired != "none" and s.label == distractor_label for s, _ in pairs) / len(pairs)


def density_map(points, grid_w: int, grid_h: int) -> Heatmap:
    grid_w = check_positive_int(grid_w, "grid_w")
    grid_h = check_positive_int(grid_h, "grid_h")
    counts = np.zeros((grid_h, grid_w), dtype=np.float64)
    for p in points:
        if not (0 <= p.x <= 1 and 0 <= p.y <= 1):
            raise InvalidArgumentError(f"point {p.as_list()} is outside the unit square")
        col = min(int(p.x * grid_w), grid_w - 1)
        row = min(int(p.y * grid_h), grid_h - 1)
        counts[row, col] += 1
    peak = counts.max()
    return Heatmap(counts / peak if peak > 0 else counts)


@dataclass
class MetricsReport:
    frame_count: int
    auc_mean: Optional[float]
    auc_std: Optional[float]
    l2_mean: Optional[float]
    l2_std: Optional[float]
    accuracy_overall: float
    accuracy_per_object: dict
    accuracy_per_session: dict
    distractor_error_rate: Optional[float]
    auc_aggregation: str = "mean"
    frames_per_object: dict = field(default_factory=dict)
    frames_per_session: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["accuracy_per_session"] = {str(k): v for k, v in self.accuracy_per_session.items()}
        d["frames_per_session"] = {str(k): v for k, v in self.frames_per_session.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> MetricsReport:
        d = {f.name: d[f.name] for f in fields(cls) if f.name in d}
        for key in ("accuracy_per_session", "frames_per_session"):
            if key in d:
                d[key] = {int(k): v for k, v in d[key].items()}
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def per_object_csv(self) -> str:
        return _csv("label", self.accuracy_per_object, self.frames_per_object)

    def per_session_csv(self) -> str:
        return _csv("session", self.accuracy_per_session, self.frames_per_session)


def _csv(key_name, acc, counts) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([key_name, "accuracy", "frames"])
    for k, v in acc.items():
        writer.writerow([k, repr(v), counts.get(k, "")])
    return buf.getvalue()


def _mean_std(values):
    if not values:
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def build_report(
    selections,
    truths,
    aucs,
    distances,
    cfg: MetricsConfig = MetricsConfig(),
    pooled_auc: Optional[float] = None,
) -> MetricsReport:
    """Fold per-frame results (already in frame_id order) into a report."""
    pairs = _paired(selections, truths)
    sels = [s for s, _ in pairs]
    recs = [t for _, t in pairs]
    per_object, obj_counts = _grouped(pairs, lambda t: t.target_label)
    per_session, sess_counts = _grouped(pairs, lambda t: t.session)
    if cfg.auc_aggregation == "pooled":
        auc_mean, auc_std = pooled_auc, None
    else:
        auc_mean, auc_std = _mean_std(list(aucs))
    l2_mean, l2_std = _mean_std(list(distances))
    der = None
    if cfg.distractor_label is not None:
        der = distractor_error_rate(sels, recs, cfg.distractor_label)
    return MetricsReport(
        frame_count=len(pairs),
        auc_mean=auc_mean,
        auc_std=auc_std,
        l2_mean=l2_mean,
        l2_std=l2_std,
        accuracy_overall=accuracy(sels, recs),
        accuracy_per_object=per_object,
        accuracy_per_session=per_session,
        distractor_error_rate=der,
        auc_aggregation=cfg.auc_aggregation,
        frames_per_object=obj_counts,
        frames_per_session=sess_counts,
    )


def summarize_splits(reports) -> dict:
    """Mean and standard deviation of headline numbers across independent splits."""
    out = {}
    for key in ("auc_mean", "l2_mean", "accuracy_overall", "distractor_error_rate"):
        vals = [getattr(r, key) for r in reports if getattr(r, key) is not None]
        mean, std = _mean_std(vals)
        out[key] = {"mean": mean, "std": std, "n": len(vals)}
    return out

