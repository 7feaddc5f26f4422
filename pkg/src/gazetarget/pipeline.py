"""Per-frame evaluation and the ordered fold into a metrics report."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fusion import GazeSelection, select_gazed_object
from .heatmap import read_ghm
from .metrics import MetricsConfig, MetricsReport, auc_inputs, build_report, distance_frame, roc_auc


@dataclass(frozen=True)
class FrameResult:
    selection: GazeSelection
    auc: float
    distance: float
    # kept only for pooled AUC
    scores: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None


def evaluate_frame(heatmap, detections, record, cfg: MetricsConfig, overlap_rule: str = "largest") -> FrameResult:
    selection = select_gazed_object(
        heatmap, detections, tau=cfg.tau, overlap_rule=overlap_rule, centroid=cfg.centroid
    )
    gt = record.gaze_point_normalized
    scores, labels = auc_inputs(heatmap, gt, cfg)
    auc = roc_auc(scores, labels)
    dist = distance_frame(heatmap, gt, record.image_w, record.image_h)
    if cfg.auc_aggregation == "pooled":
        return FrameResult(selection, auc, dist, scores.ravel(), labels.ravel())
    return FrameResult(selection, auc, dist)


def fold_results(results, records, cfg: MetricsConfig) -> MetricsReport:
    results = list(results)
    records = list(records)
    pooled = None
    if cfg.auc_aggregation == "pooled" and results:
        pooled = roc_auc(
            np.concatenate([r.scores for r in results]),
            np.concatenate([r.labels for r in results]),
        )
    return build_report(
        [r.selection for r in results],
        records,
        [r.auc for r in results],
        [r.distance for r in results],
        cfg,
        pooled_auc=pooled,
    )


def _evaluate_bundle(args):
    heatmap_path, detections, record, cfg, overlap_rule = args
    return evaluate_frame(read_ghm(heatmap_path), detections, record, cfg, overlap_rule)


def evaluate_bundles(bundles, cfg: MetricsConfig, overlap_rule: str = "largest", jobs: int = 1) -> MetricsReport:
    """Evaluate ``(heatmap_path, DetectionSet, FrameRecord)`` bundles.

    Bundles are sorted by frame_id first; with ``jobs > 1`` frames run in a
    process pool but are folded in that same order, so the report does not
    depend on the worker count.
    """
    bundles = sorted(bundles, key=lambda b: b[2].frame_id)
    tasks = [(path, dets, rec, cfg, overlap_rule) for path, dets, rec in bundles]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate_bundle, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_evaluate_bundle(t) for t in tasks]
    return fold_results(results, [b[2] for b in bundles], cfg)
