"""scikit-learn style wrappers so selection and scoring compose with sklearn tooling."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import InvalidArgumentError
from .fusion import OVERLAP_RULES, DetectionSet, select_gazed_object
from .heatmap import CENTROID_MODES
from .metrics import MetricsConfig, accuracy, auc_frame, distance_frame
from .validation import check_choice, check_fraction


def _check_frames(X) -> list:
    frames = list(X)
    for i, item in enumerate(frames):
        if not (isinstance(item, tuple) and len(item) == 2 and isinstance(item[1], DetectionSet)):
            raise InvalidArgumentError(f"X[{i}] must be a (heatmap, DetectionSet) pair")
    return frames


class GazedObjectSelector(BaseEstimator):
    """Predict the label of the gazed object from ``(heatmap, DetectionSet)`` pairs.

    The rule has no trainable state; ``fit`` only validates the
    hyper-parameters and the input. ``predict`` returns an object array of
    labels with ``None`` for frames without a selection.

    Parameters
    ----------
    tau : float, default=0.5
        Hot-region threshold as a fraction of the heatmap peak.
    overlap_rule : {"largest", "smallest"}, default="largest"
        Which IoU wins among detections overlapping the hot region.
    centroid : {"weighted", "uniform"}, default="weighted"
        How the hot-region center is computed for the nearest-center fallback.
    """

    def __init__(self, tau=0.5, overlap_rule="largest", centroid="weighted"):
        self.tau = tau
        self.overlap_rule = overlap_rule
        self.centroid = centroid

    def _check_params(self):
        check_fraction(self.tau, "tau", low_open=True)
        check_choice(self.overlap_rule, "overlap_rule", OVERLAP_RULES)
        check_choice(self.centroid, "centroid", CENTROID_MODES)

    def fit(self, X, y=None):
        self._check_params()
        self.n_frames_seen_ = len(_check_frames(X))
        return self

    def select(self, X):
        check_is_fitted(self, "n_frames_seen_")
        return [
            select_gazed_object(h, d, tau=self.tau, overlap_rule=self.overlap_rule, centroid=self.centroid)
            for h, d in _check_frames(X)
        ]

    def predict(self, X):
        return np.array([s.label for s in self.select(X)], dtype=object)

    def score(self, X, y):
        """Accuracy against a list of FrameRecord ground truths."""
        return accuracy(self.select(X), list(y))


class HeatmapScorer(BaseEstimator):
    """Per-frame AUC and normalized peak distance for attention heatmaps.

    ``transform`` maps ``(heatmap, FrameRecord)`` pairs to an ``(n, 2)``
    array of ``[auc, distance]``.
    """

    def __init__(self, grid_w=64, grid_h=64, sigma=3.0, mask_threshold=0.5):
        self.grid_w = grid_w
        self.grid_h = grid_h
        self.sigma = sigma
        self.mask_threshold = mask_threshold

    def fit(self, X=None, y=None):
        self.config_ = MetricsConfig(
            grid_w=self.grid_w, grid_h=self.grid_h, sigma=self.sigma, mask_threshold=self.mask_threshold
        )
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        rows = []
        for h, rec in X:
            gt = rec.gaze_point_normalized
            rows.append([auc_frame(h, gt, self.config_), distance_frame(h, gt, rec.image_w, rec.image_h)])
        return np.asarray(rows, dtype=np.float64).reshape(-1, 2)

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)
