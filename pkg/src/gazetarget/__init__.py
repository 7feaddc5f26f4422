"""Select the object a person is looking at from an attention heatmap and object detections,
and evaluate heatmaps and selections against annotated frames."""

from .dataset import FrameRecord, SceneObject, SplitSpec, dataset_summary, load_records, split_by_participant
from .estimator import GazedObjectSelector, HeatmapScorer
from .exceptions import (
    FormatError,
    GazeTargetError,
    InvalidArgumentError,
    InvalidConfigurationError,
    InvalidDataError,
    NoRegionError,
    PairingError,
    ParseError,
    PlacementError,
    RecordValidationError,
)
from .fusion import Detection, DetectionSet, GazeSelection, select_gazed_object
from .geometry import BoundingBox, Point, center, iou, normalized_distance
from .heatmap import (
    Heatmap,
    HotRegion,
    argmax,
    gaussian_mask,
    hottest_region,
    normalize_max,
    read_ghm,
    resample,
    write_ghm,
)
from .metrics import (
    MetricsConfig,
    MetricsReport,
    accuracy,
    auc_frame,
    breakdown,
    density_map,
    distance_frame,
    distractor_error_rate,
)
from .simulator import SimConfig, run_simulation, synth_frame

__version__ = "0.1.0"
