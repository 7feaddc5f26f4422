"""Input validation helpers shared by the public API and the estimator."""
from __future__ import annotations

import math
from numbers import Real

import numpy as np

from .exceptions import InvalidArgumentError, InvalidDataError


def check_finite_real(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise InvalidArgumentError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise InvalidArgumentError(f"{name} must be finite, got {value!r}")
    return value


def check_positive(value, name: str) -> float:
    value = check_finite_real(value, name)
    if value <= 0:
        raise InvalidArgumentError(f"{name} must be > 0, got {value!r}")
    return value


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
    if value < 1:
        raise InvalidArgumentError(f"{name} must be >= 1, got {value!r}")
    return int(value)


def check_fraction(value, name: str, *, low_open: bool = False, high_open: bool = False) -> float:
    """Check that ``value`` lies in [0, 1], optionally excluding either end."""
    value = check_finite_real(value, name)
    lo_ok = value > 0 if low_open else value >= 0
    hi_ok = value < 1 if high_open else value <= 1
    if not (lo_ok and hi_ok):
        lo = "(" if low_open else "["
        hi = ")" if high_open else "]"
        raise InvalidArgumentError(f"{name} must be in {lo}0, 1{hi}, got {value!r}")
    return value


def check_choice(value, name: str, choices) -> str:
    if value not in choices:
        raise InvalidArgumentError(f"{name} must be one of {sorted(choices)}, got {value!r}")
    return value


def check_grid(values, *, name: str = "heatmap", unit_range: bool = True) -> np.ndarray:
    """Return ``values`` as a float64 2-D array after checking its contents.

    With ``unit_range`` every cell must lie in [0, 1]; otherwise cells only
    need to be non-negative (raw, un-normalized scores).
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidDataError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidDataError(f"{name} must have at least one cell, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidDataError(f"{name} contains non-finite values")
    if np.any(arr < 0):
        raise InvalidDataError(f"{name} contains negative values")
    if unit_range and np.any(arr > 1):
        raise InvalidDataError(f"{name} values must lie in [0, 1], max is {arr.max()!r}")
    return arr
