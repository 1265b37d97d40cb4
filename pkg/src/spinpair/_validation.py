"""Small argument checkers shared across the package."""

import numpy as np

from .exceptions import InputError


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise InputError(f"{name} must be finite and > 0, got {value!r}")
    return value


def check_nonnegative(value, name):
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise InputError(f"{name} must be finite and >= 0, got {value!r}")
    return value


def check_probability(value, name):
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise InputError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def check_times(times, name="times"):
    """Return ``times`` as a 1-D float array, sorted ascending and nonnegative."""
    arr = np.atleast_1d(np.asarray(times, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise InputError(f"{name} must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite")
    if np.any(arr < 0):
        raise InputError(f"{name} must be nonnegative")
    if np.any(np.diff(arr) < 0):
        raise InputError(f"{name} must be sorted ascending")
    return arr


def check_populations(populations, n_times=None, name="populations"):
    arr = np.asarray(populations, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise InputError(f"{name} must have shape (n, 3), got {arr.shape}")
    if n_times is not None and arr.shape[0] != n_times:
        raise InputError(f"{name} has {arr.shape[0]} rows, expected {n_times}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite")
    return arr
