"""Argument coercion and checks shared by the estimators and the CLI."""
from __future__ import annotations

import numbers
from pathlib import Path

import numpy as np

from .exceptions import InvalidBinCount, ValidationError
from .imaging import ColorSpace, ImageBuffer, RegionGrid, load_image


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ValidationError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_bins(bins):
    if isinstance(bins, bool) or not isinstance(bins, numbers.Integral) or not 2 <= bins <= 256:
        raise InvalidBinCount(f"bins must be an integer in [2, 256], got {bins!r}")
    return int(bins)


def check_grid(grid) -> RegionGrid:
    """Accept ``RegionGrid``, an int G (GxG) or a ``(rows, cols)`` pair."""
    if isinstance(grid, RegionGrid):
        return grid
    if isinstance(grid, numbers.Integral) and not isinstance(grid, bool):
        return RegionGrid(int(grid), int(grid))
    try:
        rows, cols = grid
    except (TypeError, ValueError):
        raise ValidationError(f"cannot interpret {grid!r} as a region grid") from None
    return RegionGrid(rows, cols)


def as_image(obj) -> ImageBuffer:
    """Coerce a path, ``ImageBuffer`` or uint8 array into an ``ImageBuffer``.

    2-D arrays are read as grayscale, ``HxWx3`` arrays as RGB.
    """
    if isinstance(obj, ImageBuffer):
        return obj
    if isinstance(obj, (str, Path)):
        return load_image(obj)
    arr = np.asarray(obj)
    if arr.ndim == 2 or (arr.ndim == 3 and arr.shape[2] == 1):
        return ImageBuffer(arr, ColorSpace.GRAY)
    return ImageBuffer(arr, ColorSpace.RGB)
