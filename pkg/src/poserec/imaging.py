"""Image decoding, color-space conversion and grid segmentation.

Pixels live in ``(height, width, channels)`` uint8 arrays, which is the
row-major sample order ``width * height * channels`` long when flattened.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from .exceptions import (CorruptImage, GridTooFine, ImageNotFound,
                         UnsupportedFormat, ValidationError)

SUPPORTED_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")
_SUPPORTED_FORMATS = {"PNG", "JPEG", "BMP"}

PathLike = Union[str, Path]


class ColorSpace(str, enum.Enum):
    RGB = "rgb"
    HSV = "hsv"
    GRAY = "gray"

    @classmethod
    def parse(cls, value) -> "ColorSpace":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(
                f"unknown color space {value!r}; expected one of "
                f"{[c.value for c in cls]}") from None


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """A decoded 8-bit raster tagged with its color space."""

    pixels: np.ndarray
    color_space: ColorSpace = ColorSpace.RGB

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValidationError(f"pixel array must be HxWxC, got {px.shape}")
        if px.dtype != np.uint8:
            if not np.issubdtype(px.dtype, np.integer) or px.min() < 0 or px.max() > 255:
                raise ValidationError("pixels must be 8-bit samples")
            px = px.astype(np.uint8)
        space = ColorSpace.parse(self.color_space)
        if (px.shape[2] == 1) != (space is ColorSpace.GRAY) or px.shape[2] not in (1, 3):
            raise ValidationError(
                f"{px.shape[2]} channel(s) is inconsistent with color space {space.value}")
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)
        object.__setattr__(self, "color_space", space)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other):
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return (self.color_space is other.color_space
                and self.pixels.shape == other.pixels.shape
                and bool(np.array_equal(self.pixels, other.pixels)))

    def __repr__(self):
        return (f"ImageBuffer({self.width}x{self.height}x{self.channels}, "
                f"{self.color_space.value})")


@dataclass(frozen=True)
class RegionGrid:
    rows: int = 3
    cols: int = 3

    def __post_init__(self):
        for name in ("rows", "cols"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ValidationError(f"grid {name} must be an integer >= 1, got {v!r}")

    @classmethod
    def square(cls, size: int) -> "RegionGrid":
        return cls(size, size)

    @property
    def n_regions(self) -> int:
        return self.rows * self.cols


def load_image(path: PathLike) -> ImageBuffer:
    """Decode a PNG, JPEG or BMP file into an RGB buffer."""
    path = Path(path)
    if not path.is_file():
        raise ImageNotFound(f"no such image file: {path}")
    try:
        with Image.open(path) as im:
            if im.format not in _SUPPORTED_FORMATS:
                raise UnsupportedFormat(f"{path}: unsupported format {im.format}")
            im.load()
            rgb = im.convert("RGB")
    except UnidentifiedImageError as exc:
        if path.suffix.lower() in SUPPORTED_SUFFIXES:
            raise CorruptImage(f"{path}: cannot decode image stream") from exc
        raise UnsupportedFormat(f"{path}: not a supported raster format") from exc
    except (OSError, SyntaxError, ValueError, Image.DecompressionBombError) as exc:
        if isinstance(exc, UnsupportedFormat):
            raise
        raise CorruptImage(f"{path}: {exc}") from exc
    return ImageBuffer(np.asarray(rgb, dtype=np.uint8), ColorSpace.RGB)


def _rgb_to_hsv(px: np.ndarray) -> np.ndarray:
    # Integer arithmetic keeps the half-up rounding exact.
    rgb = px.astype(np.int64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=-1)
    mn = rgb.min(axis=-1)
    delta = mx - mn

    safe_mx = np.where(mx == 0, 1, mx)
    s = np.where(mx == 0, 0, (2 * 255 * delta + safe_mx) // (2 * safe_mx))

    safe_d = np.where(delta == 0, 1, delta)
    # hue numerator in units of delta/6 turns: sector offset * delta + signed difference
    num = np.where(mx == r, g - b, np.where(mx == g, (b - r) + 2 * delta, (r - g) + 4 * delta))
    num = np.where(num < 0, num + 6 * safe_d, num)
    h = (2 * 255 * num + 6 * safe_d) // (12 * safe_d)
    h = np.where(delta == 0, 0, np.minimum(h, 255))
    return np.stack([h, s, mx], axis=-1).astype(np.uint8)


def _hsv_to_rgb(px: np.ndarray) -> np.ndarray:
    hsv = px.astype(np.float64)
    h = hsv[..., 0] * 6.0 / 255.0
    s = hsv[..., 1] / 255.0
    v = hsv[..., 2]
    sector = np.floor(h).astype(np.int64) % 6
    f = h - np.floor(h)
    p = v * (1 - s)
    q = v * (1 - s * f)
    t = v * (1 - s * (1 - f))
    choices_r = [v, q, p, p, t, v]
    choices_g = [t, v, v, q, p, p]
    choices_b = [p, p, t, v, v, q]
    r = np.choose(sector, choices_r)
    g = np.choose(sector, choices_g)
    b = np.choose(sector, choices_b)
    out = np.stack([r, g, b], axis=-1)
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def _rgb_to_gray(px: np.ndarray) -> np.ndarray:
    rgb = px.astype(np.int64)
    y = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return y.astype(np.uint8)[..., None]


def to_color_space(img: ImageBuffer, target) -> ImageBuffer:
    """Convert ``img`` to ``target`` (rgb, hsv or gray).

    HSV uses the hexcone model with hue rescaled from [0, 360) degrees onto
    0..255; gray is the 0.299/0.587/0.114 luma rounded half up.
    """
    target = ColorSpace.parse(target)
    src = img.color_space
    if src is target:
        return img
    if src is ColorSpace.RGB:
        rgb = img.pixels
    elif src is ColorSpace.HSV:
        rgb = _hsv_to_rgb(img.pixels)
    else:
        rgb = np.repeat(img.pixels, 3, axis=2)

    if target is ColorSpace.RGB:
        out = rgb
    elif target is ColorSpace.HSV:
        out = _rgb_to_hsv(rgb)
    else:
        out = _rgb_to_gray(rgb)
    return ImageBuffer(out, target)


def region_bounds(length: int, parts: int) -> List[int]:
    """Floor boundaries splitting ``length`` into ``parts`` spans."""
    return [(i * length) // parts for i in range(parts + 1)]


def segment_regions(img: ImageBuffer, grid: RegionGrid) -> List[ImageBuffer]:
    """Split ``img`` into ``grid.rows * grid.cols`` tiles in row-major order."""
    if grid.rows > img.height or grid.cols > img.width:
        raise GridTooFine(
            f"a {grid.rows}x{grid.cols} grid leaves empty regions in a "
            f"{img.width}x{img.height} image")
    ys = region_bounds(img.height, grid.rows)
    xs = region_bounds(img.width, grid.cols)
    return [
        ImageBuffer(img.pixels[ys[r]:ys[r + 1], xs[c]:xs[c + 1]], img.color_space)
        for r in range(grid.rows)
        for c in range(grid.cols)
    ]


def center_crop_square(img: ImageBuffer) -> ImageBuffer:
    side = min(img.width, img.height)
    top = (img.height - side) // 2
    left = (img.width - side) // 2
    return ImageBuffer(img.pixels[top:top + side, left:left + side], img.color_space)


def resize_area(img: ImageBuffer, width: int, height: int) -> ImageBuffer:
    """Area-average (box filter) resample to ``width`` x ``height``."""
    if (img.width, img.height) == (width, height):
        return img
    px = img.pixels
    pil = Image.fromarray(px[:, :, 0] if img.channels == 1 else px)
    out = pil.resize((width, height), resample=Image.Resampling.BOX)
    return ImageBuffer(np.asarray(out, dtype=np.uint8), img.color_space)
