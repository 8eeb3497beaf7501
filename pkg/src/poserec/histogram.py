"""Per-region, per-channel color histograms used as the retrieval feature."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import as_image, check_bins, check_grid
from .exceptions import GridTooFine, ValidationError
from .imaging import ColorSpace, ImageBuffer, RegionGrid, region_bounds, to_color_space

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HistogramFeature:
    """L1-normalized histogram vector ordered region, then channel, then bin."""

    bins: int
    channels: int
    regions: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).ravel()
        if v.size != self.regions * self.channels * self.bins:
            raise ValidationError(
                f"feature length {v.size} != regions*channels*bins "
                f"({self.regions}*{self.channels}*{self.bins})")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_vector(cls, values) -> "HistogramFeature":
        """Wrap a bare vector as a single-region, single-channel feature."""
        v = np.asarray(values, dtype=np.float64).ravel()
        return cls(bins=v.size, channels=1, regions=1, values=v)

    @property
    def shape(self):
        return (self.regions, self.channels, self.bins)

    def check_invariants(self, tol=NORMALIZATION_TOL):
        """Raise ``ValueError`` if the vector is not a valid normalized histogram."""
        v = self.values
        if not np.all(np.isfinite(v)):
            raise ValueError("feature contains non-finite values")
        if np.any(v < 0):
            raise ValueError("feature contains negative values")
        total = float(np.sum(v))
        if abs(total - 1.0) > tol:
            raise ValueError(f"feature sums to {total!r}, expected 1")

    def __eq__(self, other):
        if not isinstance(other, HistogramFeature):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.values, other.values))

    def __len__(self):
        return self.values.size


def compute_histogram(img: ImageBuffer, grid: RegionGrid = RegionGrid(), bins: int = 32) -> HistogramFeature:
    """Histogram every channel of every grid region of ``img``.

    Sample value ``v`` lands in bin ``v * bins // 256``. The concatenated
    counts are divided by ``width * height * channels`` so the whole vector
    sums to one, weighting regions by their pixel count.
    """
    bins = check_bins(bins)
    grid = check_grid(grid)
    if grid.rows > img.height or grid.cols > img.width:
        raise GridTooFine(
            f"a {grid.rows}x{grid.cols} grid leaves empty regions in a "
            f"{img.width}x{img.height} image")
    h, w, c = img.pixels.shape
    row_region = np.searchsorted(region_bounds(h, grid.rows), np.arange(h), side="right") - 1
    col_region = np.searchsorted(region_bounds(w, grid.cols), np.arange(w), side="right") - 1
    region = row_region[:, None] * grid.cols + col_region[None, :]

    sample_bin = img.pixels.astype(np.int64) * bins // 256
    flat = (region[:, :, None] * c + np.arange(c)[None, None, :]) * bins + sample_bin
    n = grid.n_regions * c * bins
    counts = np.bincount(flat.ravel(), minlength=n)
    return HistogramFeature(bins=bins, channels=c, regions=grid.n_regions,
                            values=counts / float(h * w * c))


def feature_distance_ready(a: HistogramFeature, b: HistogramFeature) -> bool:
    """True when two features can be compared bin by bin."""
    return (a.bins == b.bins and a.channels == b.channels and a.regions == b.regions
            and a.values.size == b.values.size)


class ColorHistogramTransformer(TransformerMixin, BaseEstimator):
    """Map images to histogram feature rows.

    Parameters
    ----------
    bins : int, default=32
        Bins per channel, between 2 and 256.
    color_space : {"hsv", "rgb", "gray"}, default="hsv"
        Space the images are converted to before binning.
    grid : int or (int, int), default=3
        Region grid; an int ``G`` means ``G x G`` and ``1`` histograms the
        whole image.

    ``X`` may be a sequence of file paths, ``ImageBuffer`` objects or uint8
    arrays. The transformer is stateless; ``fit`` only validates parameters.
    """

    def __init__(self, bins=32, color_space="hsv", grid=3):
        self.bins = bins
        self.color_space = color_space
        self.grid = grid

    def fit(self, X=None, y=None):
        check_bins(self.bins)
        ColorSpace.parse(self.color_space)
        self.grid_ = check_grid(self.grid)
        self.n_features_out_ = self.grid_.n_regions * self._channels() * self.bins
        return self

    def _channels(self):
        return 1 if ColorSpace.parse(self.color_space) is ColorSpace.GRAY else 3

    def feature(self, image) -> HistogramFeature:
        img = to_color_space(as_image(image), self.color_space)
        return compute_histogram(img, check_grid(self.grid), self.bins)

    def transform(self, X):
        if not hasattr(self, "grid_"):
            self.fit()
        rows = [self.feature(x).values for x in X]
        if not rows:
            return np.empty((0, self.n_features_out_))
        return np.vstack(rows)
