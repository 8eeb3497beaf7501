"""Persistent histogram index and top-K similarity queries."""
from __future__ import annotations

import json
import logging
import os
import shutil
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import as_image, check_bins, check_grid, check_positive_int
from .exceptions import (CorruptIndex, EmptyDataset, IncompatibleFeatures, IoError,
                         PoseRecError, ValidationError, VersionMismatch)
from .histogram import HistogramFeature, compute_histogram, feature_distance_ready
from .imaging import (SUPPORTED_SUFFIXES, ColorSpace, ImageBuffer, RegionGrid,
                      load_image, to_color_space)
from .metrics import METRICS, MetricKind, Score

log = logging.getLogger(__name__)

INDEX_VERSION = 1
DEFAULT_K = 12


@dataclass(frozen=True)
class IndexConfig:
    bins: int = 32
    color_space: ColorSpace = ColorSpace.HSV
    grid_rows: int = 3
    grid_cols: int = 3

    def __post_init__(self):
        check_bins(self.bins)
        object.__setattr__(self, "color_space", ColorSpace.parse(self.color_space))
        RegionGrid(self.grid_rows, self.grid_cols)

    @property
    def grid(self) -> RegionGrid:
        return RegionGrid(self.grid_rows, self.grid_cols)

    @property
    def channels(self) -> int:
        return 1 if self.color_space is ColorSpace.GRAY else 3

    def feature(self, img: ImageBuffer) -> HistogramFeature:
        return compute_histogram(to_color_space(img, self.color_space), self.grid, self.bins)

    def to_json(self) -> dict:
        return {"bins": self.bins, "color_space": self.color_space.value,
                "grid_rows": self.grid_rows, "grid_cols": self.grid_cols}


@dataclass(frozen=True)
class IndexEntry:
    id: str
    path: str
    width: int
    height: int
    feature: HistogramFeature


@dataclass
class ImageIndex:
    config: IndexConfig
    entries: List[IndexEntry]
    version: int = INDEX_VERSION
    # files that failed to decode during build_index: (id, reason)
    skipped: List[Tuple[str, str]] = field(default_factory=list, compare=False)

    def __len__(self):
        return len(self.entries)

    @property
    def ids(self) -> List[str]:
        return [e.id for e in self.entries]

    def validate(self):
        """Raise ``CorruptIndex`` if any structural invariant is broken."""
        expected = (self.config.grid.n_regions, self.config.channels, self.config.bins)
        seen = None
        for e in self.entries:
            if seen is not None and not seen < e.id.encode("utf-8"):
                raise CorruptIndex(f"entries not strictly sorted by id at {e.id!r}")
            seen = e.id.encode("utf-8")
            if e.feature.shape != expected:
                raise CorruptIndex(f"entry {e.id!r} has feature shape {e.feature.shape}, "
                                   f"config implies {expected}")
            if e.width < 1 or e.height < 1:
                raise CorruptIndex(f"entry {e.id!r} has invalid dimensions")
            try:
                e.feature.check_invariants()
            except ValueError as exc:
                raise CorruptIndex(f"entry {e.id!r}: {exc}") from None


@dataclass(frozen=True)
class RankedResult:
    metric: MetricKind
    items: List[Tuple[str, float]]
    k: int

    @property
    def ids(self) -> List[str]:
        return [i for i, _ in self.items]


def _id_key(entry_id: str) -> bytes:
    return entry_id.encode("utf-8")


def iter_image_files(root: Path) -> List[Path]:
    return sorted(p for p in root.rglob("*")
                  if p.is_file() and p.suffix.lower() in SUPPORTED_SUFFIXES)


def _index_one(path: Path, root: Path, config: IndexConfig):
    entry_id = path.relative_to(root).as_posix()
    try:
        img = load_image(path)
    except IoError as exc:
        return entry_id, exc
    return IndexEntry(id=entry_id, path=str(path), width=img.width, height=img.height,
                      feature=config.feature(img)), None


def build_index(directory, config: Optional[IndexConfig] = None, n_jobs: int = 1) -> ImageIndex:
    """Histogram every decodable image under ``directory`` (recursively).

    Files that fail to decode are logged and listed in ``ImageIndex.skipped``
    rather than aborting the build.
    """
    config = config or IndexConfig()
    root = Path(directory)
    if not root.is_dir():
        raise IoError(f"not a directory: {root}")
    files = iter_image_files(root)
    if n_jobs == 1:
        results = [_index_one(p, root, config) for p in files]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as pool:
            results = list(pool.map(lambda p: _index_one(p, root, config), files))

    entries, skipped = [], []
    for item, err in results:
        if err is None:
            entries.append(item)
        else:
            log.warning("skipping %s: %s", item, err)
            skipped.append((item, str(err)))
    if not entries:
        raise EmptyDataset(f"no decodable images under {root}")
    entries.sort(key=lambda e: _id_key(e.id))
    return ImageIndex(config=config, entries=entries, skipped=skipped)


def _dump_index(idx: ImageIndex) -> str:
    doc = {
        "version": idx.version,
        "config": idx.config.to_json(),
        "entries": [
            {"id": e.id, "path": e.path, "width": e.width, "height": e.height,
             "feature": [float(v) for v in e.feature.values]}
            for e in idx.entries
        ],
    }
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":")) + "\n"


def _atomic_write(path: Path, data: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def save_index(idx: ImageIndex, path) -> None:
    idx.validate()
    try:
        _atomic_write(Path(path), _dump_index(idx))
    except OSError as exc:
        raise IoError(f"cannot write index {path}: {exc}") from exc


def load_index(path) -> ImageIndex:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read index {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptIndex(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or "version" not in doc:
        raise CorruptIndex(f"{path}: missing version field")
    if doc["version"] != INDEX_VERSION:
        raise VersionMismatch(f"{path}: index version {doc['version']!r}, "
                              f"this build reads version {INDEX_VERSION}")
    try:
        cfg = doc["config"]
        config = IndexConfig(bins=cfg["bins"], color_space=cfg["color_space"],
                             grid_rows=cfg["grid_rows"], grid_cols=cfg["grid_cols"])
        n_regions, channels = config.grid.n_regions, config.channels
        entries = []
        ids = set()
        for raw in doc["entries"]:
            if raw["id"] in ids:
                raise CorruptIndex(f"duplicate id {raw['id']!r}")
            ids.add(raw["id"])
            feature = HistogramFeature(bins=config.bins, channels=channels, regions=n_regions,
                                       values=np.array(raw["feature"], dtype=np.float64))
            entries.append(IndexEntry(id=str(raw["id"]), path=str(raw["path"]),
                                      width=int(raw["width"]), height=int(raw["height"]),
                                      feature=feature))
    except CorruptIndex:
        raise
    except (KeyError, TypeError, ValueError, PoseRecError) as exc:
        raise CorruptIndex(f"{path}: malformed index ({exc})") from None
    idx = ImageIndex(config=config, entries=entries)
    idx.validate()
    return idx


def score_entries(idx: ImageIndex, query: HistogramFeature, metric) -> List[Score]:
    metric = MetricKind.parse(metric)
    fn = METRICS[metric]
    return [fn(query, e.feature) for e in idx.entries]


def query_top_k(idx: ImageIndex, query, metric="bhattacharyya", k: int = DEFAULT_K) -> RankedResult:
    """Rank every entry against ``query`` and keep the best ``k``.

    Ordering follows the metric's polarity; exact ties go to the smaller id.
    ``query`` may be an ``ImageBuffer``, path, array or precomputed feature.
    """
    metric = MetricKind.parse(metric)
    k = check_positive_int(k, "k")
    if not idx.entries:
        raise EmptyDataset("index has no entries")
    if isinstance(query, HistogramFeature):
        feature = query
    else:
        feature = idx.config.feature(as_image(query))
    if not feature_distance_ready(feature, idx.entries[0].feature):
        raise IncompatibleFeatures("query feature does not match index configuration")

    scores = score_entries(idx, feature, metric)
    order = sorted(range(len(scores)),
                   key=lambda i: (scores[i].sort_key(), _id_key(idx.entries[i].id)))
    items = [(idx.entries[i].id, scores[i].value) for i in order[:k]]
    return RankedResult(metric=metric, items=items, k=k)


def export_results(res: RankedResult, idx: ImageIndex, out_dir) -> Path:
    """Copy ranked images into ``out_dir`` as ``rank_NN_<name>`` plus ``results.json``.

    Stale ``rank_*`` files from an earlier run are removed; each copy is
    written to a temporary name and renamed into place.
    """
    out = Path(out_dir)
    by_id = {e.id: e for e in idx.entries}
    width = max(2, len(str(len(res.items))))
    try:
        out.mkdir(parents=True, exist_ok=True)
        wanted = {}
        manifest_items = []
        for rank, (entry_id, score) in enumerate(res.items, start=1):
            entry = by_id[entry_id]
            name = f"rank_{rank:0{width}d}_{Path(entry_id).name}"
            wanted[name] = entry.path
            manifest_items.append({"rank": rank, "id": entry_id, "score": score,
                                   "source_path": entry.path})
        for name, src in wanted.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out)
            os.close(fd)
            try:
                shutil.copyfile(src, tmp)
                os.replace(tmp, out / name)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
        for stale in out.glob("rank_*"):
            if stale.name not in wanted and stale.is_file():
                stale.unlink()
        manifest = {"metric": res.metric.value, "k": res.k, "items": manifest_items}
        _atomic_write(out / "results.json", json.dumps(manifest, indent=2, ensure_ascii=False) + "\n")
    except OSError as exc:
        raise IoError(f"cannot export results to {out}: {exc}") from exc
    return out


class HistogramRecommender(BaseEstimator):
    """Content-based image recommender over color histograms.

    ``fit`` indexes a corpus (a directory path, or a sequence of image
    paths / arrays); ``kneighbors`` and ``recommend`` return the most
    similar corpus images for new queries.

    Parameters
    ----------
    n_neighbors : int, default=12
    metric : str, default="bhattacharyya"
        One of correlation, chi-squared, intersection, bhattacharyya.
    bins, color_space, grid
        Feature settings, see ``ColorHistogramTransformer``.
    n_jobs : int, default=1
        Worker threads used to histogram a directory corpus.
    """

    def __init__(self, n_neighbors=DEFAULT_K, metric="bhattacharyya", bins=32,
                 color_space="hsv", grid=3, n_jobs=1):
        self.n_neighbors = n_neighbors
        self.metric = metric
        self.bins = bins
        self.color_space = color_space
        self.grid = grid
        self.n_jobs = n_jobs

    def _config(self) -> IndexConfig:
        g = check_grid(self.grid)
        return IndexConfig(bins=self.bins, color_space=self.color_space,
                           grid_rows=g.rows, grid_cols=g.cols)

    def fit(self, X, y=None, ids: Optional[Sequence[str]] = None):
        check_positive_int(self.n_neighbors, "n_neighbors")
        MetricKind.parse(self.metric)
        config = self._config()
        if isinstance(X, (str, Path)):
            self.index_ = build_index(X, config, n_jobs=self.n_jobs)
            return self
        X = list(X)
        if ids is None:
            ids = [Path(x).as_posix() if isinstance(x, (str, Path)) else f"{i:06d}"
                   for i, x in enumerate(X)]
        if len(ids) != len(X) or len(set(ids)) != len(ids):
            raise ValidationError("ids must be unique and match X in length")
        if not X:
            raise EmptyDataset("cannot fit on an empty corpus")
        entries = []
        for entry_id, x in zip(ids, X):
            img = as_image(x)
            entries.append(IndexEntry(id=str(entry_id), path=str(x) if isinstance(x, (str, Path)) else "",
                                      width=img.width, height=img.height,
                                      feature=config.feature(img)))
        entries.sort(key=lambda e: _id_key(e.id))
        self.index_ = ImageIndex(config=config, entries=entries)
        return self

    @classmethod
    def from_index(cls, idx: ImageIndex, **params) -> "HistogramRecommender":
        c = idx.config
        est = cls(bins=c.bins, color_space=c.color_space.value,
                  grid=(c.grid_rows, c.grid_cols), **params)
        est.index_ = idx
        return est

    def _check_fitted(self):
        if not hasattr(self, "index_"):
            from sklearn.exceptions import NotFittedError
            raise NotFittedError("HistogramRecommender is not fitted yet; call fit first")

    def recommend(self, query, n_neighbors=None) -> RankedResult:
        self._check_fitted()
        return query_top_k(self.index_, query, self.metric, n_neighbors or self.n_neighbors)

    def kneighbors(self, X, n_neighbors=None, return_distance=True):
        """Positions into ``index_.entries`` of the best matches for each query.

        Scores are returned in the metric's own units, so for similarity
        metrics larger is better.
        """
        self._check_fitted()
        k = min(n_neighbors or self.n_neighbors, len(self.index_))
        pos = {e.id: i for i, e in enumerate(self.index_.entries)}
        scores = np.empty((len(X), k))
        indices = np.empty((len(X), k), dtype=np.intp)
        for row, q in enumerate(X):
            res = self.recommend(q, k)
            indices[row] = [pos[i] for i in res.ids]
            scores[row] = [s for _, s in res.items]
        return (scores, indices) if return_distance else indices

    def predict(self, X):
        """Recommended ids for each query, best first."""
        self._check_fitted()
        return [self.recommend(q).ids for q in X]
