"""Splitting the recommendations into two training sets and the A x B schedule."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from ..exceptions import IoError, ValidationError, WrongCardinality

SPLIT_SIZE = 6
SPLIT_VERSION = 1


@dataclass(frozen=True)
class SplitDatasets:
    set_a: Tuple[str, ...]
    set_b: Tuple[str, ...]
    seed: int
    # id -> image file; ids double as paths when absent
    paths: Dict[str, str] = field(default_factory=dict, compare=False)

    def path_of(self, image_id: str) -> str:
        return self.paths.get(image_id, image_id)


def split_datasets(ids: Sequence[str], seed: int = 0,
                   paths: Dict[str, str] = None) -> SplitDatasets:
    """Shuffle 12 distinct ids with ``seed``; the first six form set A."""
    ids = list(ids)
    if len(ids) != 2 * SPLIT_SIZE or len(set(ids)) != len(ids):
        raise WrongCardinality(
            f"split needs exactly {2 * SPLIT_SIZE} distinct image ids, got {len(ids)}"
            + ("" if len(set(ids)) == len(ids) else " (with duplicates)"))
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    return SplitDatasets(tuple(shuffled[:SPLIT_SIZE]), tuple(shuffled[SPLIT_SIZE:]),
                         int(seed), dict(paths or {}))


def save_split(split: SplitDatasets, path) -> None:
    doc = {"version": SPLIT_VERSION, "seed": split.seed,
           "set_a": list(split.set_a), "set_b": list(split.set_b),
           "paths": {i: split.path_of(i) for i in split.set_a + split.set_b}}
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write split file {path}: {exc}") from exc


def load_split(path) -> SplitDatasets:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read split file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    try:
        split = SplitDatasets(tuple(doc["set_a"]), tuple(doc["set_b"]), int(doc["seed"]),
                              dict(doc.get("paths", {})))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed split file ({exc})") from None
    ids = split.set_a + split.set_b
    if len(split.set_a) != SPLIT_SIZE or len(split.set_b) != SPLIT_SIZE or len(set(ids)) != len(ids):
        raise WrongCardinality(f"{path}: expected two disjoint sets of {SPLIT_SIZE} ids")
    return split


@dataclass(frozen=True)
class TrainingSchedule:
    """Every ordered (a, b) pair once per epoch, a-major."""

    epochs: int
    n_a: int = SPLIT_SIZE
    n_b: int = SPLIT_SIZE

    @property
    def per_epoch(self) -> int:
        return self.n_a * self.n_b

    def __len__(self):
        return self.epochs * self.per_epoch

    def __getitem__(self, pos: int) -> Tuple[int, int]:
        if not -len(self) <= pos < len(self):
            raise IndexError(pos)
        within = pos % self.per_epoch
        return divmod(within, self.n_b)

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        for _ in range(self.epochs):
            for i in range(self.n_a):
                for j in range(self.n_b):
                    yield i, j

    @property
    def pairs(self) -> List[Tuple[int, int]]:
        return list(self)


def build_schedule(epochs: int, n_a: int = SPLIT_SIZE, n_b: int = SPLIT_SIZE) -> TrainingSchedule:
    if isinstance(epochs, bool) or not isinstance(epochs, (int, np.integer)) or epochs < 1:
        raise ValidationError(f"epochs must be an integer >= 1, got {epochs!r}")
    if n_a < 1 or n_b < 1:
        raise ValidationError("both training sets must be non-empty")
    return TrainingSchedule(int(epochs), int(n_a), int(n_b))
