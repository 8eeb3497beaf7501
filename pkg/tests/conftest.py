import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

sys.path.insert(0, str(Path(__file__).parent))


def synthetic_image(kind: str, rng: np.random.Generator, size=(24, 16)) -> np.ndarray:
    """Solid colors, linear gradients or noise textures as HxWx3 uint8."""
    w, h = size
    if kind == "solid":
        return np.broadcast_to(rng.integers(0, 256, 3, dtype=np.uint8), (h, w, 3)).copy()
    if kind == "gradient":
        c0 = rng.integers(0, 256, 3).astype(float)
        c1 = rng.integers(0, 256, 3).astype(float)
        t = np.linspace(0, 1, w)[None, :, None] if rng.random() < 0.5 else np.linspace(0, 1, h)[:, None, None]
        img = c0 * (1 - t) + c1 * t
        return np.broadcast_to(np.rint(img), (h, w, 3)).astype(np.uint8)
    base = rng.integers(0, 256, 3)
    spread = int(rng.integers(10, 120))
    noise = rng.integers(-spread, spread + 1, (h, w, 3))
    return np.clip(base + noise, 0, 255).astype(np.uint8)


def make_corpus(root: Path, n: int, seed: int = 0, size=(24, 16), nested=True):
    """Write ``n`` synthetic PNGs under ``root``; returns their relative ids."""
    rng = np.random.default_rng(seed)
    kinds = ["solid", "gradient", "noise"]
    ids = []
    for i in range(n):
        kind = kinds[i % 3]
        sub = root / kind if nested else root
        sub.mkdir(parents=True, exist_ok=True)
        p = sub / f"img_{i:04d}.png"
        Image.fromarray(synthetic_image(kind, rng, size)).save(p)
        ids.append(p.relative_to(root).as_posix())
    return ids


@pytest.fixture
def corpus(tmp_path):
    root = tmp_path / "corpus"
    ids = make_corpus(root, 30, seed=7)
    return root, ids


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
