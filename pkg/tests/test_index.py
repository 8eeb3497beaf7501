import json
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from conftest import make_corpus
from oracles import brute_force_ranking
from poserec.exceptions import (CorruptIndex, EmptyDataset, IoError, ValidationError,
                                VersionMismatch)
from poserec.imaging import load_image
from poserec.index import (DEFAULT_K, HistogramRecommender, ImageIndex, IndexConfig,
                           build_index, export_results, load_index, query_top_k, save_index)
from poserec.metrics import METRICS, MetricKind

METRIC_NAMES = [m.value for m in MetricKind]


def test_single_image(tmp_path):
    Image.fromarray(np.zeros((4, 4, 3), np.uint8)).save(tmp_path / "one.png")
    idx = build_index(tmp_path)
    assert idx.ids == ["one.png"]
    assert (idx.entries[0].width, idx.entries[0].height) == (4, 4)
    assert idx.entries[0].feature.shape == (9, 3, 32)


def test_recursive_case_insensitive_scan(tmp_path):
    (tmp_path / "a" / "b").mkdir(parents=True)
    px = np.full((4, 4, 3), 9, np.uint8)
    Image.fromarray(px).save(tmp_path / "a" / "b" / "deep.PNG")
    Image.fromarray(px).save(tmp_path / "x.JpEg", format="JPEG")
    Image.fromarray(px).save(tmp_path / "y.bmp")
    (tmp_path / "readme.txt").write_text("not an image")
    idx = build_index(tmp_path)
    assert idx.ids == ["a/b/deep.PNG", "x.JpEg", "y.bmp"]


def test_corrupt_file_is_skipped(tmp_path):
    make_corpus(tmp_path, 10, nested=False)
    victim = tmp_path / "img_0003.png"
    data = victim.read_bytes()
    victim.write_bytes(data[: len(data) // 3])
    idx = build_index(tmp_path)
    assert len(idx) == 9
    assert [s[0] for s in idx.skipped] == ["img_0003.png"]
    assert "img_0003.png" not in idx.ids


def test_empty_and_missing_dirs(tmp_path):
    with pytest.raises(EmptyDataset):
        build_index(tmp_path)
    (tmp_path / "bad.png").write_bytes(b"junk")
    with pytest.raises(EmptyDataset):
        build_index(tmp_path)
    with pytest.raises(IoError):
        build_index(tmp_path / "missing")


def test_entries_sorted_bytewise(tmp_path):
    for name in ["b.png", "B.png", "a.png", "é.png", "_.png"]:
        Image.fromarray(np.zeros((2, 2, 3), np.uint8)).save(tmp_path / name)
    idx = build_index(tmp_path, IndexConfig(grid_rows=1, grid_cols=1))
    assert idx.ids == sorted(idx.ids, key=lambda s: s.encode())
    assert idx.ids[0] == "B.png" and idx.ids[-1] == "é.png"


def test_parallel_build_is_identical(tmp_path):
    make_corpus(tmp_path, 24)
    a = build_index(tmp_path, n_jobs=1)
    b = build_index(tmp_path, n_jobs=4)
    assert a == b
    save_index(a, tmp_path / "a.json")
    save_index(b, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_roundtrip(corpus, tmp_path):
    root, _ = corpus
    for cfg in (IndexConfig(), IndexConfig(bins=7, color_space="gray", grid_rows=2, grid_cols=1)):
        idx = build_index(root, cfg)
        save_index(idx, tmp_path / "idx.json")
        back = load_index(tmp_path / "idx.json")
        assert back == idx
        for e, f in zip(idx.entries, back.entries):
            assert e.feature.values.tobytes() == f.feature.values.tobytes()


def test_file_layout(corpus, tmp_path):
    root, _ = corpus
    save_index(build_index(root), tmp_path / "idx.json")
    doc = json.loads((tmp_path / "idx.json").read_text())
    assert list(doc) == ["version", "config", "entries"]
    assert doc["version"] == 1
    assert doc["config"] == {"bins": 32, "color_space": "hsv", "grid_rows": 3, "grid_cols": 3}
    assert list(doc["entries"][0]) == ["id", "path", "width", "height", "feature"]
    assert len(doc["entries"][0]["feature"]) == 9 * 3 * 32


def _saved(corpus, tmp_path):
    root, _ = corpus
    path = tmp_path / "idx.json"
    save_index(build_index(root), path)
    return path, json.loads(path.read_text())


def test_version_mismatch(corpus, tmp_path):
    path, doc = _saved(corpus, tmp_path)
    doc["version"] = 2
    path.write_text(json.dumps(doc))
    with pytest.raises(VersionMismatch):
        load_index(path)


def test_feature_not_normalized_is_corrupt(corpus, tmp_path):
    path, doc = _saved(corpus, tmp_path)
    doc["entries"][3]["feature"] = [v / 2 for v in doc["entries"][3]["feature"]]
    path.write_text(json.dumps(doc))
    with pytest.raises(CorruptIndex, match="sums to"):
        load_index(path)


@pytest.mark.parametrize("mutate", [
    lambda d: d["entries"].reverse(),
    lambda d: d["entries"][0]["feature"].pop(),
    lambda d: d["entries"].append(dict(d["entries"][0])),
    lambda d: d["config"].update(bins=1),
    lambda d: d.pop("config"),
    lambda d: d["entries"][0].update(width=0),
])
def test_structural_corruption(corpus, tmp_path, mutate):
    path, doc = _saved(corpus, tmp_path)
    mutate(doc)
    path.write_text(json.dumps(doc))
    with pytest.raises(CorruptIndex):
        load_index(path)


def test_truncated_index(corpus, tmp_path):
    path, _ = _saved(corpus, tmp_path)
    path.write_bytes(path.read_bytes()[:200])
    with pytest.raises(CorruptIndex):
        load_index(path)
    with pytest.raises(IoError):
        load_index(tmp_path / "absent.json")


def test_self_retrieval(corpus):
    root, ids = corpus
    idx = build_index(root)
    for image_id in ids:
        res = query_top_k(idx, load_image(root / image_id), "bhattacharyya", k=3)
        assert res.items[0][0] == image_id
        assert res.items[0][1] <= 1e-9


@pytest.mark.parametrize("metric", METRIC_NAMES)
def test_matches_brute_force(corpus, metric):
    root, ids = corpus
    idx = build_index(root)
    pairs = [(e.id, e.feature) for e in idx.entries]
    fn = METRICS[MetricKind(metric)]
    for qid in ids[::7]:
        q = idx.config.feature(load_image(root / qid))
        expected = brute_force_ranking(pairs, q, metric, lambda a, b: fn(a, b).value, 12)
        res = query_top_k(idx, load_image(root / qid), metric, 12)
        assert res.items == expected


def test_ties_break_by_id(tmp_path):
    px = np.full((4, 4, 3), 50, np.uint8)
    for name in ["c.png", "a.png", "b.png"]:
        Image.fromarray(px).save(tmp_path / name)
    Image.fromarray(np.full((4, 4, 3), 250, np.uint8)).save(tmp_path / "0.png")
    idx = build_index(tmp_path)
    for metric in METRIC_NAMES:
        res = query_top_k(idx, px, metric, k=4)
        assert res.ids == ["a.png", "b.png", "c.png", "0.png"]


def test_default_k_and_truncation(corpus):
    root, ids = corpus
    idx = build_index(root)
    assert DEFAULT_K == 12
    res = query_top_k(idx, load_image(root / ids[0]))
    assert res.k == 12 and len(res.items) == 12
    assert len(query_top_k(idx, load_image(root / ids[0]), k=100).items) == len(ids)
    with pytest.raises(ValidationError):
        query_top_k(idx, load_image(root / ids[0]), k=0)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 29), st.sampled_from(METRIC_NAMES), st.integers(0, 29))
def test_monotone_truncation(k, metric, q):
    idx = _shared_index()
    query = idx.entries[q].feature
    small = query_top_k(idx, query, metric, k)
    big = query_top_k(idx, query, metric, k + 1)
    assert big.items[:k] == small.items


_CACHE = {}


def _shared_index():
    if "idx" not in _CACHE:
        import tempfile
        from pathlib import Path
        d = Path(tempfile.mkdtemp())
        make_corpus(d, 30, seed=99)
        _CACHE["idx"] = build_index(d)
    return _CACHE["idx"]


def test_export(corpus, tmp_path):
    root, ids = corpus
    idx = build_index(root)
    out = tmp_path / "out"
    res = query_top_k(idx, load_image(root / ids[4]))
    export_results(res, idx, out)
    files = sorted(p.name for p in out.iterdir())
    assert len([f for f in files if f.startswith("rank_")]) == 12
    assert "results.json" in files
    assert files[0].startswith("rank_01_") and files[11].startswith("rank_12_")
    manifest = json.loads((out / "results.json").read_text())
    assert manifest["metric"] == "bhattacharyya" and manifest["k"] == 12
    assert [it["rank"] for it in manifest["items"]] == list(range(1, 13))
    first = manifest["items"][0]
    assert first["id"] == ids[4] and first["score"] <= 1e-9
    assert (out / f"rank_01_{os.path.basename(ids[4])}").read_bytes() == (root / ids[4]).read_bytes()
    assert set(manifest["items"][0]) == {"rank", "id", "score", "source_path"}


def test_export_replaces_previous_run(corpus, tmp_path):
    root, ids = corpus
    idx = build_index(root)
    out = tmp_path / "out"
    export_results(query_top_k(idx, load_image(root / ids[0])), idx, out)
    (out / "keep.txt").write_text("unrelated")
    res = query_top_k(idx, load_image(root / ids[1]), k=1)
    export_results(res, idx, out)
    ranks = sorted(p.name for p in out.glob("rank_*"))
    assert ranks == [f"rank_01_{os.path.basename(ids[1])}"]
    assert (out / "keep.txt").exists()
    assert not list(out.glob(".rank_*"))


def test_determinism(corpus, tmp_path):
    root, ids = corpus
    blobs = []
    for run in range(2):
        idx = build_index(root)
        save_index(idx, tmp_path / f"i{run}.json")
        export_results(query_top_k(idx, load_image(root / ids[2])), idx, tmp_path / f"o{run}")
        blobs.append(((tmp_path / f"i{run}.json").read_bytes(),
                      (tmp_path / f"o{run}" / "results.json").read_bytes()))
    assert blobs[0] == blobs[1]


def test_recommender_estimator(corpus):
    from sklearn.base import clone
    root, ids = corpus
    rec = HistogramRecommender(n_neighbors=5, metric="intersection").fit(str(root))
    assert clone(rec).get_params()["metric"] == "intersection"
    q = load_image(root / ids[9])
    assert rec.recommend(q).ids == query_top_k(rec.index_, q, "intersection", 5).ids
    scores, ind = rec.kneighbors([q, root / ids[3]])
    assert ind.shape == scores.shape == (2, 5)
    assert rec.index_.entries[ind[0, 0]].id == ids[9]
    assert scores[0, 0] == pytest.approx(1.0)
    assert rec.predict([q])[0][0] == ids[9]


def test_recommender_on_arrays(rng):
    imgs = [np.full((6, 6, 3), v, np.uint8) for v in (10, 100, 200, 102)]
    rec = HistogramRecommender(n_neighbors=2, grid=1).fit(imgs, ids=["a", "b", "c", "d"])
    assert rec.predict([np.full((6, 6, 3), 100, np.uint8)]) == [["b", "d"]]
    rec2 = HistogramRecommender.from_index(rec.index_, n_neighbors=1)
    assert rec2.get_params()["grid"] == (1, 1)


def test_recommender_not_fitted():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        HistogramRecommender().recommend(np.zeros((3, 3, 3), np.uint8))
