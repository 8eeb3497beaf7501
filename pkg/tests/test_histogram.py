import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import histogram_by_loops
from poserec.exceptions import GridTooFine, InvalidBinCount
from poserec.histogram import (ColorHistogramTransformer, HistogramFeature, compute_histogram,
                               feature_distance_ready)
from poserec.imaging import ImageBuffer, RegionGrid, to_color_space


def gray(px):
    return ImageBuffer(np.asarray(px, np.uint8), "gray")


def test_constant_image():
    f = compute_histogram(gray(np.zeros((2, 2))), RegionGrid(1, 1), 8)
    assert f.values.tolist() == [1.0] + [0.0] * 7


def test_symmetric_split():
    f = compute_histogram(gray([[0, 255]]), RegionGrid(1, 1), 2)
    assert f.values.tolist() == [0.5, 0.5]


def test_matches_loop_counter_on_random_rgb(rng):
    px = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
    f = compute_histogram(ImageBuffer(px), RegionGrid(3, 3), 32)
    expected = histogram_by_loops(px.tolist(), 3, 3, 32)
    assert f.shape == (9, 3, 32)
    assert f.values.tolist() == expected


@settings(max_examples=50, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(3, 10), st.integers(3, 10), st.just(3))),
       st.integers(1, 3), st.integers(1, 3), st.sampled_from([2, 3, 7, 16, 32, 256]))
def test_matches_loop_counter(px, rows, cols, bins):
    f = compute_histogram(ImageBuffer(px), RegionGrid(rows, cols), bins)
    assert f.values.tolist() == histogram_by_loops(px.tolist(), rows, cols, bins)


@settings(max_examples=50, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 20), st.integers(1, 20), st.just(3))),
       st.integers(2, 256))
def test_normalized(px, bins):
    grid = RegionGrid(min(3, px.shape[0]), min(3, px.shape[1]))
    f = compute_histogram(to_color_space(ImageBuffer(px), "hsv"), grid, bins)
    assert np.all(f.values >= 0)
    assert abs(f.values.sum() - 1.0) <= 1e-9
    assert len(f) == grid.n_regions * 3 * bins
    f.check_invariants()


@settings(max_examples=30, deadline=None)
@given(arrays(np.uint8, (6, 6, 3)), st.randoms(use_true_random=False))
def test_permutation_within_region_is_invisible(px, rnd):
    grid = RegionGrid(2, 2)
    base = compute_histogram(ImageBuffer(px), grid, 16)
    shuffled = px.copy()
    block = shuffled[0:3, 3:6].reshape(-1, 3).tolist()
    rnd.shuffle(block)
    shuffled[0:3, 3:6] = np.array(block, np.uint8).reshape(3, 3, 3)
    assert compute_histogram(ImageBuffer(shuffled), grid, 16) == base


@settings(max_examples=30, deadline=None)
@given(arrays(np.uint8, (7, 5, 3)), st.sampled_from([1, 2, 4, 8, 16, 32, 64]))
def test_merging_bin_pairs_gives_coarser_histogram(px, k):
    img = ImageBuffer(px)
    fine = compute_histogram(img, RegionGrid(2, 2), 2 * k)
    coarse = compute_histogram(img, RegionGrid(2, 2), k) if k >= 2 else None
    merged = fine.values.reshape(-1, k, 2).sum(axis=2).ravel()
    total = px.size
    if coarse is not None:
        # identical as counts; as fractions within the rounding of one addition
        assert np.array_equal(np.rint(merged * total), np.rint(coarse.values * total))
        np.testing.assert_allclose(merged, coarse.values, rtol=0, atol=1e-15)


def test_invalid_bins():
    img = gray(np.zeros((2, 2)))
    for bad in (1, 257, 0, 2.5, True):
        with pytest.raises(InvalidBinCount):
            compute_histogram(img, RegionGrid(1, 1), bad)


def test_grid_finer_than_image():
    with pytest.raises(GridTooFine):
        compute_histogram(gray(np.zeros((2, 2))), RegionGrid(3, 3), 8)


def test_distance_ready():
    img = ImageBuffer(np.random.default_rng(0).integers(0, 256, (6, 6, 3), dtype=np.uint8))
    f = compute_histogram(img, RegionGrid(3, 3), 16)
    assert feature_distance_ready(f, f)
    assert not feature_distance_ready(f, compute_histogram(img, RegionGrid(3, 3), 32))
    assert not feature_distance_ready(f, compute_histogram(img, RegionGrid(1, 1), 16))
    assert not feature_distance_ready(f, compute_histogram(to_color_space(img, "gray"), RegionGrid(3, 3), 16))


def test_feature_rejects_wrong_length():
    with pytest.raises(ValueError):
        HistogramFeature(bins=4, channels=1, regions=1, values=[0.5, 0.5])


def test_transformer_rows_match_function(tmp_path, rng):
    from PIL import Image
    imgs = [rng.integers(0, 256, (10, 12, 3), dtype=np.uint8) for _ in range(3)]
    p = tmp_path / "a.png"
    Image.fromarray(imgs[0]).save(p)
    tr = ColorHistogramTransformer(bins=8, color_space="hsv", grid=2)
    X = tr.fit_transform([str(p), imgs[1], ImageBuffer(imgs[2])])
    assert X.shape == (3, 4 * 3 * 8) == (3, tr.n_features_out_)
    for row, px in zip(X, imgs):
        f = compute_histogram(to_color_space(ImageBuffer(px), "hsv"), RegionGrid(2, 2), 8)
        assert np.array_equal(row, f.values)
    assert tr.get_params() == {"bins": 8, "color_space": "hsv", "grid": 2}


def test_transformer_clone_and_pipeline():
    from sklearn.base import clone
    from sklearn.pipeline import make_pipeline
    from sklearn.preprocessing import FunctionTransformer
    tr = ColorHistogramTransformer(bins=4, color_space="gray", grid=(1, 2))
    assert clone(tr).get_params() == tr.get_params()
    pipe = make_pipeline(tr, FunctionTransformer(np.sqrt))
    X = pipe.fit_transform([np.full((4, 4, 3), 255, np.uint8)])
    assert X.shape == (1, 8)
    assert X[0, 3] == pytest.approx(np.sqrt(0.5))
