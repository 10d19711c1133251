import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from anisoflow.filters import HYBRID_CUBIC
from anisoflow.orientation import MRParams, default_angles, mr_estimate
from anisoflow.segment import (NiblackParams, erode_square, global_threshold,
                               local_mean_std, niblack_threshold, odd_window,
                               remove_small_components, segment_pipeline)
from anisoflow.synth import FiberImageSpec, disk_mask, fiber_mask, make_fiber_image, make_noise

masks = arrays(bool, st.tuples(st.integers(1, 24), st.integers(1, 24)))


def niblack_oracle(img, window, k):
    m = ndimage.generic_filter(img, np.mean, size=window, mode="nearest")
    s = ndimage.generic_filter(img, np.std, size=window, mode="nearest")
    return img > m + k * s


def test_params():
    with pytest.raises(ValueError):
        NiblackParams(4)
    with pytest.raises(ValueError):
        NiblackParams(1)
    assert NiblackParams(3).k == 0.6
    assert odd_window(1.5) == 7
    assert odd_window(0.5) == 3
    assert odd_window(2.0) == 9
    assert odd_window(1.25) == 5


def test_niblack_centre_example():
    img = np.zeros((5, 5))
    img[2, 2] = 1
    m, s = local_mean_std(img, 5)
    assert m[2, 2] == pytest.approx(0.04)
    assert s[2, 2] == pytest.approx(0.196, abs=1e-3)
    assert m[2, 2] + 0.6 * s[2, 2] == pytest.approx(0.1576, abs=1e-4)
    assert niblack_threshold(img, NiblackParams(5, 0.6))[2, 2]


def test_niblack_matches_direct_windows():
    img = np.random.default_rng(2).random((23, 31))
    for w, k in ((3, 0.6), (7, 0.0), (5, -0.3)):
        assert np.array_equal(niblack_threshold(img, NiblackParams(w, k)),
                              niblack_oracle(img, w, k))


def test_niblack_k0_is_local_mean():
    img = np.random.default_rng(5).random((20, 20))
    m = ndimage.uniform_filter(img, 5, mode="nearest")
    assert np.array_equal(niblack_threshold(img, NiblackParams(5, 0.0)), img > m)


@pytest.mark.parametrize("k", [0.0, 0.6, 2.0])
def test_niblack_constant_image_empty(k):
    assert not niblack_threshold(np.full((16, 16), 0.37), NiblackParams(5, k)).any()


def test_niblack_window_too_large():
    with pytest.raises(ValueError):
        niblack_threshold(np.zeros((5, 8)), NiblackParams(7))


@pytest.mark.property
@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100), st.floats(-50, 50), st.integers(0, 2 ** 31))
def test_niblack_affine_invariance(a, b, seed):
    img = np.random.default_rng(seed).random((20, 20))
    p = NiblackParams(5, 0.6)
    base = niblack_threshold(img, p)
    got = niblack_threshold(a * img + b, p)
    # only pixels sitting on the threshold within rounding may differ
    m, s = local_mean_std(img, 5)
    margin = np.abs(img - (m + 0.6 * s))
    assert np.all((base == got) | (margin < 1e-9))


def test_global_threshold():
    img = np.array([[0.0, 5.0], [7.0, 10.0]])
    assert global_threshold(img, 0.6).tolist() == [[False, False], [True, True]]
    assert not global_threshold(np.ones((3, 3)), 0.0).any()


def test_erode_examples():
    full = np.ones((4, 5), bool)
    out = erode_square(full, 2)
    assert out[:3, :4].all() and not out[3].any() and not out[:, 4].any()
    single = np.zeros((5, 5), bool)
    single[2, 2] = True
    assert not erode_square(single, 2).any()
    block = np.zeros((6, 6), bool)
    block[1:4, 1:4] = True
    exp = np.zeros((6, 6), bool)
    exp[1:3, 1:3] = True
    assert np.array_equal(erode_square(block, 2), exp)
    assert np.array_equal(erode_square(block, 1), block)
    with pytest.raises(ValueError):
        erode_square(block, 0)


@pytest.mark.property
@settings(max_examples=60, deadline=None)
@given(masks, st.integers(1, 4))
def test_erode_anti_extensive_and_decreasing(m, side):
    e = erode_square(m, side)
    assert not np.any(e & ~m)
    assert not np.any(erode_square(m, side + 1) & ~e)


@pytest.mark.property
@settings(max_examples=60, deadline=None)
@given(masks, st.integers(1, 4))
def test_erode_matches_scipy(m, side):
    # scipy centres the element; shift it so the pixel sits at its top-left
    ref = ndimage.binary_erosion(m, np.ones((side, side), bool), border_value=0,
                                 origin=(-(side // 2),) * 2)
    assert np.array_equal(erode_square(m, side), ref)


def test_component_examples():
    m = np.zeros((30, 30), bool)
    m[2:12, 2:12] = True          # 100 px
    m[15:24, 15:26] = True        # 99 px
    out = remove_small_components(m, 100)
    assert out[2:12, 2:12].all() and not out[15:24, 15:26].any()
    d = np.zeros((4, 4), bool)
    d[0, 0] = d[1, 1] = True
    assert remove_small_components(d, 2, 8).sum() == 2
    assert remove_small_components(d, 2, 4).sum() == 0
    with pytest.raises(ValueError):
        remove_small_components(d, 2, 6)


@pytest.mark.property
@settings(max_examples=60, deadline=None)
@given(masks, st.integers(1, 12), st.sampled_from([4, 8]))
def test_components_idempotent_anti_extensive(m, size, conn):
    once = remove_small_components(m, size, conn)
    assert not np.any(once & ~m)
    assert np.array_equal(remove_small_components(once, size, conn), once)


def _mr():
    return MRParams(20, 1.5, default_angles(5), HYBRID_CUBIC)


def _post_chain_oracle(response, window, k, side, min_size):
    nb = niblack_oracle(response, window, k)
    er = ndimage.binary_erosion(nb, np.ones((side, side), bool), border_value=0,
                                origin=(-1, -1))
    lab, n = ndimage.label(er, np.ones((3, 3)))
    sizes = ndimage.sum(er, lab, range(1, n + 1))
    return np.isin(lab, 1 + np.flatnonzero(sizes >= min_size))


@pytest.mark.slow
def test_pipeline_fibre_coverage_frozen():
    F = make_fiber_image(FiberImageSpec(512, 30, 2))
    core = fiber_mask(F)
    got = segment_pipeline(F, _mr())
    ref = _post_chain_oracle(mr_estimate(F, _mr()).response, 7, 0.6, 2, 100)
    assert np.array_equal(got, ref)
    # Niblack at k = 0.6 keeps only the crest of each fibre core
    assert (got & core).sum() / core.sum() == pytest.approx(0.3264, abs=5e-4)


def test_pipeline_noise_mostly_rejected():
    for seed in range(2):
        m = segment_pipeline(make_noise(512, seed), _mr())
        assert m[disk_mask(512)].mean() <= 0.05


def test_pipeline_constant_image_empty():
    assert not segment_pipeline(np.full((64, 64), 0.5),
                                MRParams(8, 1.5, default_angles(30))).any()


def test_pipeline_deterministic():
    img = make_noise(96, 3) * 0.5 + make_fiber_image(FiberImageSpec(96, 40, 2)) * 0.5
    p = MRParams(8, 1.5, default_angles(15))
    assert np.array_equal(segment_pipeline(img, p, min_size=10),
                          segment_pipeline(img, p, min_size=10))
