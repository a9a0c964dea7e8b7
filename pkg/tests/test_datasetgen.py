import warnings

import numpy as np
import pytest
from conftest import smooth_target
from hypothesis import given
from hypothesis import strategies as st
from PIL import Image

from holotwin.corpus import write_corpus
from holotwin.datasetgen import (DatasetManifest, DegenerateImageWarning, build_dataset, estimate_noise,
                                 nlm_denoiser, pair_seed, prepare_target_amplitude, prepare_target_phase,
                                 synthesize_pair)
from holotwin.fieldcore import CountError, Raster


def test_constant_amplitude_maps_to_half_with_warning():
    with pytest.warns(DegenerateImageWarning):
        t = prepare_target_amplitude(np.full((20, 20), 0.3), 16, "identity")
    assert np.all(t.values == 0.5)


def test_amplitude_identity_when_already_normalized():
    v = smooth_target(np.random.default_rng(0), 32)
    t = prepare_target_amplitude(v, 32, "identity")
    assert np.allclose(t.values, v, atol=1e-12)


def test_two_level_image_maps_to_unit_range():
    v = np.full((16, 16), 10 / 255)
    v[:, 8:] = 250 / 255
    t = prepare_target_amplitude(v, 16, "identity")
    assert set(np.unique(t.values)) == {0.0, 1.0}


def test_constant_phase_is_pi():
    with pytest.warns(DegenerateImageWarning):
        t = prepare_target_phase(np.full((16, 16), 0.4), np.random.default_rng(0), 16, "identity")
    assert np.allclose(t.values, np.pi)


def test_phase_narrow_range_does_not_wrap():
    v = smooth_target(np.random.default_rng(1), 32, 1.0)
    t = prepare_target_phase(v, None, 32, "identity", highpass_sigma=4, phase_range=(-np.pi / 2, 0))
    assert t.values.min() >= np.pi / 2 - 1e-12 and t.values.max() <= np.pi + 1e-12
    assert t.values.max() == pytest.approx(np.pi)


def test_phase_wide_range_wraps():
    v = smooth_target(np.random.default_rng(2), 32, 1.0)
    t = prepare_target_phase(v, None, 32, "identity", highpass_sigma=4, phase_range=(-2 * np.pi, 0))
    assert t.values.min() >= 0 and t.values.max() <= 2 * np.pi + 1e-12
    # the normalized value -3 pi / 2 lands on 3 pi / 2; jumps of ~2 pi appear between neighbours
    jumps = np.abs(np.diff(t.values, axis=1))
    assert jumps.max() > 1.5 * np.pi


@given(st.integers(0, 10_000))
def test_phase_targets_stay_in_range(seed):
    rng = np.random.default_rng(seed)
    t = prepare_target_phase(rng.random((24, 24)), rng, 16, "identity", highpass_sigma=3)
    assert t.values.min() >= 0 and t.values.max() <= 2 * np.pi + 1e-12


def test_noise_estimate_tracks_gaussian_noise():
    rng = np.random.default_rng(3)
    assert estimate_noise(rng.normal(0, 0.05, (128, 128))) == pytest.approx(0.05, rel=0.1)
    clean = smooth_target(rng, 64, 4)
    noisy = clean + rng.normal(0, 0.05, clean.shape)
    assert np.std(nlm_denoiser(noisy) - clean) < np.std(noisy - clean)


def test_uniform_amplitude_target_gives_uniform_input(params):
    pair = synthesize_pair(Raster(np.ones((32, 32))), "amplitude", params)
    assert np.allclose(pair.input.values, 1, atol=1e-10)
    assert pair.hologram.shape == (64, 64)


def test_flat_phase_target_gives_flat_input(params):
    pair = synthesize_pair(Raster(np.full((32, 32), np.pi)), "phase", params)
    assert np.allclose(pair.input.values, np.pi, atol=1e-9)


def test_structured_target_has_twin_image(params):
    t = Raster(smooth_target(np.random.default_rng(4), 32, 1.5))
    pair = synthesize_pair(t, "amplitude", params)
    assert np.sqrt(np.mean((pair.input.values - t.values) ** 2)) > 0.01
    assert np.all(pair.hologram.values >= 0)


def test_pair_seed_depends_only_on_master_and_source():
    assert pair_seed(3, "a/b.png") == pair_seed(3, "a/b.png")
    assert pair_seed(3, "a/b.png") != pair_seed(4, "a/b.png")
    assert pair_seed(3, "a/b.png") != pair_seed(3, "a/c.png")


@pytest.fixture(scope="module")
def tiny_corpus(tmp_path_factory):
    return write_corpus(tmp_path_factory.mktemp("corpus"), "flora", 3, seed=5, size=48)


def test_count_zero_writes_manifest_only(tiny_corpus, tmp_path, params):
    m = build_dataset(tiny_corpus, tmp_path / "ds", 0, params, 1, tile_size=16)
    assert m.pairs == []
    assert sorted(p.name for p in (tmp_path / "ds").iterdir()) == ["manifest.json"]


def test_build_dataset_invariants_and_determinism(tiny_corpus, tmp_path, params):
    a = build_dataset(tiny_corpus, tmp_path / "a", 8, params, 11, tile_size=16, denoiser="identity")
    b = build_dataset(tiny_corpus, tmp_path / "b", 8, params, 11, tile_size=16, denoiser="identity")
    assert (tmp_path / "a" / "manifest.json").read_bytes() == (tmp_path / "b" / "manifest.json").read_bytes()
    assert len(a.select("amplitude")) == len(a.select("phase")) == 8
    back = DatasetManifest.load(tmp_path / "a")
    for i in range(len(back.pairs)):
        pair = back.load_pair(i, with_hologram=True)
        assert pair.input.shape == pair.target.shape == (16, 16)
        assert pair.hologram.shape == (32, 32)
        assert np.all(pair.hologram.values >= 0)
        if pair.kind == "amplitude":
            assert 0 <= pair.target.values.min() and pair.target.values.max() <= 1
        else:
            assert 0 <= pair.target.values.min() and pair.target.values.max() <= 2 * np.pi + 1e-6
    # stored inputs are reproducible from stored targets
    p0 = back.load_pair(0)
    again = synthesize_pair(p0.target, p0.kind, params)
    assert np.allclose(again.input.values, p0.input.values, atol=1e-5)


def test_too_small_corpus_raises(tiny_corpus, tmp_path, params):
    with pytest.raises(CountError):
        build_dataset(tiny_corpus, tmp_path / "x", 100, params, 0, tile_size=16)


def test_unreadable_image_is_skipped(tmp_path, params):
    root = tmp_path / "c"
    root.mkdir()
    for i in range(3):
        Image.fromarray((np.random.default_rng(i).random((20, 20)) * 255).astype(np.uint8)).save(root / f"{i}.png")
    (root / "broken.png").write_bytes(b"not an image")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        m = build_dataset(root, tmp_path / "ds", 3, params, 0, tile_size=16, denoiser="identity")
    assert "broken.png" not in {p["source_id"] for p in m.pairs}
