import numpy as np
import pytest
from conftest import band_limited
from hypothesis import given
from hypothesis import strategies as st

from holotwin.fieldcore import ComplexField, DataError, Raster, ShapeError
from holotwin.propagate import PropagationPlan, angular_spectrum, crop_center, frequency_grid, pad_replicate

LAM, PITCH, Z = 405e-9, 2.4e-6, 2.6e-3


def test_constant_field_gets_only_global_piston():
    c = 0.7 - 0.2j
    out = angular_spectrum(ComplexField(np.full((32, 48), c), PITCH), Z, LAM)
    expect = c * np.exp(2j * np.pi * Z / LAM)
    assert np.allclose(out.values, expect, atol=1e-12)
    flat = angular_spectrum(ComplexField(np.full((32, 48), c), PITCH), Z, LAM, remove_piston=True)
    assert np.allclose(flat.values, c, atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.sampled_from([16, 33, 64]), st.floats(-5e-3, 5e-3))
def test_round_trip(seed, n, z):
    f = band_limited(np.random.default_rng(seed), n)
    u = ComplexField(f, PITCH)
    back = angular_spectrum(angular_spectrum(u, z, LAM), -z, LAM)
    assert np.sqrt(np.mean(np.abs(back.values - f) ** 2)) / np.sqrt(np.mean(np.abs(f) ** 2)) < 1e-10


def test_energy_conserved_without_evanescent_band():
    f = band_limited(np.random.default_rng(0), 64, cutoff=1.0)
    out = angular_spectrum(ComplexField(f, PITCH), Z, LAM)
    assert np.sum(np.abs(out.values) ** 2) == pytest.approx(np.sum(np.abs(f) ** 2), rel=1e-12)


def test_evanescent_components_are_dropped():
    # pitch below half a wavelength makes the grid corners evanescent
    plan = PropagationPlan(32, 32, 0.15e-6, 1e-6, 405e-9)
    fy, fx = frequency_grid(32, 32, 0.15e-6)
    ev = fx**2 + fy**2 > 1 / 405e-9**2
    assert ev.any()
    assert np.all(plan.transfer[ev] == 0)


def test_zero_distance_is_identity_copy():
    f = band_limited(np.random.default_rng(1), 16)
    out = angular_spectrum(ComplexField(f, PITCH), 0.0, LAM)
    assert np.array_equal(out.values, f)


def test_nonfinite_rejected():
    f = np.ones((8, 8), complex)
    f[2, 2] = np.nan
    with pytest.raises(DataError):
        angular_spectrum(ComplexField(f, PITCH), Z, LAM)


def _zero_crossings(profile):
    s = np.sign(profile)
    return np.nonzero(s[:-1] * s[1:] < 0)[0] + 0.5


def test_gabor_rings_match_fresnel_zones():
    n = 256
    y, x = np.mgrid[:n, :n] - n // 2
    obj = np.ones((n, n), complex)
    obj[x**2 + y**2 <= 1] = 0.0  # small absorbing dot
    cam = angular_spectrum(ComplexField(obj, PITCH), Z, LAM, remove_piston=True)
    radial = (np.abs(cam.values) ** 2 - 1)[n // 2, n // 2:]
    # the weak-scatterer term ~ sin(pi r^2 / (lambda Z)) changes sign on the Fresnel zone radii
    found = _zero_crossings(radial)[:4]
    expect = np.sqrt(np.arange(1, 5) * LAM * Z) / PITCH
    assert len(found) == 4
    assert np.all(np.abs(found - expect) <= 1.0)


def test_point_refocuses_after_backpropagation():
    from holotwin.reconstruct import backpropagate_amplitude
    from holotwin.fieldcore import SystemParams

    n, pos = 128, (40, 77)
    obj = np.ones((n, n), complex)
    obj[pos] = 0.0
    cam = angular_spectrum(ComplexField(obj, PITCH), -Z, LAM, remove_piston=True)
    back = backpropagate_amplitude(np.abs(cam.values), SystemParams(LAM, PITCH, Z))
    dip = np.unravel_index(np.argmin(back.amplitude), (n, n))
    assert dip == pos


def test_pad_examples():
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(pad_replicate(x, 0), x)
    p = pad_replicate(x, 1)
    assert p.shape == (4, 4)
    assert (p[0, 0], p[0, -1], p[-1, 0], p[-1, -1]) == (1, 2, 3, 4)
    assert pad_replicate(Raster(np.zeros((512, 512))), 256).shape == (1024, 1024)
    with pytest.raises(ValueError):
        pad_replicate(x, -1)


def test_crop_examples():
    v = np.arange(1024 * 1024, dtype=float).reshape(1024, 1024)
    c = crop_center(v, 512, 512)
    assert np.array_equal(c, v[256:768, 256:768])
    assert np.array_equal(crop_center(v, 1024, 1024), v)
    with pytest.raises(ShapeError):
        crop_center(np.zeros((4, 4)), 5, 4)


@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 9))
def test_pad_crop_round_trip(h, w, m):
    x = np.random.default_rng(h * 100 + w).random((h, w))
    assert np.array_equal(crop_center(pad_replicate(x, m), w, h), x)
