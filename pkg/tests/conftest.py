import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from holotwin.fieldcore import SystemParams  # noqa: E402


@pytest.fixture
def params():
    return SystemParams(405e-9, 2.4e-6, 2.6e-3)


def band_limited(rng, n, cutoff=0.25, complex_=True):
    """Random field whose spectrum is zero beyond ``cutoff`` of Nyquist."""
    spec = rng.standard_normal((n, n)) + (1j * rng.standard_normal((n, n)) if complex_ else 0)
    f = np.fft.fftfreq(n)
    mask = (np.abs(f)[:, None] < cutoff * 0.5) & (np.abs(f)[None, :] < cutoff * 0.5)
    return np.fft.ifft2(np.fft.fft2(spec) * mask)


def smooth_target(rng, n, sigma=3.0):
    from scipy.ndimage import gaussian_filter

    v = gaussian_filter(rng.random((n, n)), sigma, mode="wrap")
    return (v - v.min()) / (v.max() - v.min())


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
