import math

import numpy as np
import pytest

from nvpl import fits


def test_per_cycle_phase_is_in_range():
    n = np.arange(1, 6)
    for phi in (0.4, 2.0, 4.0, 6.0):
        got = fits.fit_per_cycle_phase(n, np.sin(n * phi / 2) ** 2)
        assert 0 <= got <= 2 * math.pi
        # sign ambiguity: either phi or 2 pi - phi
        assert min(abs(got - phi), abs(got - (2 * math.pi - phi))) < 1e-8


def test_fringe_period():
    taus = np.linspace(0, 10e-6, 201)
    pops = 0.4 + 0.3 * np.cos(2 * np.pi * taus / 4e-6 + 0.2)
    out = fits.fit_fringe_period(taus, pops, 4e-6)
    assert out["period"] == pytest.approx(4e-6, rel=1e-9)
    assert out["offset"] == pytest.approx(0.4)
    assert out["amplitude"] == pytest.approx(0.3)
    assert out["rms_residual"] < 1e-9


def test_cone_phase():
    assert fits.cone_phase(0.0, 5e5) == pytest.approx(math.pi)
    assert fits.cone_phase(5e5, 5e5) == pytest.approx(math.pi * (1 + 1 / math.sqrt(2)))
    assert fits.cone_phase(5e5, 5e5, subspace_shift=False) == pytest.approx(math.sqrt(2) * math.pi)


@pytest.mark.parametrize("same_pair", [False, True])
def test_cone_fringes_recover_rabi(same_pair):
    delta = np.linspace(-1e6, 1e6, 81)
    pops = np.sin(3 * fits.cone_phase(delta, 4.8e5, not same_pair) / 2) ** 2
    out = fits.fit_cone_fringes(delta, pops, 3, 5e5, same_pair)
    assert out["rabi"] == pytest.approx(4.8e5, rel=1e-6)
    assert out["amplitude"] == pytest.approx(1.0, abs=1e-6)


def test_echo_fringes():
    delta = np.linspace(-2e5, 2e5, 101)
    pops = np.cos(np.pi * delta * 10e-6 / 2) ** 2
    out = fits.fit_echo_fringes(delta, pops, 9.5e-6)
    assert out["tau"] == pytest.approx(10e-6, rel=1e-6)
