import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvpl.model import (
    CrossCouplingWarning,
    DriveParams,
    PhysicalConfig,
    RabiConvention,
    b_parallel_from_field,
    build_composite_rotating_h,
    build_ground_state_h,
    build_h_2ls,
    build_subspace_h,
    t_two_pi,
)
from nvpl.quantum import I_MINUS, I_PLUS, I_ZERO, TWO_PI, Subspace, ket, propagate_exact, unitary_exact

rabis = st.floats(1e4, 2e6)


def test_default_field_projection():
    assert b_parallel_from_field() == pytest.approx(15 * math.cos(math.radians(54.7)))
    cfg = PhysicalConfig()
    assert cfg.zeeman == pytest.approx(2.8e6 * cfg.b_parallel)
    assert cfg.transition_splitting == pytest.approx(2 * cfg.zeeman)


def test_config_rejects_high_field_and_bad_values():
    with pytest.raises(ValueError, match="low-field"):
        PhysicalConfig(b_parallel=200.0)
    with pytest.raises(ValueError):
        PhysicalConfig(d_zfs=-1.0)
    with pytest.raises(ValueError):
        PhysicalConfig(b_parallel=-1.0)


def test_ground_state_levels():
    cfg = PhysicalConfig()
    h = build_ground_state_h(cfg) / TWO_PI
    assert h[I_ZERO, I_ZERO] == 0
    assert h[I_PLUS, I_PLUS].real == pytest.approx(cfg.d_zfs + cfg.zeeman)
    assert h[I_MINUS, I_MINUS].real == pytest.approx(cfg.d_zfs - cfg.zeeman)


def test_drive_validation():
    with pytest.raises(ValueError):
        DriveParams(Subspace.PLUS, -1.0)
    with pytest.raises(ValueError, match="10 x rabi"):
        DriveParams(Subspace.PLUS, 1e5, 1.1e6)
    # free evolution has no detuning bound
    assert not DriveParams(Subspace.PLUS, 0.0, 5e6).active


def test_composite_structure():
    d = DriveParams(Subspace.MINUS, 4e5, 1e5, 0.3)
    h = build_composite_rotating_h(drive_minus=d)
    assert np.allclose(h, h.conj().T)
    assert h[I_MINUS, I_MINUS] == pytest.approx(-TWO_PI * 1e5)
    assert h[I_ZERO, I_MINUS] == pytest.approx(TWO_PI * 2e5 * np.exp(-0.3j))
    assert h[I_PLUS, I_ZERO] == 0


def test_composite_rejects_wrong_subspace_and_simultaneous_drives():
    p = DriveParams(Subspace.PLUS, 1e5)
    m = DriveParams(Subspace.MINUS, 1e5)
    with pytest.raises(ValueError):
        build_composite_rotating_h(drive_plus=m)
    with pytest.raises(ValueError):
        build_composite_rotating_h(drive_minus=p)
    with pytest.raises(ValueError, match="never simultaneous"):
        build_composite_rotating_h(drive_plus=p, drive_minus=m)
    # a detuned but undriven spectator is allowed
    build_composite_rotating_h(drive_plus=p, drive_minus=DriveParams(Subspace.MINUS, 0.0, 2e5))


def test_cross_coupling_warning():
    with pytest.warns(CrossCouplingWarning):
        build_composite_rotating_h(drive_plus=DriveParams(Subspace.PLUS, 3e6))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build_composite_rotating_h(drive_plus=DriveParams(Subspace.PLUS, 5e5))


@given(rabis, st.floats(-1, 1), st.floats(0, 2 * math.pi), st.sampled_from(list(Subspace)))
def test_subspace_block_matches_composite(rabi, ratio, phase, sub):
    d = DriveParams(sub, rabi, ratio * rabi, phase)
    kw = {"drive_plus": d} if sub is Subspace.PLUS else {"drive_minus": d}
    h3 = build_composite_rotating_h(**kw)
    idx = np.ix_(sub.indices, sub.indices)
    assert np.allclose(h3[idx], build_subspace_h(d), atol=1e-6)


def test_literal_convention_slows_rotation_by_sqrt2():
    d = DriveParams(Subspace.PLUS, 5e5)
    h_eff = build_composite_rotating_h(drive_plus=d)
    h_lit = build_composite_rotating_h(drive_plus=d, convention=RabiConvention.LITERAL)
    assert np.allclose(h_lit * math.sqrt(2), h_eff)
    # a nominal pi pulse transfers fully only in the effective convention
    t = 0.5 / 5e5
    assert abs(propagate_exact(h_eff, ket(0), t)[I_PLUS]) ** 2 == pytest.approx(1.0)
    assert abs(propagate_exact(h_lit, ket(0), t)[I_PLUS]) ** 2 == pytest.approx(
        math.sin(math.pi / (2 * math.sqrt(2))) ** 2
    )


def test_h_2ls():
    h = build_h_2ls(1e5, 3e5)
    assert np.allclose(np.linalg.eigvalsh(h), [-TWO_PI * math.hypot(1e5, 3e5) / 2, TWO_PI * math.hypot(1e5, 3e5) / 2])


@given(rabis, st.floats(-5, 5))
def test_t_two_pi_is_a_full_period(rabi, ratio):
    d = DriveParams(Subspace.MINUS, rabi, ratio * rabi)
    t = t_two_pi(d)
    assert t == pytest.approx(1 / math.hypot(rabi, ratio * rabi))
    u = unitary_exact(build_subspace_h(d), t)
    # proportional to the identity
    assert abs(u[0, 1]) < 1e-9
    assert abs(abs(u[0, 0]) - 1) < 1e-9


def test_t_two_pi_undefined():
    with pytest.raises(ValueError):
        t_two_pi(DriveParams(Subspace.PLUS))
