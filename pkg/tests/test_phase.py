import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvpl import phase as ph
from nvpl.model import DriveParams, build_composite_rotating_h, t_two_pi
from nvpl.quantum import TWO_PI, FrameTag, Subspace, Trajectory, ket, step_segment

OMEGA = 500e3


def cone(delta, dt=1e-9, periods=1.0, initial=None):
    drive = DriveParams(Subspace.PLUS, OMEGA, delta)
    h = build_composite_rotating_h(drive_plus=drive)
    traj = step_segment(h, ket(0) if initial is None else initial, periods * t_two_pi(drive), dt)
    return traj.restrict(Subspace.PLUS)


def two_level_loop(seed):
    # any state under a constant Hamiltonian is cyclic after one beat period
    r = np.random.default_rng(seed)
    a = r.normal(size=(2, 2)) + 1j * r.normal(size=(2, 2))
    h = TWO_PI * 3e5 * (a + a.conj().T) / 2
    gap = np.ptp(np.linalg.eigvalsh(h))
    psi = r.normal(size=2) + 1j * r.normal(size=2)
    psi /= np.linalg.norm(psi)
    t = TWO_PI / gap
    n = int(np.ceil(t / 2e-10))
    times = np.linspace(0, t, n + 1)
    w, v = np.linalg.eigh(h)
    states = np.array([v @ (np.exp(-1j * w * tk) * (v.conj().T @ psi)) for tk in times])
    return Trajectory(times, states, np.repeat(h[None], n + 1, axis=0), subspace=Subspace.PLUS)


@given(st.floats(-1e3, 1e3))
def test_wrap_range(a):
    w = ph.wrap(a)
    assert -math.pi < w <= math.pi
    assert abs(math.remainder(w - a, 2 * math.pi)) < 1e-9


def test_wrap_edges():
    assert ph.wrap(math.pi) == pytest.approx(math.pi)
    assert ph.wrap(-math.pi) == pytest.approx(math.pi)
    assert ph.wrap_diff(0.1, 2 * math.pi) == pytest.approx(0.1)


def test_needs_two_samples():
    traj = Trajectory(np.zeros(1), np.array([[1, 0]], complex), np.zeros((1, 2, 2)))
    with pytest.raises(ValueError):
        ph.total_phase(traj)
    with pytest.raises(ValueError):
        ph.dynamic_phase(traj)


def test_resonant_cycle_takes_plus_pi_at_the_node():
    # the overlap with |0> passes through zero at half period; the jump counts as +pi
    tp = ph.total_phase(cone(0.0))
    assert tp.phase == pytest.approx(math.pi, abs=1e-9)
    assert tp.cyclic


def test_dynamic_phase_of_an_eigenstate():
    h = np.diag([TWO_PI * 2e5, -TWO_PI * 2e5]).astype(complex)
    times = np.linspace(0, 1e-6, 1001)
    states = np.array([[np.exp(-1j * TWO_PI * 2e5 * t), 0] for t in times])
    traj = Trajectory(times, states, np.repeat(h[None], len(times), axis=0))
    assert ph.dynamic_phase(traj) == pytest.approx(-TWO_PI * 2e5 * 1e-6)
    dec = ph.decompose(traj)
    assert abs(dec.phi_aa) < 1e-9


@pytest.mark.parametrize("ratio", [-1.5, -0.5, 0.5, 1.0, 2.0])
def test_cone_phases(ratio):
    d = ratio * OMEGA
    x = d / math.hypot(d, OMEGA)
    dec = ph.decompose(cone(d))
    assert dec.cyclic
    assert abs(dec.phi_dyn) < 1e-9
    assert abs(ph.wrap_diff(dec.phi_aa, math.pi * (1 + x))) < 1e-9
    assert abs(ph.wrap_diff(dec.phi_aa_connection, dec.phi_aa)) < 1e-8
    assert dec.solid_angle == pytest.approx(2 * math.pi * (1 + x), abs=1e-8)


def test_analytic_lift_closes():
    # exp(-i f) psi with f(t) = pi (delta + W) t returns to |0> after one period
    d = 500e3
    w = math.hypot(d, OMEGA)
    traj = cone(d)
    f = math.pi * (d + w) * traj.times
    lifted = traj.states * np.exp(-1j * f)[:, None]
    assert np.allclose(lifted[-1], lifted[0], atol=1e-10)
    assert f[-1] == pytest.approx(math.pi * (1 + 1 / math.sqrt(2)))
    assert ph.connection_phase(traj, f[-1]) == pytest.approx(f[-1], abs=1e-8)


def test_estimators_converge_with_step():
    fine, coarse = ph.decompose(cone(300e3, 0.5e-9)), ph.decompose(cone(300e3, 1e-9))
    for name in ("phi_total", "phi_dyn", "phi_aa_connection", "solid_angle"):
        assert abs(getattr(fine, name) - getattr(coarse, name)) < 1e-8


def test_routes_disagreeing_raise():
    traj = cone(300e3)
    # an energy offset the states never saw breaks total = dynamic + geometric
    bad = Trajectory(traj.times, traj.states, traj.hamiltonians + TWO_PI * 1e5 * np.eye(2), subspace=traj.subspace)
    with pytest.raises(ph.PhaseConsistencyError):
        ph.decompose(bad)
    with pytest.raises(ph.PhaseConsistencyError):
        ph.aa_phase(bad)
    assert ph.decompose(bad, check=False).phi_dyn != pytest.approx(0.0)


def test_non_cyclic_path_is_reported_not_raised():
    dec = ph.decompose(cone(300e3, periods=0.37))
    assert not dec.cyclic
    assert dec.phi_total + 0 == pytest.approx(dec.phi_dyn + dec.phi_aa)
    assert set(dec.as_dict()) >= {"phi_total", "phi_dyn", "phi_aa", "solid_angle", "cyclic"}


def test_solid_angle_needs_two_levels():
    drive = DriveParams(Subspace.PLUS, OMEGA, 1e5)
    traj = step_segment(build_composite_rotating_h(drive_plus=drive), ket(0), 1e-6, 1e-9)
    with pytest.raises(ValueError, match="two-level"):
        ph.swept_solid_angle(traj)
    assert math.isnan(ph.decompose(traj).solid_angle)


def test_check_solid_angle_on_cone():
    c = ph.check_solid_angle(cone(-200e3))
    assert abs(c.residual) < 1e-8
    assert c.phi_aa == pytest.approx(c.half_solid_angle + 2 * math.pi * c.branch, abs=1e-8)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25)
def test_invariants_on_random_loops(seed):
    traj = two_level_loop(seed)
    dec = ph.decompose(traj)
    assert dec.cyclic
    assert dec.phi_total == pytest.approx(dec.phi_dyn + dec.phi_aa, abs=1e-12)
    assert abs(ph.wrap_diff(dec.phi_aa_connection, dec.phi_aa)) < 1e-6
    assert abs(ph.wrap_diff(dec.phi_aa, dec.solid_angle / 2)) < 1e-6


@given(st.integers(0, 2**31 - 1), st.integers(-3, 3))
@settings(max_examples=25)
def test_gauge_leaves_geometric_phase(seed, k):
    traj = two_level_loop(seed)
    s = (traj.times - traj.times[0]) / traj.duration
    alpha = 2 * math.pi * k * s + 0.8 * np.sin(math.pi * s) ** 2
    before, after = ph.decompose(traj), ph.decompose(ph.apply_gauge(traj, alpha))
    assert abs(ph.wrap_diff(after.phi_aa, before.phi_aa)) < 1e-6
    assert after.phi_total == pytest.approx(before.phi_total + 2 * math.pi * k, abs=1e-6)


def test_apply_gauge_shape_check():
    traj = cone(1e5)
    with pytest.raises(ValueError):
        ph.apply_gauge(traj, np.zeros(3))


def test_frame_transform_round_trip():
    traj = cone(250e3)
    other = FrameTag().with_detuning(Subspace.PLUS, 100e3)
    moved = ph.frame_transform(traj, other)
    assert moved.frame.detuning(Subspace.PLUS) == 100e3
    assert np.allclose(np.abs(moved.states), np.abs(traj.states))
    back = ph.frame_transform(moved, traj.frame)
    assert np.allclose(back.states, traj.states, atol=1e-12)
    assert np.allclose(back.hamiltonians, traj.hamiltonians, atol=1e-6)


def test_frame_transform_needs_subspace():
    traj = Trajectory(np.zeros(2), np.zeros((2, 2), complex), np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        ph.frame_transform(traj, FrameTag())
