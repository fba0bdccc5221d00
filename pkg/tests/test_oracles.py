"""Closed-form values checked against the step-integrator oracle."""

import math

import numpy as np
import pytest

from nvpl import phase as ph
from nvpl.fits import fit_fringe_period
from nvpl.model import (
    DriveParams,
    PhysicalConfig,
    build_composite_rotating_h,
    build_ground_state_h,
    build_subspace_h,
    t_two_pi,
)
from nvpl.quantum import TWO_PI, FrameTag, Subspace, global_phase_between, ket, step_segment
from nvpl.sequences import (
    BUILDERS,
    Mode,
    build_free_fringes,
    build_nested_spin_echo,
    build_sequence1,
    build_sequence2,
    build_sequence3,
    build_spin_echo_plus,
    run,
    sweep,
)

OMEGA = 500e3
ROOT2 = math.sqrt(2)

# deviation of the finite-pulse echo phase from pi + delta*tau/2
# (500 kHz Rabi, 50 kHz detuning, tau = 10 us), pinned from the integrator
FINITE_ECHO_DEVIATION = 0.4319187717672772
FINITE_ECHO_OVERLAP = 0.9953727868259825


def test_cone_phase_from_integrator():
    drive = DriveParams(Subspace.PLUS, OMEGA, OMEGA)
    traj = step_segment(build_composite_rotating_h(drive_plus=drive), ket(0), t_two_pi(drive), 1e-9)
    g = global_phase_between(ket(0), traj.final)
    assert g.overlap_magnitude == pytest.approx(1.0, abs=1e-9)
    assert abs(ph.wrap_diff(g.phase, math.pi * (1 + 1 / ROOT2))) < 1e-9


def test_transition_splitting_at_default_field():
    cfg = PhysicalConfig()
    assert cfg.transition_splitting == pytest.approx(2 * 2.8e6 * 15 * math.cos(math.radians(54.7)))
    assert cfg.transition_splitting == pytest.approx(48.5e6, rel=2e-3)
    h = build_ground_state_h(cfg) / TWO_PI
    assert (h[0, 0] - h[2, 2]).real == pytest.approx(cfg.transition_splitting)


def test_generalized_rabi_is_the_eigenvalue_gap():
    h = build_subspace_h(DriveParams(Subspace.PLUS, OMEGA, OMEGA))
    gap = np.ptp(np.linalg.eigvalsh(h)) / TWO_PI
    assert gap == pytest.approx(math.hypot(OMEGA, OMEGA))


def test_t_two_pi_and_first_return():
    drive = DriveParams(Subspace.PLUS, OMEGA, OMEGA)
    assert t_two_pi(drive) == pytest.approx(2.0 / ROOT2 * 1e-6)
    traj = step_segment(build_composite_rotating_h(drive_plus=drive), ket(0), 2e-6, 1e-9)
    overlap = np.abs(traj.states[:, 1])
    # first return of |<psi(t)|psi(0)>| to one after leaving it
    k = np.argmax(overlap[100:]) + 100
    assert traj.times[k] == pytest.approx(t_two_pi(drive), abs=1e-9)


def test_nested_echo_dark_point():
    r = run(build_nested_spin_echo(100e3, 10e-6), trajectory=False)
    assert r.population0 == pytest.approx(0.0, abs=1e-12)


def test_finite_echo_deviation_is_pinned():
    r = run(build_spin_echo_plus(50e3, 10e-6, OMEGA, mode=Mode.FINITE), trajectory=False)
    g = global_phase_between(ket(+1), r.final)
    assert ph.wrap_diff(g.phase, math.pi + math.pi * 50e3 * 10e-6) == pytest.approx(FINITE_ECHO_DEVIATION, abs=1e-9)
    assert g.overlap_magnitude == pytest.approx(FINITE_ECHO_OVERLAP, abs=1e-9)


def test_hard_echo_at_zero_detuning():
    g = global_phase_between(ket(+1), run(build_spin_echo_plus(0.0, 7e-6), trajectory=False).final)
    assert abs(ph.wrap_diff(g.phase, math.pi)) < 1e-12


def test_cone_at_root3():
    d = math.sqrt(3) * OMEGA
    phi = math.pi * (1 + math.sqrt(3) / 2)
    r = run(build_sequence1(d, OMEGA, 1))
    dec = r.analyze("C-pulse")
    assert abs(ph.wrap_diff(dec.phi_aa, phi)) < 1e-6
    # the readout follows sin^2(phi/2), the Ramsey projection of a pi(1+x) phase
    assert r.population0 == pytest.approx(math.sin(phi / 2) ** 2, abs=1e-9)


def test_cone_two_cycles_population():
    r = run(build_sequence1(OMEGA, OMEGA, 2), trajectory=False)
    assert r.population0 == pytest.approx(math.sin(math.pi * (1 + 1 / ROOT2)) ** 2, abs=1e-9)
    assert r.population0 == pytest.approx(0.633127671020708, abs=1e-12)


@pytest.mark.parametrize("n", [1, 3, 5])
def test_total_phase_keeps_windings(n):
    one = run(build_sequence1(OMEGA, OMEGA, 1)).analyze("C-pulse").phi_total
    many = run(build_sequence1(OMEGA, OMEGA, n)).analyze("C-pulse").phi_total
    assert abs(ph.wrap_diff(one, math.pi * (1 + 1 / ROOT2))) < 1e-9
    assert many == pytest.approx(n * one, abs=1e-8)


def test_sequence2_population_flat_in_phi0():
    phis = np.linspace(0, 2 * np.pi, 32, endpoint=False)
    res = sweep("seq2", "phi0", phis, {"delta": 0.5 * OMEGA}, analyze=False)
    assert np.std(res.population0) < 1e-9


def test_free_segment_phases_at_equal_detuning():
    dec = run(build_sequence3(OMEGA, OMEGA)).analyze("free")
    assert dec.phi_dyn == pytest.approx(math.pi, abs=1e-6)
    assert abs(ph.wrap_diff(dec.phi_aa, -math.pi)) < 1e-6
    assert abs(ph.wrap(dec.phi_dyn + dec.phi_aa)) < 1e-6


@pytest.mark.parametrize(
    "builder, kwargs",
    [
        ("nested_se", {"tau_se": 4e-6}),
        ("seq1", {"n_cycles": 2}),
        ("seq2", {"phi0": 0.4}),
        ("seq3", {}),
        ("seq4", {"eta": 0.3}),
        ("free_fringes", {"tau": 2e-6}),
    ],
)
@pytest.mark.parametrize("ratio", [0.05, -0.05, 0.02])
@pytest.mark.filterwarnings("ignore::nvpl.model.CrossCouplingWarning")
def test_hard_and_finite_converge_for_strong_drive(builder, kwargs, ratio):
    delta = 100e3 if builder in ("seq3", "seq4") else 50e3
    delta = math.copysign(delta, ratio)
    rabi = abs(delta / ratio)
    make = BUILDERS[builder]
    hard = run(make(delta=delta, rabi=rabi, **kwargs), 2e-10, trajectory=False).population0
    finite = run(make(delta=delta, rabi=rabi, mode=Mode.FINITE, **kwargs), 2e-10, trajectory=False).population0
    assert abs(hard - finite) < 0.05


@pytest.mark.parametrize("ratio", [-2.0, -0.7, -0.2, 0.0, 0.3, 1.0, 3.0])
def test_connection_matches_difference(ratio):
    dec = run(build_sequence1(ratio * OMEGA, OMEGA, 1)).analyze("C-pulse")
    assert abs(ph.wrap_diff(dec.phi_aa_connection, dec.phi_aa)) < 1e-3


@pytest.mark.parametrize("delta, period", [(100e3, 10e-6), (250e3, 4e-6), (500e3, 2e-6)])
def test_free_fringe_periods(delta, period):
    taus = np.linspace(0, 10e-6, 201)
    pops = [run(build_free_fringes(delta, t), trajectory=False).population0 for t in taus]
    assert fit_fringe_period(taus, pops, period)["period"] == pytest.approx(period, rel=1e-3)


@pytest.mark.parametrize("ratio", [0.25, 1.0, -1.5])
@pytest.mark.parametrize("phi0", [0.0, 0.9, 2.5, 5.1])
def test_sequence2_global_phase_in_detuned_frame(ratio, phi0):
    d = ratio * OMEGA
    r = run(build_sequence2(d, OMEGA, 1, phi0))
    detuned = ph.frame_transform(r.segment_trajectory("C-pulse", reference=True), FrameTag(minus=d))
    g = global_phase_between(detuned.initial, detuned.final)
    assert g.overlap_magnitude == pytest.approx(1.0, abs=1e-9)
    assert abs(ph.wrap_diff(g.phase, math.pi * (1 + d / math.hypot(d, OMEGA)))) < 1e-8
