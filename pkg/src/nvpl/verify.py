"""Acceptance checks against closed-form results.

Each ``criterion_*`` function returns a :class:`Criterion` made of one or
more :class:`Check` clauses. A criterion passes only if every clause passes.
Both ``nvpl verify`` and the acceptance test suite call these functions.
"""

from __future__ import annotations

import math
import tempfile
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import phase as ph
from . import seqfile
from .fits import fit_fringe_period, fit_per_cycle_phase
from .model import RabiConvention
from .quantum import FrameTag, global_phase_between, ket, unitary_exact
from .sequences import (
    DEFAULT_RABI,
    Mode,
    Model,
    build_free_fringes,
    build_nested_spin_echo,
    build_sequence1,
    build_sequence2,
    build_sequence3,
    build_sequence4,
    build_spin_echo_plus,
    Schedule,
    run,
    schedules_match,
    segment_hamiltonian,
)

OMEGA = DEFAULT_RABI
ECHO_DETUNINGS = np.linspace(-200e3, 200e3, 9)
ECHO_TAUS = (5e-6, 10e-6, 20e-6)
CONE_RATIOS = np.linspace(-3.0, 3.0, 25)
CYCLES = (1, 2, 3, 4)

# finite-pulse nested echo, Omega = 500 kHz, tau_se = 10 us, no padding
FINITE_NESTED_PINS = {
    -200e3: 0.6799522461471237,
    -100e3: 0.014417559053613188,
    0.0: 0.9999999999999987,
    100e3: 0.014417559053613208,
    200e3: 0.6799522461471235,
}


@dataclass
class Check:
    name: str
    measured: float
    expected: str
    tolerance: float
    passed: bool

    def line(self) -> str:
        mark = "ok" if self.passed else "FAIL"
        return f"{self.name}: measured {self.measured:.3e} vs {self.expected} (tol {self.tolerance:.12g}) {mark}"


@dataclass
class Criterion:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name: str, measured: float, expected: str, tolerance: float, at_most: bool = True) -> None:
        """Record a clause; ``at_most`` means pass iff ``measured <= tolerance``."""
        ok = measured <= tolerance if at_most else measured >= tolerance
        self.checks.append(Check(name, float(measured), expected, tolerance, bool(ok and np.isfinite(measured))))

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:>2}. {self.title}"

    def report(self) -> str:
        lines = [self.summary() + f"  ({self.seconds:.1f} s)"]
        lines += ["      " + c.line() for c in self.checks]
        lines += ["      note: " + n for n in self.notes]
        return "\n".join(lines)


def _x(delta: float, rabi: float = OMEGA) -> float:
    return delta / math.hypot(delta, rabi)


def _cos_theta(delta: float, rabi: float = OMEGA) -> float:
    return (rabi**2 - delta**2) / (rabi**2 + delta**2)


def _sin_theta(delta: float, rabi: float = OMEGA) -> float:
    return 2 * rabi * delta / (rabi**2 + delta**2)


@dataclass(frozen=True)
class Settings:
    """Integrator step and coupling convention applied to every simulated run."""

    dt: float = 1e-9
    convention: RabiConvention = RabiConvention.EFFECTIVE

    def run(self, schedule: Schedule, trajectory: bool = True, dt: float | None = None):
        return run(schedule, dt or self.dt, convention=self.convention, trajectory=trajectory)


DEFAULT = Settings()


# ---------------------------------------------------------------- 1 - 3


def criterion_1(s: Settings = DEFAULT) -> Criterion:
    c = Criterion(1, "spin-echo global phase pi + delta*tau/2 on {0,+1}")
    errs, mags = [], []
    for d in ECHO_DETUNINGS:
        for tau in ECHO_TAUS:
            r = s.run(build_spin_echo_plus(d, tau), trajectory=False)
            g = global_phase_between(ket(+1), r.final)
            errs.append(ph.wrap_diff(g.phase, math.pi + math.pi * d * tau))
            mags.append(g.overlap_magnitude)
    c.add("phase error", np.max(np.abs(errs)), "pi + delta*tau/2", 1e-9)
    c.add("1 - |overlap|", 1 - min(mags), "0", 1e-12)
    return c


def criterion_2(s: Settings = DEFAULT) -> Criterion:
    c = Criterion(2, "symmetric two-level echo global phase pi")
    errs, mags = [], []
    for d in ECHO_DETUNINGS:
        for tau in ECHO_TAUS:
            r = s.run(build_spin_echo_plus(d, tau, model=Model.TWO_LEVEL), trajectory=False)
            g = global_phase_between(ket(+1), r.final)
            errs.append(ph.wrap_diff(g.phase, math.pi))
            mags.append(g.overlap_magnitude)
    c.add("phase error", np.max(np.abs(errs)), "pi", 1e-9)
    c.add("1 - |overlap|", 1 - min(mags), "0", 1e-12)
    return c


def criterion_3(s: Settings = DEFAULT) -> Criterion:
    c = Criterion(3, "nested spin-echo population cos^2(delta*tau_se/4)")
    errs = []
    for d in ECHO_DETUNINGS:
        for tau in ECHO_TAUS:
            r = s.run(build_nested_spin_echo(d, tau, tau + 2e-6), trajectory=False)
            errs.append(r.population0 - math.cos(math.pi * d * tau / 2) ** 2)
    c.add("hard-pulse population error", np.max(np.abs(errs)), "cos^2(delta*tau/4)", 1e-9)
    pinned = []
    for d, value in FINITE_NESTED_PINS.items():
        r = s.run(build_nested_spin_echo(d, 10e-6, None, OMEGA, Mode.FINITE), trajectory=False)
        pinned.append(r.population0 - value)
    c.add("finite-pulse offset vs pinned values", np.max(np.abs(pinned)), "regression pins", 1e-9)
    return c


# ---------------------------------------------------------------- 4 - 7


def criterion_4(s: Settings = DEFAULT) -> Criterion:
    c = Criterion(4, "sequence 1: cone population and phases over N and delta/Omega")
    pop_err, sin_err, dyn_err, aa_err = [], [], [], []
    for ratio in CONE_RATIOS:
        d = ratio * OMEGA
        phi_t = math.pi * (1 + _x(d))
        for n in CYCLES:
            r = s.run(build_sequence1(d, OMEGA, n))
            dec = r.analyze("C-pulse")
            pop_err.append(r.population0 - math.cos(n * phi_t) ** 2)
            sin_err.append(r.population0 - math.sin(n * phi_t / 2) ** 2)
            dyn_err.append(dec.phi_dyn)
            aa_err.append(ph.wrap_diff(dec.phi_aa, n * phi_t))
    c.add("population vs cos^2(N*phi_AA)", np.max(np.abs(pop_err)), "cos^2(N pi (1+x))", 1e-6)
    c.add("phi_dyn", np.max(np.abs(dyn_err)), "0", 1e-6)
    c.add("phi_AA error (mod 2 pi)", np.max(np.abs(aa_err)), "N pi (1+x)", 1e-6)
    c.notes.append(
        f"population vs sin^2(N*phi_AA/2): max error {np.max(np.abs(sin_err)):.3e} "
        "(the form the simulated readout follows)"
    )
    return c


def criterion_5(s: Settings = DEFAULT, ratio: float = 0.5) -> Criterion:
    c = Criterion(5, "sequence 2: drive-phase independence and phase split")
    d = ratio * OMEGA
    w = math.hypot(d, OMEGA)
    phis = np.linspace(0, 2 * np.pi, 32, endpoint=False)
    pops, dyn_err, aa_err, sums = [], [], [], []
    for phi0 in phis:
        r = s.run(build_sequence2(d, OMEGA, 1, phi0))
        dec = r.analyze("C-pulse")
        pops.append(r.population0)
        # the closed forms use the opposite sign for the drive phase
        sin_p = math.sin(-phi0)
        dyn_err.append(dec.phi_dyn - math.pi * (d - OMEGA * sin_p) / w)
        aa_err.append(ph.wrap_diff(dec.phi_aa, math.pi * (1 + OMEGA * sin_p / w)))
        sums.append(dec.phi_dyn + dec.phi_aa)
    c.add("population spread", np.ptp(pops), "0", 1e-9)
    c.add("phi_dyn error", np.max(np.abs(dyn_err)), "pi (delta - Omega sin phi0)/W", 1e-5)
    c.add("phi_AA error (mod 2 pi)", np.max(np.abs(aa_err)), "pi (1 + Omega sin phi0/W)", 1e-5)
    c.add("phi_dyn + phi_AA spread", np.max(np.abs(ph.wrap_diff(sums, sums[0]))), "constant", 1e-6)

    cycles = np.arange(1, 9)
    p1 = [s.run(build_sequence1(d, OMEGA, n), trajectory=False).population0 for n in cycles]
    p2 = [s.run(build_sequence2(d, OMEGA, n, 0.3), trajectory=False).population0 for n in cycles]
    f1 = fit_per_cycle_phase(cycles, np.array(p1))
    f2 = fit_per_cycle_phase(cycles, np.array(p2))
    # the population fixes the per-cycle phase only up to sign
    gap = min(abs(ph.wrap_diff(f2, 2 * f1)), abs(ph.wrap_diff(f2, -2 * f1)))
    c.add("fitted per-cycle phase vs 2 x sequence 1", gap, "2 phi_1", 1e-6)
    c.notes.append(f"fitted per-cycle phases: sequence 1 {f1:.9f}, sequence 2 {f2:.9f} rad")
    return c


def criterion_6(s: Settings = DEFAULT) -> Criterion:
    c = Criterion(6, "sequence 3: free-precession phase cancellation and fringes")
    pop_err, dyn_err, aa_err, neg_err = [], [], [], []
    for ratio in CONE_RATIOS:
        if ratio == 0:
            continue
        d = ratio * OMEGA
        r = s.run(build_sequence3(d, OMEGA))
        ref = s.run(build_sequence1(d, OMEGA, 1), trajectory=False)
        pop_err.append(r.population0 - ref.population0)
        dec = r.analyze("free")
        expected = math.pi * (1 + _cos_theta(d))
        if ratio > 0:
            dyn_err.append(dec.phi_dyn - expected)
            aa_err.append(ph.wrap_diff(dec.phi_aa, -expected))
        else:
            # the wait lasts 1/|delta|, so both phases change sign below resonance
            neg_err.append(max(abs(dec.phi_dyn + expected), abs(ph.wrap_diff(dec.phi_aa, expected))))
    c.add("population vs sequence 1 (N=1)", np.max(np.abs(pop_err)), "equal", 1e-9)
    c.add("free phi_dyn error (delta > 0)", np.max(np.abs(dyn_err)), "pi (1 + cos theta)", 1e-6)
    c.add("free phi_AA error (delta > 0, mod 2 pi)", np.max(np.abs(aa_err)), "-pi (1 + cos theta)", 1e-6)
    c.add("free phase error (delta < 0)", max(neg_err), "-/+ pi (1 + cos theta)", 1e-6)

    worst = 0.0
    for d in (150e3, 250e3, 500e3, 1e6):
        taus = np.linspace(0, 10e-6, 401)
        pops = np.array([s.run(build_free_fringes(d, t), trajectory=False).population0 for t in taus])
        period = fit_fringe_period(taus, pops, 1 / d)["period"]
        worst = max(worst, abs(period * d - 1))
    c.add("fringe period relative error", worst, "1/delta", 1e-3)
    return c


def criterion_7(s: Settings = DEFAULT) -> Criterion:
    c = Criterion(7, "sequence 4: C-pulse phases independent of the preceding free evolution")
    spread, dyn_err, aa_err, tot_err = [], [], [], []
    for ratio in (0.25, 0.5, 1.0, 2.0, -0.5, -1.5):
        d = ratio * OMEGA
        x, w = _x(d), math.hypot(d, OMEGA)
        phi_t = math.pi * (1 + x)
        tau = 1 / abs(d)
        pops = []
        for eta in (0.0, 0.25, 0.5, 0.75, 1.0):
            r = s.run(build_sequence4(d, OMEGA, eta))
            dec = r.analyze("C-pulse")
            pops.append(r.population0)
            tau1 = (1 - eta) * tau
            dyn = math.pi * (
                x + (d * _cos_theta(d) - OMEGA * math.cos(2 * math.pi * d * tau1) * _sin_theta(d)) / w
            )
            dyn_err.append(dec.phi_dyn - dyn)
            aa_err.append(ph.wrap_diff(dec.phi_aa, phi_t - dyn))
            tot_err.append(ph.wrap_diff(dec.phi_total, phi_t))
        spread.append(np.ptp(pops))
    c.add("population spread over eta", max(spread), "0", 1e-9)
    c.add("C-pulse phi_dyn error", np.max(np.abs(dyn_err)), "closed form", 1e-5)
    c.add("C-pulse phi_AA error (mod 2 pi)", np.max(np.abs(aa_err)), "phi_T - phi_dyn", 1e-5)
    c.add("C-pulse phi_total error (mod 2 pi)", np.max(np.abs(tot_err)), "pi (1 + x)", 1e-6)
    return c


# ---------------------------------------------------------------- 8 - 11


def criterion_8(s: Settings = DEFAULT) -> Criterion:
    c = Criterion(8, "solid angle relations")
    cone_err, branches = [], set()
    for ratio in CONE_RATIOS:
        d = ratio * OMEGA
        traj = s.run(build_sequence1(d, OMEGA, 1)).segment_trajectory("C-pulse")
        chk = ph.check_solid_angle(traj)
        cone_err.append(ph.wrap_diff(2 * chk.half_solid_angle, 2 * chk.phi_aa))
        branches.add(chk.branch)
    c.add("cone: Theta vs 2 phi_AA (mod 2 pi)", np.max(np.abs(cone_err)), "2 phi_AA", 1e-3)
    seq4_err = []
    for ratio in (0.25, 1.0, 2.0):
        for eta in (0.0, 0.5):
            traj = s.run(build_sequence4(ratio * OMEGA, OMEGA, eta)).segment_trajectory("C-pulse")
            chk = ph.check_solid_angle(traj)
            seq4_err.append(ph.wrap_diff(2 * chk.half_solid_angle, 2 * chk.phi_aa))
            branches.add(chk.branch)
    c.add("sequence 4 C-pulse: Theta vs 2 phi_AA (mod 2 pi)", np.max(np.abs(seq4_err)), "2 phi_AA", 1e-3)
    free_err, reversed_err = [], []
    for ratio in CONE_RATIOS:
        if ratio == 0:
            continue
        d = ratio * OMEGA
        traj = s.run(build_sequence3(d, OMEGA)).segment_trajectory("free")
        theta = ph.swept_solid_angle(traj)
        cap = 2 * math.pi * (1 - _cos_theta(d))
        if ratio > 0:
            free_err.append(theta - cap)
        else:
            # below resonance the precession runs the other way round the same cap
            reversed_err.append(theta - (4 * math.pi - cap))
    c.add("sequence 3 free: Theta error (delta > 0)", np.max(np.abs(free_err)), "2 pi (1 - cos theta)", 1e-3)
    c.add(
        "sequence 3 free: Theta error (delta < 0)",
        np.max(np.abs(reversed_err)),
        "4 pi - 2 pi (1 - cos theta)",
        1e-3,
    )
    c.notes.append(f"branches k in phi_AA = Theta/2 + 2 pi k: {sorted(branches)}")
    return c


def _random_gauge(times: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = (times - times[0]) / (times[-1] - times[0])
    alpha = 2 * np.pi * rng.integers(-2, 3) * u + rng.uniform(-np.pi, np.pi)
    for k in range(1, 5):
        alpha = alpha + rng.normal(0, 1.0 / k) * np.sin(2 * np.pi * k * u)
        alpha = alpha + rng.normal(0, 1.0 / k) * (np.cos(2 * np.pi * k * u) - 1)
    return alpha


def criterion_9(s: Settings = DEFAULT, seed: int = 20240611) -> Criterion:
    c = Criterion(9, "gauge and frame invariance of phi_AA")
    rng = np.random.default_rng(seed)
    traj = s.run(build_sequence1(0.5 * OMEGA, OMEGA, 1)).segment_trajectory("C-pulse")
    base = ph.connection_phase(traj)
    shifts = []
    for _ in range(50):
        gauged = ph.apply_gauge(traj, _random_gauge(traj.times, rng))
        shifts.append(ph.wrap_diff(ph.connection_phase(gauged), base))
    c.add("phi_AA change under 50 closed gauges", np.max(np.abs(shifts)), "0", 1e-6)

    overlaps, frame_err = [], []
    for ratio in (0.25, 1.0, -1.5):
        d = ratio * OMEGA
        r = s.run(build_sequence2(d, OMEGA, 1, 0.9))
        resonant = r.segment_trajectory("C-pulse", reference=True)
        detuned = ph.frame_transform(resonant, FrameTag(minus=d))
        overlaps.append(1 - ph.total_phase(detuned).cyclicity_residual)
        native = ph.aa_phase(r.segment_trajectory("C-pulse"))
        frame_err.append(ph.wrap_diff(ph.aa_phase(detuned), native))
    c.add("detuned-frame endpoint overlap", min(overlaps), ">= 1 - 1e-9", 1 - 1e-9, at_most=False)
    c.add("phi_AA change under frame transform", np.max(np.abs(frame_err)), "0", 1e-5)
    return c


_PHASE_FIELDS = ("phi_total", "phi_dyn", "phi_aa", "phi_aa_connection")


def criterion_10(s: Settings = DEFAULT) -> Criterion:
    c = Criterion(10, "integrator accuracy")
    cases = [
        build_sequence1(0.5 * OMEGA, OMEGA, 2),
        build_sequence2(1.0 * OMEGA, OMEGA, 1, 0.4),
        build_sequence3(0.5 * OMEGA, OMEGA),
        build_sequence4(1.5 * OMEGA, OMEGA, 0.3),
        build_nested_spin_echo(150e3, 10e-6, 12e-6, OMEGA, Mode.FINITE),
        build_spin_echo_plus(-120e3, 5e-6, OMEGA, mode=Mode.FINITE),
    ]
    drift, exact_drift, fid, change = 0.0, 0.0, 1.0, 0.0
    for sch in cases:
        coarse = s.run(sch)
        drift = max(drift, coarse.trajectory.max_norm_drift)
        fid = min(fid, coarse.oracle_fidelity)
        for rec in coarse.records:
            if rec.hamiltonian is not None:
                u = unitary_exact(rec.hamiltonian, rec.t_end - rec.t_start)
                exact_drift = max(exact_drift, abs(np.linalg.norm(u @ rec.state_in) - 1))
        if sch.focus is not None:
            fine = s.run(sch, dt=s.dt / 2)
            a, b = coarse.analyze(sch.focus), fine.analyze(sch.focus)
            for name in _PHASE_FIELDS:
                change = max(change, abs(getattr(a, name) - getattr(b, name)))
    c.add("exact propagator norm drift", exact_drift, "0", 1e-12)
    c.add("stepped per-step norm drift", drift, "0", 1e-12)
    c.add("stepped vs exact fidelity", fid, ">= 1 - 1e-8", 1 - 1e-8, at_most=False)
    c.add("phase change on halving dt", change, "0", 1e-7)
    return c


def random_doc(rng: np.random.Generator, name: str) -> seqfile.SequenceDoc:
    """A random, syntactically valid document (semantics are not enforced)."""

    def value(lo: int, hi: int) -> float:
        mant = float(rng.uniform(1, 1000))
        if rng.random() < 0.5:
            mant = float(round(mant, int(rng.integers(0, 4))))
        return mant * 10.0 ** int(rng.integers(lo, hi))

    subs = ("plus", "minus")
    stmts = []
    for _ in range(int(rng.integers(0, 8))):
        kind = rng.integers(0, 3)
        sub = subs[int(rng.integers(0, 2))]
        sign = -1.0 if rng.random() < 0.3 else 1.0
        if kind == 0:
            angle = (math.pi / 2, math.pi, float(rng.uniform(0, 7)))[int(rng.integers(0, 3))]
            stmts.append(seqfile.PulseStmt(sub, angle, float(rng.uniform(-7, 7))))
        elif kind == 1:
            periods = float(rng.integers(1, 6)) if rng.random() < 0.5 else float(rng.uniform(0.01, 1))
            cycles, frac = (periods, None) if periods >= 1 else (None, periods)
            phase = 0.0 if rng.random() < 0.5 else float(rng.uniform(-7, 7))
            stmts.append(
                seqfile.CPulseStmt(sub, sign * value(-1, 6), value(0, 7), cycles, frac, phase)
            )
        else:
            if rng.random() < 0.5:
                stmts.append(seqfile.WaitStmt(value(-12, -4)))
            else:
                stmts.append(seqfile.WaitStmt(value(-12, -4), sub, sign * value(-1, 6)))
    return seqfile.SequenceDoc(name, tuple(stmts))


def criterion_11(s: Settings = DEFAULT, n_docs: int = 1000, seed: int = 7) -> Criterion:
    c = Criterion(11, "sequence file round trip and builder export")
    rng = np.random.default_rng(seed)
    failures = 0
    for k in range(n_docs):
        doc = random_doc(rng, f"doc{k}")
        text = seqfile.serialize(doc)
        back = seqfile.parse(text)
        if not back.ok or back.docs != [doc] or seqfile.serialize(back.docs) != text:
            failures += 1
    c.add(f"round-trip failures over {n_docs} docs", failures, "0", 0)
    mismatches = 0
    refs = seqfile.reference_schedules()
    with tempfile.TemporaryDirectory() as tmp:
        for name, path in seqfile.export_builders(tmp).items():
            parsed = seqfile.load(path)
            if not parsed.ok or not schedules_match(seqfile.to_schedule(parsed.docs[0]), refs[name]):
                mismatches += 1
    c.add("exported builder files that recompile differently", mismatches, "0", 0)
    return c


CRITERIA: dict[int, Callable[[Settings], Criterion]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
}


def evaluate(number: int, settings: Settings = DEFAULT) -> Criterion:
    """Run one criterion; an exception becomes a failed clause instead of escaping."""
    start = time.perf_counter()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = CRITERIA[number](settings)
    except Exception as exc:  # noqa: BLE001
        result = Criterion(number, "raised an exception")
        result.checks.append(Check(f"{type(exc).__name__}: {exc}", math.nan, "no error", 0.0, False))
    result.seconds = time.perf_counter() - start
    return result


def run_all(numbers=None, settings: Settings = DEFAULT) -> list[Criterion]:
    return [evaluate(n, settings) for n in (numbers or sorted(CRITERIA))]


def embedding_note() -> str:
    """How far the literal spin-1 matrix elements are from the two-level blocks."""
    seg = build_sequence1(0.5 * OMEGA, OMEGA, 1).segments[1]
    eff = segment_hamiltonian(seg, convention=RabiConvention.EFFECTIVE)
    lit = segment_hamiltonian(seg, convention=RabiConvention.LITERAL)
    ratio = abs(eff[0, 1]) / abs(lit[0, 1])
    return f"off-diagonal ratio effective/literal = {ratio:.6f} (sqrt 2 = {math.sqrt(2):.6f})"
