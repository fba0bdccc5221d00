"""Segmented pulse schedules, the reference sequence builders, and sweeps.

A schedule is a tuple of three kinds of segment:

``Pulse``
    A rotation of fixed angle (pi/2, pi, ...). In hard-pulse mode it is an
    instantaneous ideal rotation; in finite-pulse mode it lasts
    ``angle / (2 pi rabi)`` under the full subspace Hamiltonian.
``CPulse``
    A detuned drive for a fixed time, always evolved under its Hamiltonian.
    When ``frame_detuning`` differs from the drive detuning the segment is
    simulated in the drive's own frame and the state is carried back to the
    surrounding frame at its end.
``Wait``
    Free evolution with a detuning per subspace.

Every subspace is treated in one reference frame for the whole schedule;
builders set the segment detunings consistently with it.
"""

from __future__ import annotations

import enum
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from . import phase as phase_analysis
from .model import (
    DriveParams,
    PhysicalConfig,
    RabiConvention,
    build_composite_rotating_h,
    build_h_2ls,
    t_two_pi,
)
from .quantum import (
    I_MINUS,
    I_PLUS,
    I_ZERO,
    TWO_PI,
    FrameTag,
    Subspace,
    Trajectory,
    embed,
    fidelity,
    ket,
    rotation,
    shift_frame,
    step_segment,
    unitary_exact,
)

DEFAULT_RABI = 500e3
WAIT_CAP = 10e-6


class Mode(enum.Enum):
    HARD = "hard"
    FINITE = "finite"


class Model(enum.Enum):
    """Which Hamiltonian drives the {0,+1} block."""

    NV = "nv"
    TWO_LEVEL = "2ls"


@dataclass(frozen=True)
class Pulse:
    subspace: Subspace
    angle: float
    phase: float = 0.0
    rabi: float = DEFAULT_RABI
    detuning: float = 0.0
    spectator_detuning: float = 0.0
    label: str = ""

    @property
    def drive(self) -> DriveParams:
        return DriveParams(self.subspace, self.rabi, self.detuning, self.phase)

    @property
    def finite_duration(self) -> float:
        return self.angle / (TWO_PI * self.rabi)

    def duration(self, mode: Mode) -> float:
        return self.finite_duration if mode is Mode.FINITE else 0.0


@dataclass(frozen=True)
class CPulse:
    drive: DriveParams
    length: float
    frame_detuning: float | None = None
    spectator_detuning: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.length < 0:
            raise ValueError(f"C-pulse duration must be non-negative, got {self.length}")
        if self.frame_detuning is not None and self.frame_detuning == self.drive.detuning:
            object.__setattr__(self, "frame_detuning", None)

    @property
    def subspace(self) -> Subspace:
        return self.drive.subspace

    @property
    def needs_reframe(self) -> bool:
        return self.frame_detuning is not None and self.frame_detuning != self.drive.detuning

    def duration(self, mode: Mode) -> float:
        return self.length


@dataclass(frozen=True)
class Wait:
    length: float
    detuning_plus: float = 0.0
    detuning_minus: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.length < 0:
            raise ValueError(f"wait duration must be non-negative, got {self.length}")

    def duration(self, mode: Mode) -> float:
        return self.length

    @property
    def subspace(self) -> Subspace:
        """Subspace whose free precession this wait describes."""
        if self.detuning_plus == 0.0 and self.detuning_minus != 0.0:
            return Subspace.MINUS
        return Subspace.PLUS


Segment = Pulse | CPulse | Wait


@dataclass(frozen=True, eq=False)
class Schedule:
    segments: tuple[Segment, ...]
    initial_state: np.ndarray = field(default_factory=lambda: ket(0))
    mode: Mode = Mode.HARD
    model: Model = Model.NV
    name: str = ""
    focus: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "initial_state", np.asarray(self.initial_state, dtype=complex))

    def with_mode(self, mode: Mode) -> "Schedule":
        return replace(self, mode=mode)

    @property
    def total_duration(self) -> float:
        return sum(seg.duration(self.mode) for seg in self.segments)


def schedules_match(a: Schedule, b: Schedule, rtol: float = 1e-12) -> bool:
    """Segment-for-segment equality with a relative tolerance on durations."""
    if len(a.segments) != len(b.segments) or a.mode is not b.mode or a.model is not b.model:
        return False
    if not np.allclose(a.initial_state, b.initial_state, rtol=0, atol=1e-15):
        return False
    for x, y in zip(a.segments, b.segments):
        if type(x) is not type(y):
            return False
        if isinstance(x, Wait):
            if not math.isclose(x.length, y.length, rel_tol=rtol, abs_tol=0.0):
                return False
            if (x.detuning_plus, x.detuning_minus) != (y.detuning_plus, y.detuning_minus):
                return False
        elif isinstance(x, CPulse):
            if not math.isclose(x.length, y.length, rel_tol=rtol, abs_tol=0.0):
                return False
            if (x.drive, x.frame_detuning, x.spectator_detuning) != (
                y.drive,
                y.frame_detuning,
                y.spectator_detuning,
            ):
                return False
        else:
            if replace(x, label="") != replace(y, label=""):
                return False
    return True


class SegmentError(RuntimeError):
    """A propagation failure, tagged with the offending segment."""


@dataclass(eq=False)
class SegmentRecord:
    index: int
    segment: Segment
    t_start: float
    t_end: float
    state_in: np.ndarray
    state_out: np.ndarray
    hamiltonian: np.ndarray | None
    frame: FrameTag
    trajectory: Trajectory | None = None
    reference_trajectory: Trajectory | None = None

    @property
    def label(self) -> str:
        return self.segment.label

    @property
    def subspace(self) -> Subspace:
        return self.segment.subspace


@dataclass(eq=False)
class RunResult:
    schedule: Schedule
    records: list[SegmentRecord]
    final: np.ndarray
    stepped_final: np.ndarray | None
    trajectory: Trajectory | None

    @property
    def population0(self) -> float:
        return float(abs(self.final[I_ZERO]) ** 2)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.final) ** 2

    @property
    def oracle_fidelity(self) -> float:
        if self.stepped_final is None:
            return float("nan")
        return fidelity(self.final, self.stepped_final)

    def segment(self, label: str) -> SegmentRecord:
        for rec in self.records:
            if rec.label == label:
                return rec
        raise KeyError(f"no segment labelled {label!r}")

    def segment_trajectory(
        self, label: str, subspace: Subspace | None = None, reference: bool = False
    ) -> Trajectory:
        """Two-level trajectory of one segment.

        By default it is expressed in the frame the segment was simulated in;
        ``reference=True`` gives it in the schedule's common frame instead.
        """
        rec = self.segment(label)
        traj = rec.reference_trajectory if reference else rec.trajectory
        if traj is None:
            raise ValueError(f"segment {label!r} has no stepped trajectory (hard pulse or trajectory=False)")
        return traj.restrict(subspace or rec.subspace)

    def analyze(self, label: str, subspace: Subspace | None = None) -> "phase_analysis.PhaseDecomposition":
        return phase_analysis.decompose(self.segment_trajectory(label, subspace))


def _wait_h(seg: Wait) -> np.ndarray:
    return np.diag([-TWO_PI * seg.detuning_plus, 0.0, -TWO_PI * seg.detuning_minus]).astype(complex)


def _driven_h(
    drive: DriveParams,
    spectator: float,
    model: Model,
    cfg: PhysicalConfig,
    convention: RabiConvention,
) -> np.ndarray:
    other = Subspace.MINUS if drive.subspace is Subspace.PLUS else Subspace.PLUS
    idle = DriveParams(other, 0.0, spectator)
    if drive.subspace is Subspace.PLUS:
        h = build_composite_rotating_h(cfg, drive, idle, convention)
    else:
        h = build_composite_rotating_h(cfg, idle, drive, convention)
    if model is Model.TWO_LEVEL and drive.subspace is Subspace.PLUS:
        h[np.ix_([I_PLUS, I_ZERO], [I_PLUS, I_ZERO])] = build_h_2ls(drive.rabi, drive.detuning)
    return h


def _wait_h_model(seg: Wait, model: Model) -> np.ndarray:
    h = _wait_h(seg)
    if model is Model.TWO_LEVEL:
        h[np.ix_([I_PLUS, I_ZERO], [I_PLUS, I_ZERO])] = build_h_2ls(0.0, seg.detuning_plus)
    return h


def segment_hamiltonian(
    seg: Segment,
    model: Model = Model.NV,
    cfg: PhysicalConfig | None = None,
    convention: RabiConvention = RabiConvention.EFFECTIVE,
) -> np.ndarray:
    """Three-level Hamiltonian (rad/s) in force during a timed segment."""
    cfg = cfg or PhysicalConfig()
    if isinstance(seg, Wait):
        return _wait_h_model(seg, model)
    return _driven_h(seg.drive, seg.spectator_detuning, model, cfg, convention)


def _reframe_matrix(seg: CPulse, elapsed: float) -> np.ndarray:
    level = I_PLUS if seg.subspace is Subspace.PLUS else I_MINUS
    w = np.ones(3, dtype=complex)
    w[level] = np.exp(-1j * TWO_PI * (seg.drive.detuning - seg.frame_detuning) * elapsed)
    return np.diag(w)


def run(
    schedule: Schedule,
    dt: float = 1e-9,
    *,
    convention: RabiConvention = RabiConvention.EFFECTIVE,
    config: PhysicalConfig | None = None,
    trajectory: bool = True,
) -> RunResult:
    """Execute a schedule.

    The final state comes from exact per-segment propagators. With
    ``trajectory=True`` the schedule is also integrated step by step; that
    route provides the sampled trajectories for phase analysis and an
    independent final state (``stepped_final``).
    """
    cfg = config or PhysicalConfig()
    mode, model = schedule.mode, schedule.model
    psi = schedule.initial_state.copy()
    psi_step = psi.copy() if trajectory else None
    t = 0.0
    records: list[SegmentRecord] = []
    pieces: list[Trajectory] = []
    if trajectory:
        pieces.append(_point(t, psi, np.zeros((3, 3), dtype=complex), "start"))

    for k, seg in enumerate(schedule.segments):
        label = seg.label or f"segment {k}"
        try:
            if isinstance(seg, Pulse) and mode is Mode.HARD:
                u = embed(rotation(seg.angle, seg.phase), seg.subspace)
                out = u @ psi
                records.append(SegmentRecord(k, seg, t, t, psi, out, None, FrameTag()))
                psi = out
                if trajectory:
                    psi_step = u @ psi_step
                    pieces.append(_point(t, psi_step, np.zeros((3, 3), dtype=complex), label))
                continue

            h = segment_hamiltonian(seg, model, cfg, convention)
            duration = seg.duration(mode)
            frame = _native_frame(seg)
            out = unitary_exact(h, duration) @ psi
            traj = ref = None
            if trajectory:
                traj = step_segment(h, psi_step, duration, dt, t, label)
                traj = replace(traj, frame=frame)
                psi_step = traj.final
            if isinstance(seg, CPulse) and seg.needs_reframe:
                w = _reframe_matrix(seg, duration)
                out = w @ out
                if trajectory:
                    psi_step = w @ psi_step
                    level = I_PLUS if seg.subspace is Subspace.PLUS else I_MINUS
                    ref = shift_frame(traj, level, seg.drive.detuning - seg.frame_detuning, t)
                    ref = replace(ref, frame=frame.with_detuning(seg.subspace, seg.frame_detuning))
            elif trajectory:
                ref = traj
            if ref is not None:
                pieces.append(ref)
            records.append(SegmentRecord(k, seg, t, t + duration, psi, out, h, frame, traj, ref))
            psi = out
            t += duration
        except Exception as exc:  # noqa: BLE001 - re-raised with context
            raise SegmentError(f"segment {k} ({label!r}): {exc}") from exc

    full = _join(pieces) if trajectory else None
    return RunResult(schedule, records, psi, psi_step, full)


def _native_frame(seg: Segment) -> FrameTag:
    if isinstance(seg, Wait):
        return FrameTag(seg.detuning_plus, seg.detuning_minus)
    return FrameTag().with_detuning(seg.subspace, seg.drive.detuning)


def _point(t: float, psi: np.ndarray, h: np.ndarray, label: str) -> Trajectory:
    return Trajectory(np.array([t]), psi[None, :].copy(), h[None], labels=(label,))


def _join(pieces: list[Trajectory]) -> Trajectory:
    # timed segments start where the previous piece ended; instantaneous pulses
    # add a sample at the same time, so only exact duplicates of the start
    # sample of a timed segment are dropped
    times, states, hams, labels = [], [], [], []
    drift = 0.0
    for piece in pieces:
        start = 0
        if times and len(piece) > 1 and piece.times[0] == times[-1][-1] and np.array_equal(
            piece.states[0], states[-1][-1]
        ):
            start = 1
        times.append(piece.times[start:])
        states.append(piece.states[start:])
        hams.append(piece.hamiltonians[start:])
        labels.extend(piece.labels[start:])
        drift = max(drift, piece.max_norm_drift)
    return Trajectory(
        np.concatenate(times),
        np.concatenate(states),
        np.concatenate(hams),
        labels=tuple(labels),
        max_norm_drift=drift,
    )


# ---------------------------------------------------------------- builders


def _ramsey(label: str, rabi: float, spectator: float = 0.0) -> Pulse:
    # spectator: detuning of the {0,+1} frame, which keeps running during the pulse
    return Pulse(Subspace.MINUS, math.pi / 2, 0.0, rabi, 0.0, spectator, label)


def _free_time(delta: float) -> float:
    if delta == 0:
        raise ValueError("delta = 0 gives an infinite free-precession time (1/delta)")
    tau = 1.0 / abs(delta)
    if tau > WAIT_CAP:
        warnings.warn(
            f"free precession 1/|delta| = {tau:.3g} s capped at {WAIT_CAP:.0e} s near resonance",
            stacklevel=3,
        )
        tau = WAIT_CAP
    return tau


def build_spin_echo_plus(
    delta: float,
    tau: float,
    rabi: float = DEFAULT_RABI,
    initial: np.ndarray | None = None,
    mode: Mode = Mode.HARD,
    model: Model = Model.NV,
) -> Schedule:
    """pi/2 - tau/2 - pi - tau/2 - pi/2 on {0,+1}, starting from |+1> by default."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    half = tau / 2
    segs = [
        Pulse(Subspace.PLUS, math.pi / 2, 0.0, rabi, delta, label="pi/2 a"),
        Wait(half, delta, 0.0, "free a"),
        Pulse(Subspace.PLUS, math.pi, 0.0, rabi, delta, label="pi"),
        Wait(half, delta, 0.0, "free b"),
        Pulse(Subspace.PLUS, math.pi / 2, 0.0, rabi, delta, label="pi/2 b"),
    ]
    init = ket(+1) if initial is None else initial
    return Schedule(tuple(segs), init, mode, model, name="spin_echo_plus")


def build_nested_spin_echo(
    delta: float,
    tau_se: float,
    tau_r: float | None = None,
    rabi: float = DEFAULT_RABI,
    mode: Mode = Mode.HARD,
) -> Schedule:
    """{0,+1} spin echo inside a resonant {0,-1} Ramsey of fixed length ``tau_r``."""
    if rabi <= 0:
        raise ValueError("rabi must be positive")
    echo_pulses = 1.0 / rabi if mode is Mode.FINITE else 0.0
    inner = tau_se + echo_pulses
    if tau_r is None:
        tau_r = inner
    pad = (tau_r - inner) / 2
    if pad < -1e-15:
        raise ValueError(
            f"timing overflow: tau_r ({tau_r:.6g} s) < tau_se + echo pulse durations ({inner:.6g} s)"
        )
    pad = max(pad, 0.0)
    segs: list[Segment] = [_ramsey("ramsey a", rabi, delta)]
    if pad > 0:
        segs.append(Wait(pad, delta, 0.0, "pad a"))
    segs += [
        Pulse(Subspace.PLUS, math.pi / 2, 0.0, rabi, delta, label="echo pi/2 a"),
        Wait(tau_se / 2, delta, 0.0, "free a"),
        Pulse(Subspace.PLUS, math.pi, 0.0, rabi, delta, label="echo pi"),
        Wait(tau_se / 2, delta, 0.0, "free b"),
        Pulse(Subspace.PLUS, math.pi / 2, 0.0, rabi, delta, label="echo pi/2 b"),
    ]
    if pad > 0:
        segs.append(Wait(pad, delta, 0.0, "pad b"))
    segs.append(_ramsey("ramsey b", rabi, delta))
    return Schedule(tuple(segs), ket(0), mode, name="nested_se")


def c_pulse(
    subspace: Subspace,
    delta: float,
    rabi: float,
    periods: float,
    phase: float = 0.0,
    frame_detuning: float | None = None,
    label: str = "C-pulse",
) -> CPulse:
    drive = DriveParams(subspace, rabi, delta, phase)
    return CPulse(drive, periods * t_two_pi(drive), frame_detuning, 0.0, label)


def build_sequence1(
    delta: float, rabi: float = DEFAULT_RABI, n_cycles: int = 1, mode: Mode = Mode.HARD
) -> Schedule:
    """Resonant {0,-1} Ramsey around N cone circuits on {0,+1}."""
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    segs = (
        _ramsey("ramsey a", rabi),
        c_pulse(Subspace.PLUS, delta, rabi, n_cycles),
        _ramsey("ramsey b", rabi),
    )
    return Schedule(segs, ket(0), mode, name="seq1", focus="C-pulse")


def build_sequence2(
    delta: float,
    rabi: float = DEFAULT_RABI,
    n_cycles: int = 1,
    phi0: float = 0.0,
    mode: Mode = Mode.HARD,
) -> Schedule:
    """Ramsey and C-pulse both on {0,-1}; the C-pulse source has its own phase ``phi0``."""
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    segs = (
        _ramsey("ramsey a", rabi),
        c_pulse(Subspace.MINUS, delta, rabi, n_cycles, phi0, frame_detuning=0.0),
        _ramsey("ramsey b", rabi),
    )
    return Schedule(segs, ket(0), mode, name="seq2", focus="C-pulse")


def build_sequence3(delta: float, rabi: float = DEFAULT_RABI, mode: Mode = Mode.HARD) -> Schedule:
    """Two C/2-pulses on {0,+1} separated by 1/delta of free precession, inside a Ramsey."""
    tau = _free_time(delta)
    segs = (
        _ramsey("ramsey a", rabi, delta),
        c_pulse(Subspace.PLUS, delta, rabi, 0.5, label="C/2 a"),
        Wait(tau, delta, 0.0, "free"),
        c_pulse(Subspace.PLUS, delta, rabi, 0.5, label="C/2 b"),
        _ramsey("ramsey b", rabi, delta),
    )
    return Schedule(segs, ket(0), mode, name="seq3", focus="free")


def build_sequence4(
    delta: float, rabi: float = DEFAULT_RABI, eta: float = 0.5, mode: Mode = Mode.HARD
) -> Schedule:
    """Sequence 3 with a full C-pulse after ``(1-eta)/delta`` of the free precession."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    tau = _free_time(delta)
    tau1, tau2 = (1.0 - eta) * tau, eta * tau
    segs: list[Segment] = [
        _ramsey("ramsey a", rabi, delta),
        c_pulse(Subspace.PLUS, delta, rabi, 0.5, label="C/2 a"),
    ]
    if tau1 > 0:
        segs.append(Wait(tau1, delta, 0.0, "free a"))
    segs.append(c_pulse(Subspace.PLUS, delta, rabi, 1.0))
    if tau2 > 0:
        segs.append(Wait(tau2, delta, 0.0, "free b"))
    segs += [c_pulse(Subspace.PLUS, delta, rabi, 0.5, label="C/2 b"), _ramsey("ramsey b", rabi, delta)]
    return Schedule(tuple(segs), ket(0), mode, name="seq4", focus="C-pulse")


def build_free_fringes(
    delta: float, tau: float, rabi: float = DEFAULT_RABI, mode: Mode = Mode.HARD
) -> Schedule:
    """Only the two {0,+1} C/2-pulses, from |0>, with a variable wait between them."""
    if not 0 <= tau <= WAIT_CAP * (1 + 1e-12):
        raise ValueError(f"tau must lie in [0, {WAIT_CAP:.0e}] s, got {tau}")
    segs = (
        c_pulse(Subspace.PLUS, delta, rabi, 0.5, label="C/2 a"),
        Wait(tau, delta, 0.0, "free"),
        c_pulse(Subspace.PLUS, delta, rabi, 0.5, label="C/2 b"),
    )
    return Schedule(segs, ket(0), mode, name="free_fringes", focus="free")


BUILDERS: dict[str, Callable[..., Schedule]] = {
    "nested_se": build_nested_spin_echo,
    "seq1": build_sequence1,
    "seq2": build_sequence2,
    "seq3": build_sequence3,
    "seq4": build_sequence4,
    "free_fringes": build_free_fringes,
}


# ------------------------------------------------------------------ sweeps


@dataclass(eq=False)
class SweepPoint:
    value: float
    final: np.ndarray
    population0: float
    decomposition: "phase_analysis.PhaseDecomposition | None"


@dataclass(eq=False)
class SweepResult:
    builder: str
    parameter: str
    grid: np.ndarray
    fixed: dict
    points: list[SweepPoint]

    @property
    def population0(self) -> np.ndarray:
        return np.array([p.population0 for p in self.points])

    def column(self, name: str) -> np.ndarray:
        out = []
        for p in self.points:
            d = p.decomposition
            out.append(float("nan") if d is None else getattr(d, name))
        return np.array(out)


def _sweep_point(args) -> SweepPoint:
    builder, parameter, value, fixed, dt, analyze, convention = args
    try:
        schedule = BUILDERS[builder](**{**fixed, parameter: value})
        result = run(
            schedule, dt, convention=convention, trajectory=analyze and schedule.focus is not None
        )
        decomposition = None
        if analyze and schedule.focus is not None:
            focus = result.segment(schedule.focus)
            # a zero-length segment (e.g. tau = 0) has no path to analyse
            if focus.trajectory is not None and len(focus.trajectory) > 1:
                decomposition = result.analyze(schedule.focus)
    except Exception as exc:  # noqa: BLE001
        raise RuntimeError(f"sweep point {parameter}={value!r} failed: {exc}") from exc
    return SweepPoint(float(value), result.final, result.population0, decomposition)


def _parallel_default() -> bool:
    return os.environ.get("NVPL_NO_PARALLEL", "") not in ("1", "true", "yes")


def sweep(
    builder: str,
    parameter: str,
    grid: Iterable[float],
    fixed: dict | None = None,
    dt: float = 1e-9,
    *,
    analyze: bool = True,
    convention: RabiConvention = RabiConvention.EFFECTIVE,
    parallel: bool | None = None,
    workers: int | None = None,
) -> SweepResult:
    """Run ``builder`` once per grid value, keeping the output in grid order.

    Points are independent; with ``parallel`` they run in worker processes.
    ``NVPL_NO_PARALLEL=1`` forces serial execution when ``parallel`` is None.
    """
    if builder not in BUILDERS:
        raise KeyError(f"unknown builder {builder!r}; choose from {sorted(BUILDERS)}")
    grid = np.asarray(list(grid), dtype=float)
    if grid.size == 0:
        raise ValueError("grid is empty")
    steps = np.diff(grid)
    if grid.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("grid must be strictly monotone")
    fixed = dict(fixed or {})
    jobs = [(builder, parameter, float(v), fixed, dt, analyze, convention) for v in grid]
    if parallel is None:
        parallel = _parallel_default()
    if parallel and len(jobs) > 1:
        n = workers or min(len(jobs), os.cpu_count() or 1)
        if n > 1:
            with ProcessPoolExecutor(max_workers=n) as pool:
                points = list(pool.map(_sweep_point, jobs, chunksize=max(1, len(jobs) // (4 * n))))
            return SweepResult(builder, parameter, grid, fixed, points)
    points = [_sweep_point(job) for job in jobs]
    return SweepResult(builder, parameter, grid, fixed, points)


def sample_population(p: float | np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Binomial estimate of a population from ``shots`` single-shot readouts."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    return rng.binomial(shots, p) / shots
