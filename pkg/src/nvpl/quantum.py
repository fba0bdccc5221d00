"""State vectors, propagators and trajectories for the NV ground-state triplet.

Basis ordering is fixed once, here, as ``(m_S=+1, m_S=0, m_S=-1)``; every
other module imports the index constants below instead of hard-coding them.

Two-level subspaces use the ordering of their effective Hamiltonians:

* ``Subspace.PLUS``  -> ``(c_{+1}, c_0)``
* ``Subspace.MINUS`` -> ``(c_0, c_{-1})``

Frequencies handed to the public API are cyclic (Hz). Operators are stored in
angular units (rad/s), so ``exp(-1j * H * t)`` needs no extra factor.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

BASIS = (+1, 0, -1)
I_PLUS, I_ZERO, I_MINUS = 0, 1, 2

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

TWO_PI = 2.0 * np.pi


class Subspace(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"

    @property
    def indices(self) -> tuple[int, int]:
        """Triplet indices of the pair, in the subspace Hamiltonian's row order."""
        return (I_PLUS, I_ZERO) if self is Subspace.PLUS else (I_ZERO, I_MINUS)

    @property
    def bright_index(self) -> int:
        """Position of m_S=0 within the pair."""
        return 1 if self is Subspace.PLUS else 0


def ket(m: int) -> np.ndarray:
    """Triplet basis vector for spin projection ``m``."""
    psi = np.zeros(3, dtype=complex)
    psi[BASIS.index(m)] = 1.0
    return psi


def populations(state: np.ndarray) -> np.ndarray:
    return np.abs(np.asarray(state)) ** 2


def _check_dims(h: np.ndarray, state: np.ndarray) -> None:
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"operator must be square, got shape {h.shape}")
    if h.shape[0] not in (2, 3):
        raise ValueError(f"only 2- and 3-level systems are supported, got {h.shape[0]}")
    if state.shape != (h.shape[0],):
        raise ValueError(
            f"dimension mismatch: operator is {h.shape[0]}x{h.shape[0]}, state has shape {state.shape}"
        )


def unitary_exact(h: np.ndarray, duration: float) -> np.ndarray:
    """``exp(-i h t)`` from the eigendecomposition of a Hermitian ``h``."""
    if duration < 0:
        raise ValueError(f"duration must be non-negative, got {duration}")
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(-1j * evals * duration)) @ evecs.conj().T


def propagate_exact(h: np.ndarray, state: np.ndarray, duration: float) -> np.ndarray:
    """Evolve ``state`` under the constant Hamiltonian ``h`` (rad/s) for ``duration`` seconds."""
    h = np.asarray(h, dtype=complex)
    state = np.asarray(state, dtype=complex)
    _check_dims(h, state)
    return unitary_exact(h, duration) @ state


def rotation(angle: float, phase: float) -> np.ndarray:
    """Ideal pulse ``exp(-i angle/2 (cos(phase) sx + sin(phase) sy))`` in subspace ordering."""
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array(
        [[c, -1j * s * np.exp(-1j * phase)], [-1j * s * np.exp(1j * phase), c]],
        dtype=complex,
    )


def embed(op2: np.ndarray, subspace: Subspace) -> np.ndarray:
    """Lift a 2x2 subspace operator to the triplet, identity on the spectator level."""
    out = np.eye(3, dtype=complex)
    idx = np.ix_(subspace.indices, subspace.indices)
    out[idx] = op2
    return out


def restrict_state(state: np.ndarray, subspace: Subspace) -> np.ndarray:
    """Normalised two-level projection of a triplet state.

    Returns the raw (zero) pair when the subspace is unpopulated.
    """
    pair = np.asarray(state, dtype=complex)[list(subspace.indices)]
    norm = np.linalg.norm(pair)
    return pair / norm if norm > 1e-15 else pair


def bloch_vector(state: np.ndarray, subspace: Subspace) -> np.ndarray:
    """Pauli expectation values of a unit two-level state.

    The pole convention puts m_S=0 at -z in both subspaces, so the "up" level
    is m_S=+1 (PLUS) or m_S=-1 (MINUS).
    """
    state = np.asarray(state, dtype=complex)
    if subspace is Subspace.PLUS:
        up, down = state[..., 0], state[..., 1]
    else:
        up, down = state[..., 1], state[..., 0]
    cross = np.conj(up) * down
    return np.stack(
        [2 * cross.real, 2 * cross.imag, np.abs(up) ** 2 - np.abs(down) ** 2], axis=-1
    )


@dataclass(frozen=True)
class GlobalPhase:
    phase: float
    overlap_magnitude: float

    @property
    def cyclic(self) -> bool:
        return self.overlap_magnitude >= 1 - 1e-9


def global_phase_between(a: np.ndarray, b: np.ndarray) -> GlobalPhase:
    """Phase of ``<a|b>`` in (-pi, pi] together with its magnitude."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"states differ in dimension: {a.shape} vs {b.shape}")
    overlap = np.vdot(a, b)
    phase = float(np.angle(overlap))
    if phase <= -np.pi:
        phase += TWO_PI
    return GlobalPhase(phase, float(abs(overlap)))


@dataclass(frozen=True)
class FrameTag:
    """Rotating frame of each subspace, given by its offset from resonance (Hz)."""

    plus: float = 0.0
    minus: float = 0.0

    def detuning(self, subspace: Subspace) -> float:
        return self.plus if subspace is Subspace.PLUS else self.minus

    def with_detuning(self, subspace: Subspace, value: float) -> "FrameTag":
        if subspace is Subspace.PLUS:
            return FrameTag(value, self.minus)
        return FrameTag(self.plus, value)

    @property
    def is_resonant(self) -> bool:
        return self.plus == 0.0 and self.minus == 0.0


RESONANT = FrameTag()


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-ordered state samples with the Hamiltonian in force at each one.

    ``hamiltonians`` is ``(n, d, d)`` in rad/s. ``subspace`` is set for
    two-level trajectories and fixes the Bloch pole convention.
    """

    times: np.ndarray
    states: np.ndarray
    hamiltonians: np.ndarray
    frame: FrameTag = RESONANT
    subspace: Subspace | None = None
    labels: tuple[str, ...] = field(default=())
    max_norm_drift: float = 0.0

    def __post_init__(self):
        n = len(self.times)
        if self.states.shape[0] != n or self.hamiltonians.shape[0] != n:
            raise ValueError("times, states and hamiltonians must have equal length")
        if self.labels and len(self.labels) != n:
            raise ValueError("labels must match the number of samples")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def initial(self) -> np.ndarray:
        return self.states[0]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def bloch(self) -> np.ndarray:
        if self.subspace is None or self.dim != 2:
            raise ValueError("Bloch vectors need a two-level trajectory with a subspace tag")
        return bloch_vector(self.states, self.subspace)

    def restrict(self, subspace: Subspace) -> "Trajectory":
        """Project a triplet trajectory onto one subspace, renormalising each sample."""
        if self.dim != 3:
            raise ValueError("restrict() needs a three-level trajectory")
        idx = list(subspace.indices)
        pairs = self.states[:, idx]
        norms = np.linalg.norm(pairs, axis=1, keepdims=True)
        if np.any(norms < 1e-12):
            raise ValueError(f"subspace {subspace.value} is unpopulated along the trajectory")
        hams = self.hamiltonians[:, idx][:, :, idx]
        return Trajectory(
            self.times, pairs / norms, hams, self.frame, subspace, self.labels, self.max_norm_drift
        )

    @classmethod
    def concatenate(cls, parts: Sequence["Trajectory"]) -> "Trajectory":
        """Join consecutive pieces, dropping each repeated boundary sample."""
        times, states, hams, labels = [], [], [], []
        for k, part in enumerate(parts):
            start = 1 if k and len(part) and times and part.times[0] == times[-1][-1] else 0
            times.append(part.times[start:])
            states.append(part.states[start:])
            hams.append(part.hamiltonians[start:])
            labels.extend(part.labels[start:] if part.labels else [""] * (len(part) - start))
        first = parts[0]
        return cls(
            np.concatenate(times),
            np.concatenate(states),
            np.concatenate(hams),
            first.frame,
            first.subspace,
            tuple(labels),
            max(p.max_norm_drift for p in parts),
        )


def shift_frame(traj: Trajectory, level: int, rate: float, t0: float | None = None) -> Trajectory:
    """Move a trajectory into a frame rotating ``rate`` Hz slower on one level.

    The amplitude of ``level`` picks up ``exp(-i 2 pi rate (t - t0))`` and the
    Hamiltonian transforms as ``W H W^dag + i dW/dt W^dag``, so a diagonal
    entry ``-2 pi d`` becomes ``-2 pi (d - rate)``.
    """
    t0 = traj.times[0] if t0 is None else t0
    ph = np.exp(-1j * TWO_PI * rate * (traj.times - t0))
    states = traj.states.copy()
    states[:, level] *= ph
    hams = traj.hamiltonians.copy()
    others = [k for k in range(traj.dim) if k != level]
    hams[:, level, others] *= ph[:, None]
    hams[:, others, level] *= np.conj(ph)[:, None]
    hams[:, level, level] += TWO_PI * rate
    return replace(traj, states=states, hamiltonians=hams)


def rk4_step_matrix(h: np.ndarray, step: float) -> np.ndarray:
    """One classical RK4 step for ``dpsi/dt = -i h psi`` as a matrix.

    For a constant linear right-hand side the four stages collapse to the
    fourth-order Taylor polynomial of ``exp(-i h step)``.
    """
    a = -1j * step * np.asarray(h, dtype=complex)
    eye = np.eye(h.shape[0], dtype=complex)
    a2 = a @ a
    return eye + a + a2 / 2 + a2 @ a / 6 + a2 @ a2 / 24


def max_frequency(h: np.ndarray) -> float:
    """Largest |eigenvalue| of ``h`` as a cyclic frequency (Hz)."""
    return float(np.max(np.abs(np.linalg.eigvalsh(h)))) / TWO_PI


def check_step(h: np.ndarray, dt: float, label: str = "") -> None:
    f = max_frequency(h)
    if f > 0 and dt > 1.0 / (50.0 * f):
        where = f" in segment {label!r}" if label else ""
        raise ValueError(
            f"dt={dt:.3g} s is too coarse{where}: the fastest frequency is {f:.4g} Hz, "
            f"so dt must be <= 1/(50 f) = {1 / (50 * f):.3g} s"
        )


_BLOCK = 64


def step_segment(
    h: np.ndarray, state: np.ndarray, duration: float, dt: float, t0: float = 0.0, label: str = ""
) -> Trajectory:
    """Fixed-step RK4 over one constant-Hamiltonian segment.

    The sample count is ``ceil(duration/dt)`` and the step is shrunk to fit
    the duration exactly. States are renormalised after every step and the
    largest correction is kept in ``max_norm_drift``.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if duration < 0:
        raise ValueError(f"duration must be non-negative, got {duration}")
    h = np.asarray(h, dtype=complex)
    state = np.asarray(state, dtype=complex)
    _check_dims(h, state)
    check_step(h, dt, label)
    n = int(np.ceil(duration / dt - 1e-9)) if duration > 0 else 0
    step = duration / n if n else 0.0
    states = np.empty((n + 1, h.shape[0]), dtype=complex)
    states[0] = state
    drift = 0.0
    if n:
        m = rk4_step_matrix(h, step)
        # powers m^1..m^B let one matmul advance a whole block of samples
        powers = np.empty((_BLOCK, *m.shape), dtype=complex)
        powers[0] = m
        for k in range(1, _BLOCK):
            powers[k] = m @ powers[k - 1]
        k = 0
        psi = state
        while k < n:
            b = min(_BLOCK, n - k)
            block = powers[:b] @ psi
            # normalising the linear iterate equals renormalising every step
            norms = np.linalg.norm(block, axis=1)
            step_norms = norms / np.concatenate(([np.linalg.norm(psi)], norms[:-1]))
            drift = max(drift, float(np.max(np.abs(step_norms - 1.0))))
            block = block / norms[:, None]
            states[k + 1 : k + 1 + b] = block
            psi = block[-1]
            k += b
    times = t0 + step * np.arange(n + 1)
    if n:
        times[-1] = t0 + duration
    hams = np.broadcast_to(h, (n + 1, *h.shape))
    if drift > 1e-12:
        log.debug("segment %r: max per-step norm drift %.3e", label, drift)
    return Trajectory(times, states, hams, labels=(label,) * (n + 1), max_norm_drift=drift)


def propagate_stepped(
    segments: Sequence[tuple[np.ndarray, float] | tuple[np.ndarray, float, str]],
    state: np.ndarray,
    dt: float,
    t0: float = 0.0,
) -> Trajectory:
    """Integrate a piecewise-constant schedule with fixed-step RK4.

    ``segments`` holds ``(h, duration[, label])`` tuples. This is the
    independent check on :func:`propagate_exact`; it never diagonalises.
    """
    state = np.asarray(state, dtype=complex)
    if not segments:
        d = state.shape[0]
        return Trajectory(np.array([t0]), state[None, :], np.zeros((1, d, d), dtype=complex))
    parts = []
    t = t0
    for seg in segments:
        h, duration = seg[0], seg[1]
        label = seg[2] if len(seg) > 2 else ""
        part = step_segment(h, state, duration, dt, t, label)
        parts.append(part)
        state = part.final
        t = float(part.times[-1])
    return Trajectory.concatenate(parts)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2)
