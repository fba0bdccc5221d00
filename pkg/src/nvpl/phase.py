"""Split the global phase of a two-level trajectory into dynamic and geometric parts.

The functions take a :class:`~nvpl.quantum.Trajectory`. Phases work in any
dimension; anything involving the Bloch sphere needs a two-level trajectory
(use ``Trajectory.restrict`` on a triplet trajectory). Phases are in radians.

The geometric (Aharonov-Anandan) phase is computed two ways: as the total
phase minus the dynamic phase, and directly from the discrete Berry
connection of a closed lift of the path. The two routes share no code beyond
the total phase, so their agreement is a real check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import simpson

from .quantum import FrameTag, Subspace, Trajectory, shift_frame

CYCLIC_TOL = 1e-6
CROSS_CHECK_TOL = 1e-4


class PhaseConsistencyError(RuntimeError):
    """The two routes to the geometric phase disagree."""


def wrap(angle):
    """Map angles to ``(-pi, pi]``."""
    out = np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), 2 * np.pi)
    return float(out) if np.ndim(out) == 0 else out


def wrap_diff(a, b):
    """Signed distance ``a - b`` on the circle, in ``(-pi, pi]``."""
    return wrap(np.asarray(a) - np.asarray(b))


def _require_samples(traj: Trajectory) -> None:
    if len(traj) < 2:
        raise ValueError("trajectory needs at least two samples")


def _require_two_level(traj: Trajectory) -> None:
    if traj.dim != 2:
        raise ValueError("Bloch-sphere analysis needs a two-level trajectory; call .restrict(subspace)")
    _require_samples(traj)


@dataclass(frozen=True)
class TotalPhase:
    phase: float
    cyclicity_residual: float

    @property
    def cyclic(self) -> bool:
        return self.cyclicity_residual <= CYCLIC_TOL


def total_phase(traj: Trajectory) -> TotalPhase:
    """Continuously unwrapped ``arg <psi(0)|psi(t)>`` at the final sample.

    Increments of exactly +-pi (the overlap passing through zero) are taken
    as +pi. ``cyclicity_residual`` is ``1 - |<psi(0)|psi(T)>|``.
    """
    _require_samples(traj)
    overlaps = traj.states @ np.conj(traj.initial)
    steps = np.angle(overlaps[1:] * np.conj(overlaps[:-1]))
    steps[np.isclose(np.abs(steps), np.pi, rtol=0, atol=1e-9)] = np.pi
    residual = 1.0 - abs(overlaps[-1]) / (np.linalg.norm(traj.initial) * np.linalg.norm(traj.final))
    return TotalPhase(float(np.angle(overlaps[0]) + steps.sum()), float(max(residual, 0.0)))


def dynamic_phase(traj: Trajectory) -> float:
    """``-integral <psi|H|psi> dt`` by Simpson's rule on the sample grid."""
    _require_samples(traj)
    energy = np.einsum("ti,tij,tj->t", np.conj(traj.states), traj.hamiltonians, traj.states).real
    return float(-simpson(energy, x=traj.times))


def _bargmann(states: np.ndarray) -> float:
    # -sum arg <psi_k|psi_k+1>, the discrete form of i * integral <psi|d psi>
    return float(-np.sum(np.angle(np.einsum("ti,ti->t", np.conj(states[:-1]), states[1:]))))


def connection_phase(traj: Trajectory, phi_total: float | None = None) -> float:
    """Geometric phase from the discrete connection of a closed lift.

    The lift ``exp(-i f(t)) psi(t)`` with ``f`` growing linearly from 0 to
    the total phase returns to its starting vector, so the phase it
    accumulates along the path is purely geometric. The per-step Bargmann
    sum has an O(h^2) error, removed by one Richardson step against the sum
    taken on every second sample.
    """
    _require_samples(traj)
    if phi_total is None:
        phi_total = total_phase(traj).phase
    t = traj.times
    span = t[-1] - t[0]
    f = phi_total * (t - t[0]) / span if span > 0 else np.zeros_like(t)
    lifted = traj.states * np.exp(-1j * f)[:, None]
    fine = _bargmann(lifted)
    n = len(t) - 1
    if n < 2:
        return fine
    even = n - (n % 2)
    coarse = _bargmann(lifted[: even + 1 : 2])
    if even < n:
        coarse += _bargmann(lifted[even:])
    return float((4 * fine - coarse) / 3)


def aa_phase(traj: Trajectory, check: bool = True) -> float:
    """Aharonov-Anandan phase from the connection, cross-checked against total minus dynamic."""
    tp = total_phase(traj)
    direct = connection_phase(traj, tp.phase)
    if check:
        by_difference = tp.phase - dynamic_phase(traj)
        gap = abs(wrap_diff(direct, by_difference))
        if gap > CROSS_CHECK_TOL:
            raise PhaseConsistencyError(
                f"geometric phase routes disagree by {gap:.3e} rad "
                "(total - dynamic vs. connection); refine dt"
            )
    return direct


def _signed_triangle(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    num = np.einsum("...i,...i->...", a, np.cross(b, c))
    den = 1.0 + np.einsum("...i,...i->...", a, b) + np.einsum("...i,...i->...", b, c)
    den = den + np.einsum("...i,...i->...", c, a)
    return 2.0 * np.arctan2(num, den)


def swept_solid_angle(traj: Trajectory) -> float:
    """Solid angle enclosed by the Bloch path, closed by a geodesic, in ``[0, 4 pi)``.

    The path is fanned into spherical triangles from the pole of its mean
    rotation axis; the closing triangle uses the geodesic from the last
    sample back to the first. The result is oriented so that a loop traversed clockwise
    around its axis when seen from outside (the sense of precession
    under ``exp(-iHt)``) counts positively.
    """
    _require_two_level(traj)
    s = traj.bloch()
    lengths = np.linalg.norm(s, axis=1)
    if np.any(np.abs(lengths - 1.0) > 1e-3):
        raise ValueError("Bloch vectors must be unit length (pure states)")
    s = s / lengths[:, None]
    axis = np.cross(s[:-1], s[1:]).sum(axis=0)
    norm = np.linalg.norm(axis)
    if norm < 1e-14:
        return 0.0
    pole = axis / norm
    area = _fan_area(pole, s)
    if len(s) > 4:
        # chords cut the curved path with an O(h^2) area error; extrapolate it away
        coarse = s[::2] if len(s) % 2 else np.vstack([s[::2], s[-1:]])
        area = (4 * area - _fan_area(pole, coarse)) / 3
    return float(np.mod(-area, 4 * np.pi))


def _fan_area(pole: np.ndarray, s: np.ndarray) -> float:
    return float(_signed_triangle(pole, s, np.roll(s, -1, axis=0)).sum())


@dataclass(frozen=True)
class SolidAngleCheck:
    half_solid_angle: float
    phi_aa: float
    branch: int
    residual: float


def check_solid_angle(traj: Trajectory) -> SolidAngleCheck:
    """Compare half the swept solid angle with the geometric phase, modulo 2 pi.

    ``branch`` is the integer k in ``phi_aa = theta/2 + 2 pi k + residual``.
    """
    half = swept_solid_angle(traj) / 2
    phi = aa_phase(traj)
    residual = wrap_diff(phi, half)
    branch = int(round((phi - half - residual) / (2 * np.pi)))
    return SolidAngleCheck(half, phi, branch, float(residual))


def frame_transform(traj: Trajectory, target: FrameTag) -> Trajectory:
    """Re-express a two-level trajectory in the frame of ``target``.

    Only the detuning of the trajectory's own subspace matters; the moving
    level picks up ``exp(-i 2 pi (d_src - d_dst) t)`` measured from the first
    sample and the Hamiltonian becomes time dependent.
    """
    if traj.subspace is None or traj.dim != 2:
        raise ValueError("frame_transform needs a two-level trajectory with a subspace tag")
    sub = traj.subspace
    rate = traj.frame.detuning(sub) - target.detuning(sub)
    level = 0 if sub is Subspace.PLUS else 1
    out = shift_frame(traj, level, rate)
    return replace(out, frame=traj.frame.with_detuning(sub, target.detuning(sub)))


def apply_gauge(traj: Trajectory, alpha: np.ndarray) -> Trajectory:
    """Multiply each sample by ``exp(i alpha(t))``; the Hamiltonian gains ``-d alpha/dt``.

    ``alpha`` should satisfy ``alpha(T) - alpha(0) = 2 pi k`` for the loop
    to stay closed.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != traj.times.shape:
        raise ValueError("alpha must have one value per sample")
    rate = np.gradient(alpha, traj.times)
    eye = np.eye(traj.dim)
    hams = traj.hamiltonians - rate[:, None, None] * eye
    return replace(traj, states=traj.states * np.exp(1j * alpha)[:, None], hamiltonians=hams)


@dataclass(frozen=True)
class PhaseDecomposition:
    phi_total: float
    phi_dyn: float
    phi_aa: float
    phi_aa_connection: float
    solid_angle: float
    cyclicity_residual: float

    @property
    def cyclic(self) -> bool:
        return self.cyclicity_residual <= CYCLIC_TOL

    def as_dict(self) -> dict:
        return {
            "phi_total": self.phi_total,
            "phi_dyn": self.phi_dyn,
            "phi_aa": self.phi_aa,
            "phi_aa_connection": self.phi_aa_connection,
            "solid_angle": self.solid_angle,
            "cyclicity_residual": self.cyclicity_residual,
            "cyclic": self.cyclic,
        }


def decompose(traj: Trajectory, check: bool = True) -> PhaseDecomposition:
    """Total, dynamic and geometric phase of one trajectory.

    ``phi_aa`` is ``phi_total - phi_dyn`` so the three always add up;
    ``phi_aa_connection`` is the independent estimate. For a non-cyclic path
    the numbers are still reported but ``cyclic`` is False.
    """
    tp = total_phase(traj)
    dyn = dynamic_phase(traj)
    direct = connection_phase(traj, tp.phase)
    by_difference = tp.phase - dyn
    if check and tp.cyclic:
        gap = abs(wrap_diff(direct, by_difference))
        if gap > CROSS_CHECK_TOL:
            raise PhaseConsistencyError(
                f"geometric phase routes disagree by {gap:.3e} rad; refine dt"
            )
    try:
        theta = swept_solid_angle(traj)
    except ValueError:
        theta = math.nan
    return PhaseDecomposition(tp.phase, dyn, by_difference, direct, theta, tp.cyclicity_residual)
