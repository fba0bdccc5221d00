"""Hamiltonians of the driven NV ground state in the doubly rotating frame.

All inputs are cyclic frequencies (Hz); the returned matrices are in rad/s.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .quantum import I_MINUS, I_PLUS, I_ZERO, TWO_PI, FrameTag, Subspace

__all__ = [
    "RabiConvention",
    "PhysicalConfig",
    "DriveParams",
    "FrameTag",
    "CrossCouplingWarning",
    "b_parallel_from_field",
    "build_ground_state_h",
    "build_composite_rotating_h",
    "build_subspace_h",
    "build_h_2ls",
    "t_two_pi",
]

D_ZFS = 2.870e9
GAMMA = 2.8e6
BIAS_FIELD_G = 15.0
BIAS_ANGLE_DEG = 54.7


class RabiConvention(enum.Enum):
    """How a subspace Rabi frequency enters the three-level matrix.

    ``EFFECTIVE`` couples with Omega/2, identical to the two-level blocks.
    ``LITERAL`` uses Omega/(2*sqrt(2)), as the spin-1 matrix elements are
    printed; the two descriptions then disagree by sqrt(2).
    """

    EFFECTIVE = "eq5_effective"
    LITERAL = "eq4_literal"

    @property
    def coupling_scale(self) -> float:
        return 1.0 if self is RabiConvention.EFFECTIVE else 1.0 / math.sqrt(2.0)


class CrossCouplingWarning(UserWarning):
    """The dropped off-resonant coupling to the other transition is not negligible."""


def b_parallel_from_field(magnitude: float = BIAS_FIELD_G, angle_deg: float = BIAS_ANGLE_DEG) -> float:
    """Projection of a bias field onto the NV axis (G)."""
    return magnitude * math.cos(math.radians(angle_deg))


@dataclass(frozen=True)
class PhysicalConfig:
    d_zfs: float = D_ZFS
    gyromagnetic: float = GAMMA
    b_parallel: float = b_parallel_from_field()

    def __post_init__(self):
        if self.d_zfs <= 0:
            raise ValueError("d_zfs must be positive")
        if self.b_parallel < 0:
            raise ValueError("b_parallel must be non-negative")
        if self.zeeman >= self.d_zfs / 10:
            raise ValueError(
                f"Zeeman shift {self.zeeman:.4g} Hz is outside the low-field regime "
                f"(must stay below d_zfs/10 = {self.d_zfs / 10:.4g} Hz)"
            )

    @property
    def zeeman(self) -> float:
        """gamma * B_parallel in Hz."""
        return self.gyromagnetic * self.b_parallel

    @property
    def transition_splitting(self) -> float:
        """Frequency gap between the 0->+1 and 0->-1 transitions (Hz)."""
        return 2 * self.zeeman


@dataclass(frozen=True)
class DriveParams:
    """One microwave tone addressing a subspace. ``rabi=0`` models free evolution."""

    subspace: Subspace
    rabi: float = 0.0
    detuning: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.rabi < 0:
            raise ValueError(f"rabi must be non-negative, got {self.rabi}")
        if self.rabi > 0 and abs(self.detuning) > 10 * self.rabi:
            raise ValueError(
                f"|detuning| = {abs(self.detuning):.4g} Hz exceeds 10 x rabi = {10 * self.rabi:.4g} Hz"
            )

    @property
    def generalized_rabi(self) -> float:
        return math.hypot(self.rabi, self.detuning)

    @property
    def active(self) -> bool:
        return self.rabi > 0


def build_ground_state_h(cfg: PhysicalConfig = PhysicalConfig()) -> np.ndarray:
    """Lab-frame zero-field splitting plus axial Zeeman term, ``D Sz^2 + gamma B Sz``."""
    d = TWO_PI * cfg.d_zfs
    z = TWO_PI * cfg.zeeman
    return np.diag([d + z, 0.0, d - z]).astype(complex)


def _coupling(drive: DriveParams, scale: float) -> complex:
    return scale * TWO_PI * drive.rabi * np.exp(-1j * drive.phase) / 2


def build_composite_rotating_h(
    cfg: PhysicalConfig | None = None,
    drive_plus: DriveParams | None = None,
    drive_minus: DriveParams | None = None,
    convention: RabiConvention = RabiConvention.EFFECTIVE,
) -> np.ndarray:
    """Three-level Hamiltonian in the frame rotating at both drive frequencies.

    A drive with ``rabi=0`` contributes only its detuning on the diagonal;
    ``None`` means resonant and undriven. The two tones never overlap in time.
    """
    cfg = cfg or PhysicalConfig()
    if drive_plus is not None and drive_plus.subspace is not Subspace.PLUS:
        raise ValueError("drive_plus must address Subspace.PLUS")
    if drive_minus is not None and drive_minus.subspace is not Subspace.MINUS:
        raise ValueError("drive_minus must address Subspace.MINUS")
    if drive_plus is not None and drive_minus is not None and drive_plus.active and drive_minus.active:
        raise ValueError(
            "both subspaces driven at once: pulses on the two transitions are never simultaneous"
        )
    h = np.zeros((3, 3), dtype=complex)
    scale = convention.coupling_scale
    for drive, idx in ((drive_plus, I_PLUS), (drive_minus, I_MINUS)):
        if drive is None:
            continue
        h[idx, idx] = -TWO_PI * drive.detuning
        if drive.active:
            if cfg.transition_splitting < 20 * drive.rabi:
                warnings.warn(
                    f"other transition is only {cfg.transition_splitting:.3g} Hz away from a "
                    f"{drive.rabi:.3g} Hz drive; neglected cross coupling may matter",
                    CrossCouplingWarning,
                    stacklevel=2,
                )
            g = _coupling(drive, scale)
            if idx == I_PLUS:
                h[I_PLUS, I_ZERO] = g
                h[I_ZERO, I_PLUS] = np.conj(g)
            else:
                h[I_ZERO, I_MINUS] = g
                h[I_MINUS, I_ZERO] = np.conj(g)
    return h


def build_subspace_h(drive: DriveParams) -> np.ndarray:
    """Effective two-level Hamiltonian in the subspace's row order.

    PLUS: ``[[-D, W e^{-ip}/2], [W e^{ip}/2, 0]]`` on ``(c_{+1}, c_0)``;
    MINUS: ``[[0, W e^{-ip}/2], [W e^{ip}/2, -D]]`` on ``(c_0, c_{-1})``.
    """
    g = _coupling(drive, 1.0)
    delta = TWO_PI * drive.detuning
    if drive.subspace is Subspace.PLUS:
        return np.array([[-delta, g], [np.conj(g), 0.0]], dtype=complex)
    return np.array([[0.0, g], [np.conj(g), -delta]], dtype=complex)


def build_h_2ls(rabi: float, detuning: float) -> np.ndarray:
    """Symmetric spin-1/2 Hamiltonian ``-D/2 sz + W/2 sx`` (rad/s)."""
    d = TWO_PI * detuning
    w = TWO_PI * rabi
    return np.array([[-d / 2, w / 2], [w / 2, d / 2]], dtype=complex)


def t_two_pi(drive: DriveParams) -> float:
    """Duration of one generalized Rabi period, ``1/sqrt(rabi^2 + detuning^2)`` seconds."""
    w = drive.generalized_rabi
    if w == 0:
        raise ValueError("Rabi period undefined: rabi and detuning are both zero")
    return 1.0 / w
