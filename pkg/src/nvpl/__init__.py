"""Spin-1 NV ground-state simulator with dynamic / geometric phase analysis.

Modules
-------
quantum
    Basis, propagators, trajectories and the stepped integrator.
model
    Rotating-frame Hamiltonians and drive parameters.
sequences
    Segments, schedules, the sequence builders, ``run`` and ``sweep``.
phase
    Total, dynamic and geometric phases, swept solid angle, frame and gauge changes.
seqfile
    The ``.seq`` text format.
"""

from .model import DriveParams, PhysicalConfig, RabiConvention
from .phase import PhaseDecomposition, aa_phase, decompose, dynamic_phase, swept_solid_angle, total_phase
from .quantum import FrameTag, Subspace, Trajectory, ket, propagate_exact, propagate_stepped
from .sequences import (
    BUILDERS,
    CPulse,
    Mode,
    Pulse,
    Schedule,
    Wait,
    build_free_fringes,
    build_nested_spin_echo,
    build_sequence1,
    build_sequence2,
    build_sequence3,
    build_sequence4,
    build_spin_echo_plus,
    run,
    sweep,
)

__version__ = "0.1.0"
