"""Kustaanheimo-Stiefel regularization of the perturbed Kepler problem,
formulated for an arbitrary defining vector.

The package turns Cartesian two-body states into KS phase-space variables on
a chart fixed by a unit defining vector c and a length scale alpha, provides
the canonical momenta extension and its first integrals, propagates the
regularized equations in Sundman time, and solves the rotating-frame Kepler
problem in closed form.
"""

from .canon import (
    CartesianState,
    KSPhase,
    bilinear_invariant,
    cartesian_from_phase,
    cartesian_to_momenta,
    momenta_to_cartesian,
    phase_from_cartesian,
    project_constraint,
    reduce_momenta_sks,
    sks_momenta,
    validate_phase,
)
from .dynamics import (
    NO_PERTURBATION,
    Perturbation,
    PerturbationTerm,
    fix_energy_manifold,
    gauge_flow,
    kepler_hamiltonian_cartesian,
    ks_equations_of_motion,
    ks_hamiltonian,
    ks_hamiltonian_unperturbed,
    make_eom,
    oscillator_frequency,
    sundman_rate,
)
from .errors import (
    CollisionError,
    ConstraintViolation,
    DegenerateState,
    GaugeUndefined,
    KSError,
    NoConvergence,
    PoleError,
    StepLimitExceeded,
    UnboundOrbit,
)
from .invariants import (
    angular_momentum_cartesian,
    angular_momentum_matrix,
    fradkin_tensor,
    invariant_report,
    laplace_matrix,
    laplace_vector_cartesian,
    laplace_vector_fradkin,
    laplace_vector_ks,
    oscillator_energies,
)
from .ksmap import (
    KSChart,
    defining_vector,
    enforce_sign_continuity,
    fiber_shift,
    ks1_oracle,
    ks_forward,
    ks_invert,
    ks_invert_sks,
    ks_radius,
    reduce_to_sks,
)
from .propagator import (
    IntegratorConfig,
    TrajectorySample,
    integrate,
    kepler_oracle,
    sample_at,
    tau_at_time,
    time_of,
)
from .quat import axis_angle, qconj, qcross, qmul, rotate, rotation_matrix, unit_quaternion
from .rotframe import (
    RotatingFrameModified,
    RotatingFrameRaw,
    RotatingFrameSpec,
    closed_form_propagate,
    closed_form_time,
    cross_product_matrix,
    from_rotating_frame,
    h_invariant,
    rot_equations_of_motion,
    rot_frequency,
    rot_perturbation_modified,
    rot_perturbation_raw,
    to_rotating_frame,
)

__version__ = "0.1.0"
