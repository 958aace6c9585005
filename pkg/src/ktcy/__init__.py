"""Solver and verification suite for the T2-invariant Calabi-Yau equation
on the Kodaira-Thurston manifold, reduced to a periodic Monge-Ampere
equation for a single potential on the unit 2-torus."""

from .canonical_connection import (
    canonical_connection_forms,
    connection_report,
    curvature,
    ricci_flat,
    ricci_tilde,
    torsion,
)
from .continuity_solver import (
    ContinuityState,
    SolverConfig,
    continuity_solve,
    newton_step,
    normalize_ct,
    solve_at_t,
    uniqueness_probe,
)
from .cy_reduction import (
    DensityData,
    Potential,
    ReducedMetric,
    assemble_omega_tilde,
    diagnostics,
    is_admissible,
    key_identity_gap,
    la_inequality,
    laplace_flat,
    laplace_tilde,
    lemma22_margin,
    metric_matrix,
    reconstruct_one_form,
    reduced_metric,
    residual,
    trace_u,
)
from .errors import (
    ContinuationStalled,
    DegenerateMetric,
    KtcyError,
    LinearSolveStagnated,
    LineSearchFailed,
    MaxItersExceeded,
    NonZeroMeanInput,
    NotPositiveDefinite,
)
from .frame_calculus import (
    InvariantOneForm,
    InvariantTwoForm,
    cohomology_coeffs,
    ext_d,
    j_one_form,
    j_two_form,
    omega,
    omega_one,
    wedge_top,
)
from .torus_grid import (
    Grid,
    TorusField,
    derivative,
    integrate,
    invert_laplacian,
    load_ktcy,
    resample,
    save_csv,
    save_ktcy,
)

__version__ = "0.1.0"
