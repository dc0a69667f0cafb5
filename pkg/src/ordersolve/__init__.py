"""Order-based solution toolkit: certified one-sided piecewise-polynomial
subsolutions of nonlinear PDEs, interval-valued grid function calculus, and
Dedekind-MacNeille completions of finite posets."""

from .intervals import Interval, interval_from_json, interval_to_json, join, leq, meet, width
from .grids import (
    Box,
    DomainMismatchError,
    GridDomain,
    GridIntervalFunction,
    MaskDensityError,
    SkeletonSet,
    mask_is_dense,
    nd_equivalent,
    nd_leq,
    pointwise_leq,
    read_grid_function,
    restrict_to_mask,
    set_is_nowhere_dense,
    write_grid_function,
)
from .baire import (
    BaireResult,
    DiscontinuityReport,
    assimilate,
    baire_lower,
    baire_upper,
    complete_with_envelopes,
    dense_determination_check,
    discontinuity_report,
    graph_completion,
    is_discretely_closed,
    is_h_continuous,
    is_nearly_finite,
)
from .macneille import (
    AbstractEquation,
    Cut,
    CutLattice,
    FinitePoset,
    PosetError,
    SolvabilityResult,
    is_complete_lattice,
    lattice_to_dot,
    macneille_complete,
    preserves_bounds_check,
    pullback_order,
    read_poset,
    solvability_criterion,
)
from .pde import (
    Jet,
    MultiIndexSet,
    PdeProblem,
    Polynomial,
    ProblemFileError,
    RangeEnclosure,
    apply_operator,
    check_range_interior,
    parse_problem_text,
    poly_jet_at,
    probe_lattice,
    range_probe,
    read_problem,
)
from .solver import (
    AssemblyDepthError,
    CertificateReport,
    JetBracketError,
    LocalPatch,
    PatchRadiusError,
    PiecewiseSolution,
    RefinementRun,
    assemble_global,
    jet_solve,
    local_patch,
    read_solution,
    refine,
    sample_on_grid,
    sample_residual_on_grid,
    verify_certificate,
    wrap_polynomial,
    write_solution,
)

__version__ = "0.1.0"
