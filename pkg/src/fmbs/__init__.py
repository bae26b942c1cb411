"""Joint scalar-basis design and functional map computation on mesh pairs."""

from .descriptors import DescriptorSet, combine, landmark_descriptors, make_descriptors, wks
from .errors import (
    DivergenceError,
    IllPosedSteinError,
    MeshError,
    NotPositiveDefiniteError,
    RankDeficiencyError,
)
from .evaluate import ErrorCurve, emit_report, feature_errors, geodesic_error_curve
from .extract import PointMap, extract_p2p, icp_refine, transfer_function
from .linalg import g_orthonormalize, pseudo_inverse, solve_spd, solve_stein
from .mesh import MassMatrix, TriMesh, cotan_weights, geodesic_distances, load_mesh, lumped_mass
from .solver import (
    ResidualRecord,
    SolverParams,
    SolverState,
    energy_fid,
    energy_regularizers,
    finalize,
    run,
)
from .convergent import ConvergentBlocks, run_convergent
from .spectral import (
    LBBasis,
    PODSubspace,
    ReducedProblem,
    lb_eigenbasis,
    lift,
    pod_modes,
    reduce_problem,
)

__version__ = "0.1.0"

__all__ = [
    "DescriptorSet", "combine", "landmark_descriptors", "make_descriptors", "wks",
    "DivergenceError", "IllPosedSteinError", "MeshError", "NotPositiveDefiniteError",
    "RankDeficiencyError",
    "ErrorCurve", "emit_report", "feature_errors", "geodesic_error_curve",
    "PointMap", "extract_p2p", "icp_refine", "transfer_function",
    "g_orthonormalize", "pseudo_inverse", "solve_spd", "solve_stein",
    "MassMatrix", "TriMesh", "cotan_weights", "geodesic_distances", "load_mesh", "lumped_mass",
    "ResidualRecord", "SolverParams", "SolverState", "energy_fid", "energy_regularizers",
    "finalize", "run",
    "ConvergentBlocks", "run_convergent",
    "LBBasis", "PODSubspace", "ReducedProblem", "lb_eigenbasis", "lift", "pod_modes",
    "reduce_problem",
]
