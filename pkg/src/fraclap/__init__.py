"""Finite element toolkit for the integral fractional Laplacian.

P1 elements on uniform and boundary-graded meshes (d = 1, 2) for:

- the linear Dirichlet problem (-Delta)^s u = f, u = 0 outside Omega,
  with singularity-adapted pair quadrature and exact complement weights;
- multilevel (BPX) preconditioned conjugate gradients;
- a 1D sinc-quadrature (Dunford-Taylor) nonconforming solver;
- the fractional obstacle problem via a primal-dual active set method;
- nonlocal minimal graphs (s < 1/2) via damped Newton with geometric
  error functionals.
"""

__version__ = "0.1.0"

from .mesh import (
    Domain,
    Mesh,
    MeshHierarchy,
    annulus_domain,
    build_graded,
    build_hierarchy,
    coarse_mesh,
    disk_domain,
    interval_domain,
    square_domain,
    uniform_refine,
)
from .quadrature import QuadratureSpec, complement_weight
from .assembly import (
    NodalField,
    StiffnessMatrix,
    assemble_load,
    assemble_stiffness,
    complement_mass,
    energy_product,
    free_nodes,
    pair_matrix,
)
from .solve import (
    BpxPreconditioner,
    SolveReport,
    SolverOptions,
    cg,
    condition_number,
    estimate_condition,
    gauss_seidel,
)
from .linear import (
    GetoorSolution,
    RateTable,
    convergence_study,
    energy_error_exact,
    solve_dirichlet,
)
from .dunford_taylor import (
    DtOperator,
    SincGrid,
    dt_convergence_study,
    sinc_scalar_check,
    solve_dt,
)
from .obstacle import (
    ObstacleProblem,
    ball_obstacle,
    complementarity_residual,
    obstacle_convergence_study,
    solve_obstacle_pdas,
)
from .minimal_graph import (
    GraphKernel,
    GraphProblem,
    GraphState,
    PRESET_NAMES,
    energy,
    es_convergence_study,
    geometric_error_classical,
    geometric_error_es,
    graph_preset,
    jacobian,
    kernel_eval,
    residual,
    solve_graph_newton,
    stickiness_indicator,
)

__all__ = [
    "__version__",
    "Domain", "Mesh", "MeshHierarchy", "annulus_domain", "build_graded",
    "build_hierarchy", "coarse_mesh", "disk_domain", "interval_domain",
    "square_domain", "uniform_refine",
    "QuadratureSpec",
    "NodalField", "StiffnessMatrix", "assemble_load", "assemble_stiffness",
    "complement_mass", "complement_weight", "energy_product", "free_nodes",
    "pair_matrix",
    "BpxPreconditioner", "SolveReport", "SolverOptions", "cg",
    "condition_number", "estimate_condition", "gauss_seidel",
    "GetoorSolution", "RateTable", "convergence_study",
    "energy_error_exact", "solve_dirichlet",
    "DtOperator", "SincGrid", "dt_convergence_study", "sinc_scalar_check",
    "solve_dt",
    "ObstacleProblem", "ball_obstacle", "complementarity_residual",
    "obstacle_convergence_study", "solve_obstacle_pdas",
    "GraphKernel", "GraphProblem", "GraphState", "PRESET_NAMES", "energy",
    "es_convergence_study", "geometric_error_classical",
    "geometric_error_es", "graph_preset", "jacobian", "kernel_eval",
    "residual", "solve_graph_newton", "stickiness_indicator",
]
