from .cones import (
    Cone,
    project_cone,
    project_cone_product,
    project_dual_cone,
    project_dual_cone_product,
)
from .program import StandardConicProgram, dump_program, load_program
from .stuffing import (
    Slot,
    StuffingTemplate,
    a_data_index,
    single_user_power_min_template,
    stuff,
    stuff_single_user,
)
from .admm import (
    DUAL_INFEASIBLE,
    MAX_ITERATIONS,
    OPTIMAL,
    PRIMAL_INFEASIBLE,
    AdmmSolver,
    ConicSolution,
    SolverFailure,
    SolverOptions,
    admm_solve,
)
from .complexify import (
    AffineRow,
    Block,
    ComplexConicProgram,
    EmbeddedProgram,
    NONNEG_BLOCK,
    SOC_BLOCK,
    ZERO_BLOCK,
    embed_complex,
    row,
)

__all__ = [
    "Cone",
    "project_cone",
    "project_cone_product",
    "project_dual_cone",
    "project_dual_cone_product",
    "StandardConicProgram",
    "dump_program",
    "load_program",
    "Slot",
    "StuffingTemplate",
    "a_data_index",
    "single_user_power_min_template",
    "stuff",
    "stuff_single_user",
    "AdmmSolver",
    "ConicSolution",
    "SolverOptions",
    "SolverFailure",
    "admm_solve",
    "OPTIMAL",
    "PRIMAL_INFEASIBLE",
    "DUAL_INFEASIBLE",
    "MAX_ITERATIONS",
    "AffineRow",
    "Block",
    "ComplexConicProgram",
    "EmbeddedProgram",
    "embed_complex",
    "row",
    "ZERO_BLOCK",
    "NONNEG_BLOCK",
    "SOC_BLOCK",
]
