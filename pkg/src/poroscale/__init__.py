"""Two-scale simulator for reactive transport with crystal dissolution and
precipitation in periodic porous media."""

__version__ = "0.1.0"

from ._kernels import backend_name
from .cell import (CellFlow, CorrectorSet, EffectiveCoefficients,
                   assemble_effective, effective_sweep, solve_corrector,
                   solve_effective, solve_k0, solve_stokes_cell)
from .geometry import (PerforatedDomain, UnitCell, build_perforated_domain,
                       build_unit_cell)
from .kinetics import (DissolutionValue, KineticsParams, langmuir_rate,
                       lipschitz_bound, psi_delta, psi_multivalued,
                       surface_ode_step)
from .macro import MacroState, macro_simulate, macro_step, sink_term
from .micro import (BoundaryData, MicroState, mass_audit, micro_simulate)
from .upscale import (ErrorTable, compare_micro_macro, epsilon_sweep,
                      limit_order_study)

__all__ = [
    "backend_name",
    "BoundaryData", "CellFlow", "CorrectorSet", "DissolutionValue",
    "EffectiveCoefficients", "ErrorTable", "KineticsParams", "MacroState",
    "MicroState", "PerforatedDomain", "UnitCell",
    "assemble_effective", "build_perforated_domain", "build_unit_cell",
    "compare_micro_macro", "effective_sweep", "epsilon_sweep",
    "langmuir_rate", "limit_order_study", "lipschitz_bound", "macro_simulate",
    "macro_step", "mass_audit", "micro_simulate", "psi_delta",
    "psi_multivalued", "sink_term", "solve_corrector", "solve_effective",
    "solve_k0", "solve_stokes_cell", "surface_ode_step",
]
