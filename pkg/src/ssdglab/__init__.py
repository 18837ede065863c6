"""Linear stability laboratory for filtered DG and flux reconstruction schemes."""
from .operators import OperatorSet, build_operators
from .schemes import FilterPair, SchemeError, SchemeSpec, build_filter, equivalence_verdict
from .timestepping import RK33, RK44, RK45, cfl_limit
from .vonneumann import assemble_H, solve_modes, spectral_order

__all__ = [
    "OperatorSet", "build_operators", "FilterPair", "SchemeError", "SchemeSpec", "build_filter",
    "equivalence_verdict", "RK33", "RK44", "RK45", "cfl_limit", "assemble_H", "solve_modes",
    "spectral_order",
]
__version__ = "0.1.0"
