"""Independent ground-truth machinery for checking the analytical bounds.

Nothing in here shares code paths with the bound formulas: yields are
re-derived by enumerating photon fates, gains are rebuilt as Poisson
mixtures, and the decoy constraints are solved exactly (up to truncation)
as linear programs with a self-contained simplex.
"""

from .fock import dark_adjusted_yield, fock_yield, series_gain
from .lp_bounds import lp_yield_bound
from .simplex import LinearProgramInfeasible, solve_bounded_lp

__all__ = [
    "dark_adjusted_yield",
    "fock_yield",
    "series_gain",
    "lp_yield_bound",
    "solve_bounded_lp",
    "LinearProgramInfeasible",
]
