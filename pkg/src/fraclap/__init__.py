"""Exact P1 stiffness matrices of the 1D integral fractional Laplacian,
their diagonal dominance, and maximum-principle-preserving solvers."""
from .exceptions import ConvergenceError, DomainError, MonitorViolation
from .kernel import (
    KernelParams, ToeplitzSymbol, normalization_constant, scale_As,
    stiffness_first_row, stiffness_operator, symbol_half, symbol_t,
)
from .toeplitz import SpectrumReport, SymmetricToeplitz, condition_scaling, extreme_eigs, solve_spd
from .dominance import DominanceReport, classify, find_s0, n0_exact, n0_formula, row_deficits, s_star
from .poisson import ConvergenceTable, PoissonProblem, convergence_sweep, solve_poisson
from .allen_cahn import ACConfig, ACState, MonitorTrace, run

__version__ = "0.1.0"
