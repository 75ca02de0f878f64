"""Structure-preserving finite differences for the Poisson-Nernst-Planck system."""
from .grid import Field, GradPair, Grid, make_grid
from .assembly import SymOperator, drift_matrix, laplacian_matrix, schur_operator, schur_rhs
from .linsolve import GaugeSpec, SolveReport, SolverError, SolverOptions, solve_gauged, solve_spd
from .stepper import SimState, SourceSet, Species, Stepper, StepFailure, initial_potential, simulate, step
from .diagnostics import StepDiagnostics, diagnose, electric_energy, mass

__version__ = "0.1.0"
