"""High-precision bound-state solver for spiked harmonic oscillators.

The radial problem -u'' + (r**2 + gamma*(gamma+1)/r**2 + lam*r**-alpha) u
= E u is solved by an iterated-determinant method whose termination
condition pins the eigenvalue to arbitrary precision.  The package adds
floating-point cross-checks (finite differences, shooting), eigenfunction
reconstruction, embedded reference grids, and a command-line front end.
"""

from .engine import (ConvergenceReport, PrecisionPolicy, Termination,
                     delta_sequence, solve, trajectory)
from .errors import (AccuracyError, AimSpikeError, BracketError,
                     ConfigurationError, DegenerateStateError, DomainError,
                     JetExhaustionError, NumericError, PoleError,
                     ReconstructionError, RootLostError)
from .oracle import (GridSpec, default_grid, fd_eigenpair, fd_eigenvalue,
                     perturbation_first_order, shoot_eigenvalue)
from .problem import (Ansatz, ProblemSpec, Regime, ansatz_for,
                      gamma_from_angular, r0_heuristic)
from .tables import TableReport, lookup_reference, run_table
from .wavefn import WavefnSamples, default_radii, node_count, reconstruct

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "AimSpikeError",
    "Ansatz",
    "BracketError",
    "ConfigurationError",
    "ConvergenceReport",
    "DegenerateStateError",
    "DomainError",
    "GridSpec",
    "JetExhaustionError",
    "NumericError",
    "PoleError",
    "PrecisionPolicy",
    "ProblemSpec",
    "ReconstructionError",
    "Regime",
    "RootLostError",
    "TableReport",
    "Termination",
    "WavefnSamples",
    "__version__",
    "ansatz_for",
    "default_grid",
    "default_radii",
    "delta_sequence",
    "fd_eigenpair",
    "fd_eigenvalue",
    "gamma_from_angular",
    "lookup_reference",
    "node_count",
    "perturbation_first_order",
    "r0_heuristic",
    "reconstruct",
    "run_table",
    "shoot_eigenvalue",
    "solve",
    "trajectory",
]
