"""Certified bounds on sequential discrimination of 3-PSK coherent states."""

from .constants import TOL
from .dpsolver import DualSolution, certify, solve_dp_prime, symmetrize_check
from .ensembles import CoherentEnsemble, build_ensemble, gram_eigenvalues, with_priors
from .errors import (ConvergenceError, SeqboundError, SolverFailure, StructuralError,
                     UnsupportedCase, ValidationError)
from .mem import MemResult, helstrom_binary, solve_mem, srm_value
from .primal import BobLibrary, PrimalResult, default_library, effective_operators, optimize_alice
from .qregion import QPolytope, build_qpolytope, polytope_priors, sample_priors
from .sweep import BoundRecord, SweepConfig, read_csv, report, run_sweep, write_csv
from .vertexenum import VertexSet, bruteforce_vertices, enumerate_vertices

__version__ = "0.1.0"
