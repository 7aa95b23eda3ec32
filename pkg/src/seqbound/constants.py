"""Numerical tolerances shared by the solvers and the test suite."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # eigensolver
    jacobi_offdiag: float = 1e-13
    jacobi_max_sweeps: int = 100
    # PSD / POVM validity
    psd: float = 1e-9
    # minimum-error measurement
    mem_gap: float = 1e-7
    mem_gap_target: float = 1e-12
    mem_max_iter: int = 10_000
    rank_zero: float = 1e-14
    # simplex sampling
    prior_clip: float = 1e-6
    prior_sum: float = 1e-12
    # polytope
    halfspace_dedup: float = 1e-9
    vertex_dedup: float = 1e-7
    vertex_feasibility: float = 1e-7
    det_min: float = 1e-10
    # cutting-plane solver
    dp_violation: float = 1e-7
    dp_violation_target: float = 1e-10
    dp_objective_change: float = 1e-9
    dp_stall_rounds: int = 50
    dp_max_rounds: int = 2000
    lp_feasibility: float = 1e-10
    # reporting
    mode_agreement: float = 1e-6
    mode_defect: float = 1e-5
    strict_gap: float = 1e-5


TOL = Tolerances()
