"""
Trace minimization under finitely many operator-dominance constraints.

    minimize Tr X  subject to  X >= H_v  for every constraint matrix H_v

solved by a cutting-plane method: the semidefinite constraints are replaced
by linear cuts u^dag X u >= u^dag H_v u, generated from top eigenvectors of
H_v - X, with a small dense LP solved between scans. In ``symmetric`` mode
X is diagonal (3 real unknowns), in ``general`` mode it is a full Hermitian
matrix (9 real unknowns).

The value reported as ``certified_bound`` is Tr(X + delta I) with delta the
largest violation over *all* constraints, so it is a valid upper bound no
matter where the iteration stopped.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import smallmat
from .constants import TOL
from .errors import ConvergenceError, SolverFailure

log = logging.getLogger(__name__)

MODES = ("symmetric", "general")


@dataclass(frozen=True, eq=False)
class DualSolution:
    X: np.ndarray
    trace_value: float
    max_violation: float
    iterations: int
    mode: str
    n_cuts: int
    n_constraints: int

    @property
    def certified_bound(self):
        return self.trace_value + self.X.shape[0] * max(0.0, self.max_violation)


@dataclass(frozen=True, eq=False)
class CutPlaneResult:
    """Raw cutting-plane output, including the LP multipliers of the cuts."""

    x: np.ndarray
    X: np.ndarray
    cut_vectors: np.ndarray  # (C, d)
    cut_sources: np.ndarray  # (C,) constraint index, -1 for X >= 0 cuts
    multipliers: np.ndarray  # (C,) >= 0
    max_violation: float
    rounds: int


# -- parametrization ------------------------------------------------------------

def _n_vars(mode, d):
    return d if mode == "symmetric" else d * d


def _offdiag_pairs(d):
    return [(k, l) for k in range(d) for l in range(k + 1, d)]


def params_to_matrix(x, mode, d=3):
    if mode == "symmetric":
        return np.diag(np.asarray(x, dtype=float)).astype(complex)
    m = np.diag(x[:d]).astype(complex)
    for i, (k, l) in enumerate(_offdiag_pairs(d)):
        z = x[d + 2 * i] + 1j * x[d + 2 * i + 1]
        m[k, l] = z
        m[l, k] = np.conj(z)
    return m


def cut_coefficients(u, mode):
    """Row vector g with g . x = u^dag X(x) u."""
    u = np.atleast_2d(u)
    d = u.shape[1]
    diag = np.abs(u) ** 2
    if mode == "symmetric":
        return diag
    cols = [diag]
    for k, l in _offdiag_pairs(d):
        c = np.conj(u[:, k]) * u[:, l]
        cols.append(np.column_stack([2 * c.real, -2 * c.imag]))
    return np.hstack(cols)


def _psd_cut_vectors(mode, d):
    """Directions whose cuts u^dag X u >= 0 keep the first LP bounded."""
    vecs = list(np.eye(d, dtype=complex))
    if mode == "general":
        s = 1 / np.sqrt(2)
        for k, l in _offdiag_pairs(d):
            for ph in (1, -1, 1j, -1j):
                u = np.zeros(d, dtype=complex)
                u[k] = s
                u[l] = s * ph
                vecs.append(u)
    return np.array(vecs)


# -- core loop -----------------------------------------------------------------

def cutting_plane(H, mode="general", init=None, scan=None, max_cuts_per_round=32,
                  tol=None, max_rounds=None):
    """Minimize Tr X subject to X >= H[i] for all i.

    ``init`` is an optional list of (vector, rhs, source) seed cuts. ``scan``
    may be an index array restricting the per-round violation scan (used with
    symmetry reduction); the final check always covers every constraint.

    Iterates until the worst violation is below ``tol`` (default
    ``TOL.dp_violation_target``). If progress stalls, the current point is
    accepted when its violation is within ``TOL.dp_violation``; otherwise
    :class:`ConvergenceError` is raised with the certified bound attached.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    tol = TOL.dp_violation_target if tol is None else tol
    accept = max(tol, TOL.dp_violation)
    max_rounds = TOL.dp_max_rounds if max_rounds is None else max_rounds
    H = smallmat.hermitian_part(np.asarray(H, dtype=complex))
    d = H.shape[-1]
    nv = _n_vars(mode, d)
    cost = np.zeros(nv)
    cost[:d] = 1.0
    scan_idx = np.arange(len(H)) if scan is None else np.asarray(scan)

    vecs = [*_psd_cut_vectors(mode, d)]
    rhs = [0.0] * len(vecs)
    src = [-1] * len(vecs)
    for u, r, s in (init or []):
        vecs.append(np.asarray(u, dtype=complex))
        rhs.append(float(r))
        src.append(int(s))
    rows = [cut_coefficients(v, mode)[0] for v in vecs]

    prev_obj = -np.inf
    best_viol = np.inf
    best = None
    stale = 0
    rounds = 0
    while True:
        rounds += 1
        res = _solve_lp(cost, -np.asarray(rows), -np.asarray(rhs), nv)
        x = res.x
        X = params_to_matrix(x, mode, d)
        obj = float(res.fun)

        lam, vec = smallmat.max_eig(H[scan_idx] - X)
        worst = float(lam.max())
        if worst < best_viol - 1e-12:
            best_viol = worst
            stale = 0
        else:
            stale += 1
        mult = -np.asarray(res.ineqlin.marginals)
        best = (x, X, mult, worst)

        positive = np.flatnonzero(lam > 0)
        small_change = obj - prev_obj <= TOL.dp_objective_change
        if worst <= tol and (small_change or positive.size == 0):
            break
        if positive.size == 0:
            break
        if rounds >= max_rounds or (stale >= TOL.dp_stall_rounds and worst > tol):
            if worst <= accept:
                log.debug("accepting violation %.3e after %d rounds", worst, rounds)
                break
            full = _full_violation(H, X)
            bound = smallmat.trace(X) + d * max(0.0, full)
            raise ConvergenceError(
                f"cutting plane stalled after {rounds} rounds (violation {worst:.3e})",
                gap=worst, bound=float(bound),
                result=_pack(x, X, vecs, src, mult, full, rounds))
        prev_obj = obj

        pick = positive[np.argsort(-lam[positive], kind="stable")[:max_cuts_per_round]]
        for i in pick:
            u = vec[i]
            gi = scan_idx[i]
            vecs.append(u)
            rhs.append(float(np.real(np.conj(u) @ H[gi] @ u)))
            src.append(int(gi))
            rows.append(cut_coefficients(u, mode)[0])

    x, X, mult, _ = best
    full = _full_violation(H, X)
    return _pack(x, X, vecs, src, mult, full, rounds)


_LP_ATTEMPTS = (
    ("highs-ds", True),
    ("highs-ipm", True),
    ("highs-ds", False),
    ("highs-ipm", False),
)


def _solve_lp(cost, a_ub, b_ub, nv):
    """min cost.x s.t. a_ub x <= b_ub; x free. Falls back across HiGHS methods."""
    res = None
    for method, tight in _LP_ATTEMPTS:
        opts = {}
        if tight:
            opts = {"primal_feasibility_tolerance": TOL.lp_feasibility,
                    "dual_feasibility_tolerance": TOL.lp_feasibility}
        res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * nv,
                      method=method, options=opts)
        if res.status == 0:
            return res
        log.debug("LP %s (tight=%s) status %d: %s", method, tight, res.status, res.message)
    raise SolverFailure(f"cut LP failed: {res.message}")


def _full_violation(H, X, chunk=65536):
    worst = -np.inf
    for s in range(0, len(H), chunk):
        lam, _ = smallmat.max_eig(H[s:s + chunk] - X)
        worst = max(worst, float(lam.max()))
    return worst


def _pack(x, X, vecs, src, mult, viol, rounds):
    return CutPlaneResult(
        x=np.asarray(x), X=X, cut_vectors=np.array(vecs), cut_sources=np.array(src),
        multipliers=np.asarray(mult), max_violation=float(viol), rounds=rounds)


# -- vertex-constrained bound -------------------------------------------------

def constraint_matrices(e, vertices, weights=None):
    """H_v = sum_m w_m q_m |b_m><b_m| for each vertex q (default w = priors)."""
    q = np.atleast_2d(np.asarray(getattr(vertices, "points", vertices), dtype=float))
    w = e.priors if weights is None else np.asarray(weights, dtype=float)
    return np.einsum("vm,mij->vij", q * w, e.projectors)


def _orbit_representatives(q):
    """Indices of one vertex per S3 orbit (sorted coordinates as the key)."""
    key = np.round(np.sort(q, axis=1)[:, ::-1] / TOL.vertex_dedup).astype(np.int64)
    _, idx = np.unique(key, axis=0, return_index=True)
    return np.sort(idx)


def solve_dp_prime(e, vertices, mode="symmetric", weights=None):
    """Minimize Tr X over X >= H_v for every polytope vertex v."""
    q = np.atleast_2d(np.asarray(getattr(vertices, "points", vertices), dtype=float))
    if q.size == 0:
        raise ValueError("empty vertex set")
    w = e.priors if weights is None else np.asarray(weights, dtype=float)
    H = constraint_matrices(e, q, w)
    # seed with the unit-vertex constraints X >= w_m |b_m><b_m|
    init = []
    for m in range(3):
        lam, u = smallmat.max_eig(w[m] * e.projectors[m])
        init.append((u, lam, -1))
    # with equal weights every permutation of a vertex has the same
    # spectrum against a diagonal X
    symmetric_weights = np.ptp(w) <= 1e-15
    scan = _orbit_representatives(q) if mode == "symmetric" and symmetric_weights else None
    try:
        cp = cutting_plane(H, mode, init=init, scan=scan)
    except ConvergenceError as err:
        if err.result is not None:
            err.result = _to_solution(err.result, mode, len(H))
        raise
    return _to_solution(cp, mode, len(H))


def _to_solution(cp, mode, n):
    return DualSolution(
        X=cp.X,
        trace_value=float(smallmat.trace(cp.X)),
        max_violation=cp.max_violation,
        iterations=cp.rounds,
        mode=mode,
        n_cuts=len(cp.cut_vectors),
        n_constraints=n,
    )


def certify(e, X, vertices, weights=None):
    """Tr(X + delta I) with delta the worst violation over all vertices."""
    X = smallmat.hermitian_part(np.asarray(X, dtype=complex))
    H = constraint_matrices(e, vertices, weights)
    delta = max(0.0, _full_violation(H, X))
    return float(smallmat.trace(X) + X.shape[0] * delta)


def symmetrize_check(e, vertices, weights=None):
    """(symmetric-mode trace, general-mode trace); they should coincide."""
    sym = solve_dp_prime(e, vertices, "symmetric", weights)
    gen = solve_dp_prime(e, vertices, "general", weights)
    diff = abs(sym.trace_value - gen.trace_value)
    if diff > TOL.mode_defect:
        log.warning("symmetric and general dual traces differ by %.3e", diff)
    return sym.trace_value, gen.trace_value
