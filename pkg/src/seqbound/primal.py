"""
Explicit two-step strategies, giving lower bounds on the sequential optimum.

Bob holds a finite library of measurements on his slice. Alice measures
first and her outcome omega selects Bob's measurement omega. For a fixed
library the best Alice measurement solves a minimum-error problem over the
effective operators

    F_omega = sum_m p_m <b_m|B_m^(omega)|b_m> |b_m><b_m|

which is done with the same cutting-plane trace minimization used for the
vertex-constrained bound; the LP multipliers of the cuts give Alice's POVM.
"""

from dataclasses import dataclass

import numpy as np

from . import smallmat
from .constants import TOL
from .dpsolver import cutting_plane
from .errors import ConvergenceError, ValidationError
from .mem import solve_mem_batch
from .qregion import sample_priors


@dataclass(frozen=True, eq=False)
class BobLibrary:
    povms: np.ndarray  # (L, 3, d, d)
    q: np.ndarray  # (L, 3)
    source_priors: np.ndarray  # (L, 3), NaN rows for the guessing POVMs

    def __len__(self):
        return len(self.povms)


@dataclass(frozen=True, eq=False)
class PrimalResult:
    success_value: float
    alice_povm: np.ndarray  # (L, d, d), one element per library entry
    chosen_bob_indices: list
    dual_bound: float

    @property
    def gap(self):
        return self.dual_bound - self.success_value


def conditional_success(e, povms):
    """q_m = <b_m|B_m|b_m> for each POVM in a stack (L, 3, d, d)."""
    s = e.state_vectors
    return np.real(np.einsum("mi,lmij,mj->lm", s.conj(), povms, s))


def make_library(e, povms, source_priors=None):
    povms = np.asarray(povms, dtype=complex)
    if povms.ndim != 4 or povms.shape[1] != 3:
        raise ValidationError(f"POVM stack must be (L, 3, d, d), got {povms.shape}")
    eye = np.eye(povms.shape[-1])
    if np.any(np.abs(povms.sum(axis=1) - eye).max(axis=(-2, -1)) > TOL.psd):
        raise ValidationError("POVM elements do not sum to the identity")
    lo = smallmat.eigvalsh(povms)[..., -1]
    if np.any(lo < -TOL.psd):
        raise ValidationError("POVM element is not positive semidefinite")
    if source_priors is None:
        source_priors = np.full((len(povms), 3), np.nan)
    return BobLibrary(povms, conditional_success(e, povms), np.asarray(source_priors, float))


def default_library(e, n):
    """MEM measurements at about ``n`` lattice priors plus the three guessing POVMs.

    Uses the largest triangular lattice with at most ``n`` points, so the
    library never has more than n + 3 entries.
    """
    n = int(n)
    if n < 1:
        raise ValidationError("n must be >= 1")
    k = int((np.sqrt(8 * n + 1) - 1) // 2)
    priors = sample_priors(max(k, 1), "grid")
    batch = solve_mem_batch(e.state_vectors, priors)
    d = e.dim
    guess = np.zeros((3, 3, d, d), dtype=complex)
    for m in range(3):
        guess[m, m] = np.eye(d)
    povms = np.concatenate([batch.povm, guess])
    src = np.vstack([batch.priors, np.full((3, 3), np.nan)])
    lib = make_library(e, povms, src)
    # entries with the same q-triple are interchangeable for Alice
    key = np.round(lib.q / TOL.halfspace_dedup).astype(np.int64)
    _, idx = np.unique(key, axis=0, return_index=True)
    idx = np.sort(idx)
    return BobLibrary(lib.povms[idx], lib.q[idx], lib.source_priors[idx])


def effective_operators(e, lib):
    """F_omega = sum_m p_m q_m^(omega) |b_m><b_m| for every library entry."""
    return np.einsum("lm,m,mij->lij", lib.q, e.priors, e.projectors)


def optimize_alice(e, lib):
    """Best Alice POVM for a fixed Bob library.

    Raises :class:`ConvergenceError` (with the feasible result attached) when
    the primal/dual gap stays above ``TOL.mem_gap``.
    """
    if len(lib) == 0:
        raise ValidationError("empty library")
    F = effective_operators(e, lib)
    d = F.shape[-1]
    if len(lib) == 1:
        a = np.eye(d, dtype=complex)[None]
        v = float(smallmat.trace(F[0]))
        return PrimalResult(v, a, [0], v)

    init = []
    for i, f in enumerate(F):
        lam, u = smallmat.max_eig(f)
        if lam > 0:
            init.append((u, lam, i))
    cp = cutting_plane(F, "general", init=init)

    # Alice's POVM from the cut multipliers; X >= 0 cuts carry F = 0 and are
    # folded into the first outcome, which can only raise the value
    A = np.zeros((len(F), d, d), dtype=complex)
    for u, s, lam in zip(cp.cut_vectors, cp.cut_sources, cp.multipliers):
        if lam <= 0:
            continue
        A[max(s, 0)] += lam * smallmat.outer(u)
    A = smallmat.hermitian_part(A)
    S = A.sum(axis=0)
    Sih = smallmat.psd_sqrt(S, inverse=True)
    A = smallmat.hermitian_part(Sih @ A @ Sih)

    value = float(np.sum(np.real(np.einsum("lij,lji->l", A, F))))
    upper = float(smallmat.trace(cp.X) + d * max(0.0, cp.max_violation))
    chosen = [int(i) for i in np.flatnonzero(smallmat.trace(A) > 1e-12)]
    res = PrimalResult(value, A, chosen, upper)
    if res.gap > TOL.mem_gap:
        raise ConvergenceError(
            f"Alice optimization gap {res.gap:.3e}", gap=res.gap, bound=value, result=res)
    return res
