"""
Minimum-error measurement (MEM) for three pure states.

The optimum for pure states is a projective measurement onto an orthonormal
basis {u_m}. It is found with a fixed-point iteration on the Lagrange
operator: with A = U^dagger Phi (Phi has columns sqrt(p_m)|psi_m>), the
update U <- polar(Phi diag(|A_mm|)) never decreases sum_m |A_mm|^2, and its
fixed points are exactly those where Y = sum_m p_m |psi_m><psi_m| Pi_m is
Hermitian. Each solve also returns a dual certificate: Y is shifted by the
smallest multiple of the identity that makes Y >= p_m |psi_m><psi_m| hold
for every m, so ``certified_upper = Tr(Y + delta I)`` is a rigorous upper
bound whether or not the iteration converged.
"""

from dataclasses import dataclass

import numpy as np

from . import smallmat
from .constants import TOL
from .ensembles import gram_eigenvalues
from .errors import ConvergenceError, UnsupportedCase, ValidationError


@dataclass(frozen=True, eq=False)
class MemResult:
    priors: np.ndarray
    success_value: float
    povm: np.ndarray  # (3, d, d)
    q: np.ndarray  # q_m = <psi_m|Pi_m|psi_m>
    dual_Y: np.ndarray
    certified_upper: float
    gap: float
    iterations: int

    def halfspace(self):
        """Supporting halfspace {q : priors . q <= certified_upper}."""
        return self.priors.copy(), self.certified_upper


@dataclass(frozen=True, eq=False)
class MemBatch:
    priors: np.ndarray  # (N, 3)
    success_value: np.ndarray  # (N,)
    q: np.ndarray  # (N, 3)
    povm: np.ndarray  # (N, 3, d, d)
    dual_Y: np.ndarray  # (N, d, d), already shifted to exact feasibility
    certified_upper: np.ndarray  # (N,)
    iterations: np.ndarray  # (N,)

    @property
    def gap(self):
        return self.certified_upper - self.success_value

    @property
    def converged(self):
        return self.gap <= TOL.mem_gap


def helstrom_binary(overlap_mod, prior):
    """Optimal success probability for two pure states with |<a|b>| = overlap_mod."""
    if not (0 <= overlap_mod <= 1) or not (0 <= prior <= 1):
        raise ValidationError("overlap_mod and prior must lie in [0, 1]")
    disc = 1.0 - 4.0 * prior * (1.0 - prior) * overlap_mod ** 2
    return 0.5 * (1.0 + np.sqrt(max(disc, 0.0)))


def srm_value(e):
    """Square-root-measurement success (1/9)(sum_k sqrt(mu_k))^2.

    Optimal for the equiprobable symmetric ensemble; with an undivided
    ensemble (``n_slices=1``) this is the quantum limit.
    """
    p = np.asarray(e.priors, dtype=float)
    if np.ptp(p) > TOL.prior_sum:
        raise UnsupportedCase("square-root measurement value needs equal priors; use solve_mem")
    mu = gram_eigenvalues(e)
    return float(np.sum(np.sqrt(mu)) ** 2 / 9.0)


def _as_prior_rows(priors):
    p = np.atleast_2d(np.asarray(priors, dtype=float))
    if p.ndim != 2 or p.shape[1] != 3:
        raise ValidationError(f"priors must have shape (N, 3), got {p.shape}")
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise ValidationError("priors must be finite and nonnegative")
    if np.any(np.abs(p.sum(axis=1) - 1.0) > TOL.prior_sum):
        raise ValidationError("each prior row must sum to 1")
    return p


def _lagrange_gap(a):
    """Duality gap of the projective measurement with amplitudes A = U^dag Phi."""
    amm = np.diagonal(a, axis1=-2, axis2=-1)
    value = np.sum(np.abs(amm) ** 2, axis=-1)
    yt = smallmat.hermitian_part(a * np.conj(amm)[:, None, :])
    delta = np.zeros(len(a))
    for m in range(a.shape[-1]):
        lam, _ = smallmat.max_eig(smallmat.outer(a[:, :, m]) - yt)
        delta = np.maximum(delta, lam)
    return smallmat.trace(yt) + a.shape[-1] * delta - value


def _mm_solve(phi, max_iter, check_every=5):
    """Iterate U <- polar(Phi diag(d)) on a stack; returns unitaries and counts."""
    n, d, _ = phi.shape
    weights = np.ones((n, 3))
    u = smallmat.polar_unitary(phi * weights[:, None, :])
    iters = np.zeros(n, dtype=int)
    active = np.arange(n)
    best_gap = np.full(n, np.inf)
    stale = np.zeros(n, dtype=int)
    it = 0
    while active.size and it < max_iter:
        it += 1
        ph = phi[active]
        a = smallmat.dagger(u[active]) @ ph
        w = np.abs(np.diagonal(a, axis1=-2, axis2=-1))
        norm = np.linalg.norm(w, axis=1, keepdims=True)
        w = w / np.where(norm > 0, norm, 1.0)
        u[active] = smallmat.polar_unitary(ph * w[:, None, :])
        iters[active] = it
        if it % check_every == 0:
            a = smallmat.dagger(u[active]) @ ph
            gap = _lagrange_gap(a)
            improved = gap < best_gap[active] * (1 - 1e-3)
            best_gap[active] = np.minimum(best_gap[active], gap)
            stale[active] = np.where(improved, 0, stale[active] + check_every)
            done = (gap <= TOL.mem_gap_target) | ((gap <= TOL.mem_gap) & (stale[active] >= 50))
            active = active[~done]
    return u, iters


def solve_mem_batch(states, priors, max_iter=None):
    """Solve many MEM problems for the same pure states and different priors.

    ``states`` holds |psi_m> in its rows. Non-convergence is not raised here;
    check ``MemBatch.converged``. Certified bounds are valid in every row.
    """
    states = np.asarray(states, dtype=complex)
    p = _as_prior_rows(priors)
    n = len(p)
    dim = states.shape[1]
    max_iter = TOL.mem_max_iter if max_iter is None else max_iter
    proj = smallmat.outer(states)  # (3, d, d)
    eye = np.eye(dim)

    povm = np.zeros((n, 3, dim, dim), dtype=complex)
    iters = np.zeros(n, dtype=int)

    gram = states.conj() @ states.T
    mu = smallmat.eigvalsh(gram)
    identical = mu[1] <= TOL.rank_zero * max(1.0, mu[0])
    support = np.count_nonzero(p > 0, axis=1)
    trivial = (support == 1) | identical
    # identical states or a single candidate: guess the lowest-index max prior
    if np.any(trivial):
        idx = np.flatnonzero(trivial)
        best = np.argmax(p[idx], axis=1)
        povm[idx, best] = eye

    rest = np.flatnonzero(~trivial)
    if rest.size:
        phi = states.T[None, :, :] * np.sqrt(p[rest])[:, None, :]
        u, it = _mm_solve(phi, max_iter)
        iters[rest] = it
        # Pi_m = u_m u_m^dagger with u_m the m-th column
        povm[rest] = smallmat.outer(np.swapaxes(u, 1, 2))

    # q_m = <psi_m|Pi_m|psi_m>
    q = np.real(np.einsum("mi,nmij,mj->nm", states.conj(), povm, states))
    q = np.clip(q, 0.0, 1.0)
    value = np.sum(p * q, axis=1)

    # Lagrange operator Y = sum_m p_m |psi_m><psi_m| Pi_m, then exact shift
    y = np.einsum("nm,mij,nmjk->nik", p, proj, povm)
    y = smallmat.hermitian_part(y)
    weighted = p[:, :, None, None] * proj[None]
    delta = np.zeros(n)
    for m in range(3):
        lam, _ = smallmat.max_eig(weighted[:, m] - y)
        delta = np.maximum(delta, lam)
    y = y + delta[:, None, None] * eye
    cert = smallmat.trace(y)

    return MemBatch(
        priors=p,
        success_value=value,
        q=q,
        povm=povm,
        dual_Y=y,
        certified_upper=cert,
        iterations=iters,
    )


def solve_mem(e, priors=None, max_iter=None):
    """MEM for the states of ensemble ``e`` under ``priors`` (default: e.priors).

    Raises :class:`ConvergenceError` when the duality gap stays above
    tolerance; the attached result's ``certified_upper`` is still valid.
    """
    pr = e.priors if priors is None else priors
    b = solve_mem_batch(e.state_vectors, [pr], max_iter=max_iter)
    res = MemResult(
        priors=b.priors[0],
        success_value=float(b.success_value[0]),
        povm=b.povm[0],
        q=b.q[0],
        dual_Y=b.dual_Y[0],
        certified_upper=float(b.certified_upper[0]),
        gap=float(b.gap[0]),
        iterations=int(b.iterations[0]),
    )
    if res.gap > TOL.mem_gap:
        raise ConvergenceError(
            f"MEM duality gap {res.gap:.3e} after {res.iterations} iterations",
            gap=res.gap,
            bound=res.certified_upper,
            result=res,
        )
    return res
