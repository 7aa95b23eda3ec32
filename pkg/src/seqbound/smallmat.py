"""
Dense complex linear algebra for small Hermitian matrices.

Every function accepts a single ``(n, n)`` array or a stack ``(..., n, n)``
and works on the whole stack at once. The eigensolver is a cyclic complex
Jacobi iteration, which is unconditionally convergent and deterministic at
the sizes used here (n <= 16, in practice 3).
"""

from typing import NamedTuple

import numpy as np

from .constants import TOL
from .errors import SolverFailure, ValidationError


class EigenDecomposition(NamedTuple):
    values: np.ndarray   # (..., n), descending
    vectors: np.ndarray  # (..., n, n), eigenvectors in columns


def herm(a):
    """Hermitian matrix (or stack) built from the lower triangle of ``a``.

    The strict upper triangle is overwritten with the conjugate of the lower
    one and the diagonal is made real, so the result is exactly Hermitian.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValidationError(f"expected square matrices, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    low = np.tril(a, -1)
    diag = np.real(np.diagonal(a, axis1=-2, axis2=-1))
    out = low + np.conj(np.swapaxes(low, -1, -2))
    idx = np.arange(a.shape[-1])
    out[..., idx, idx] = diag
    return out


def hermitian_part(a):
    """(a + a^dagger) / 2, the nearest Hermitian matrix in Frobenius norm."""
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + dagger(a))


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def outer(u, v=None):
    """|u><v| for vectors (or stacks of vectors) along the last axis."""
    u = np.asarray(u, dtype=complex)
    v = u if v is None else np.asarray(v, dtype=complex)
    return u[..., :, None] * np.conj(v)[..., None, :]


def trace(a):
    return np.real(np.trace(a, axis1=-2, axis2=-1))


def _offdiag_norm(a):
    n = a.shape[-1]
    mask = ~np.eye(n, dtype=bool)
    return np.sqrt(np.sum(np.abs(a[..., mask]) ** 2, axis=-1))


def eigh(m):
    """Eigen-decomposition of a Hermitian matrix or stack.

    Returns eigenvalues in descending order with orthonormal eigenvectors in
    the columns of ``vectors``. Raises :class:`SolverFailure` if the
    off-diagonal Frobenius norm is still above tolerance after the sweep cap.
    """
    a = herm(m)
    shape = a.shape
    n = shape[-1]
    a = a.reshape(-1, n, n).copy()
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
    scale = np.maximum(1.0, np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1))))
    tol = TOL.jacobi_offdiag * scale
    # pivots below this are left alone; far under tol, avoids subnormal division
    skip = 1e-20 * scale

    converged = n == 1
    for _ in range(TOL.jacobi_max_sweeps):
        off = _offdiag_norm(a)
        if n == 1 or np.all(off <= tol):
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                _rotate(a, v, p, q, skip)
    if not converged:
        off = _offdiag_norm(a)
        if np.all(off <= tol):
            converged = True
        else:
            raise SolverFailure("Jacobi sweeps did not converge", residual=float(off.max()))

    values = np.real(np.diagonal(a, axis1=-2, axis2=-1))
    order = np.argsort(-values, axis=-1, kind="stable")
    values = np.take_along_axis(values, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    return EigenDecomposition(values.reshape(shape[:-1]), v.reshape(shape))


def _rotate(a, v, p, q, skip):
    # Annihilate a[:, p, q] in place with the unitary J = D G, where D makes
    # the pivot real and G is a real plane rotation.
    apq = a[:, p, q]
    r = np.abs(apq)
    active = r > skip
    if not np.any(active):
        return
    phase = np.where(active, apq / np.where(active, r, 1.0), 1.0)
    app = a[:, p, p].real
    aqq = a[:, q, q].real
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(active, (aqq - app) / (2.0 * np.where(active, r, 1.0)), 0.0)
    sgn = np.where(tau >= 0, 1.0, -1.0)
    t = np.where(active, sgn / (np.abs(tau) + np.hypot(1.0, tau)), 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    ph = np.conj(phase)  # e^{-i phi}

    # columns: A <- A J
    cp = a[:, :, p].copy()
    cq = a[:, :, q]
    a[:, :, p] = c[:, None] * cp - (s * ph)[:, None] * cq
    a[:, :, q] = s[:, None] * cp + (c * ph)[:, None] * cq
    # rows: A <- J^dagger A
    rp = a[:, p, :].copy()
    rq = a[:, q, :]
    a[:, p, :] = c[:, None] * rp - (s * phase)[:, None] * rq
    a[:, q, :] = s[:, None] * rp + (c * phase)[:, None] * rq
    a[:, p, q] = 0.0
    a[:, q, p] = 0.0
    a[:, p, p] = a[:, p, p].real
    a[:, q, q] = a[:, q, q].real

    vp = v[:, :, p].copy()
    vq = v[:, :, q]
    v[:, :, p] = c[:, None] * vp - (s * ph)[:, None] * vq
    v[:, :, q] = s[:, None] * vp + (c * ph)[:, None] * vq


def eigvalsh(m):
    return eigh(m).values


def max_eig(m):
    """Largest eigenvalue and a unit eigenvector for it."""
    values, vectors = eigh(m)
    return values[..., 0], vectors[..., :, 0]


def min_eig(m):
    values, vectors = eigh(m)
    return values[..., -1], vectors[..., :, -1]


def is_psd(m, tol=0.0):
    """True iff the smallest eigenvalue is >= -tol (elementwise for stacks)."""
    if tol < 0:
        raise ValidationError("tol must be nonnegative")
    lo = eigh(m).values[..., -1]
    return lo >= -tol


def psd_sqrt(m, inverse=False):
    """Principal square root (or its inverse) of a PSD matrix stack."""
    values, vectors = eigh(m)
    values = np.clip(values, 0.0, None)
    f = 1.0 / np.sqrt(values) if inverse else np.sqrt(values)
    return (vectors * f[..., None, :]) @ dagger(vectors)


def polar_unitary(b):
    """Unitary factor W of the polar decomposition b = W P.

    Uses LAPACK's SVD rather than ``b (b^dagger b)^{-1/2}`` so that columns
    with tiny norm keep full relative accuracy.
    """
    x, _, zh = np.linalg.svd(np.asarray(b, dtype=complex))
    return x @ zh
