"""3-PSK coherent-state ensembles and their 3-dimensional embedding."""

from dataclasses import dataclass, field

import numpy as np

from . import smallmat
from .constants import TOL
from .errors import ValidationError

OMEGA = np.exp(2j * np.pi / 3)
EQUAL_PRIORS = (1 / 3, 1 / 3, 1 / 3)


def coherent_overlap(a, b):
    """<a|b> for coherent states with complex amplitudes a and b."""
    a = complex(a)
    b = complex(b)
    return np.exp(-(abs(a) ** 2 + abs(b) ** 2) / 2 + np.conj(a) * b)


@dataclass(frozen=True, eq=False)
class CoherentEnsemble:
    """Three PSK coherent states, each cut into ``n_slices`` equal time slices.

    ``gram``, ``state_vectors`` and ``symmetry_op`` describe a single slice
    (amplitudes ``split_amplitudes``). All operators are expressed in the
    eigenbasis of the cyclic shift, where it reads diag(1, w, w^2).
    """

    mean_photon: float
    amplitudes: np.ndarray
    split_amplitudes: np.ndarray
    priors: np.ndarray
    gram: np.ndarray
    gram_values: np.ndarray  # indexed by Fourier mode k, not sorted
    state_vectors: np.ndarray  # row m is |beta_m> in the shift eigenbasis
    symmetry_op: np.ndarray
    n_slices: int = 2
    projectors: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self):
        return self.state_vectors.shape[1]


def _check_priors(priors):
    p = np.asarray(priors, dtype=float)
    if p.shape != (3,):
        raise ValidationError(f"need 3 priors, got shape {p.shape}")
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise ValidationError(f"priors must be finite and nonnegative: {p}")
    if abs(p.sum() - 1.0) > TOL.prior_sum:
        raise ValidationError(f"priors must sum to 1, got {p.sum()!r}")
    return p


def _circulant_spectrum(s):
    """Eigenvalues mu_k = sum_d c_d w^(-dk) of the slice Gram matrix.

    Summed as 3 e^{-s} sum_{n = k mod 3} s^n / n!, which is exact at s = 0
    and keeps full relative accuracy for the small eigenvalues.
    """
    mu = [0.0, 0.0, 0.0]
    term = 1.0
    n = 0
    while True:
        mu[n % 3] += term
        n += 1
        term *= s / n
        if term <= 1e-17 * mu[0] and n > s:
            break
    return 3.0 * np.exp(-s) * np.array(mu)


def build_ensemble(mean_photon, priors=EQUAL_PRIORS, n_slices=2):
    """Build the 3-PSK ensemble with total mean photon number ``mean_photon``.

    With the default ``n_slices=2`` the per-slice amplitudes are
    beta_m = alpha_m / sqrt(2); ``n_slices=1`` gives the undivided states.
    """
    mean_photon = float(mean_photon)
    if not np.isfinite(mean_photon) or mean_photon < 0:
        raise ValidationError(f"mean_photon must be >= 0, got {mean_photon}")
    if int(n_slices) < 1:
        raise ValidationError("n_slices must be >= 1")
    n_slices = int(n_slices)
    p = _check_priors(priors)

    alpha = np.sqrt(mean_photon)
    amps = alpha * OMEGA ** np.arange(3)
    betas = amps / np.sqrt(n_slices)
    slice_photons = mean_photon / n_slices

    # circulant: <beta_j|beta_k> = exp(|beta|^2 (w^(k-j) - 1))
    row = np.exp(slice_photons * (OMEGA ** np.arange(3) - 1.0))
    jk = (np.arange(3)[None, :] - np.arange(3)[:, None]) % 3
    gram = smallmat.herm(row[jk])

    k = np.arange(3)
    mu = _circulant_spectrum(slice_photons)

    states = np.sqrt(mu)[None, :] * OMEGA ** np.outer(k, k) / np.sqrt(3)
    v = np.diag(OMEGA ** k)

    return CoherentEnsemble(
        mean_photon=mean_photon,
        amplitudes=amps,
        split_amplitudes=betas,
        priors=p,
        gram=gram,
        gram_values=mu,
        state_vectors=states,
        symmetry_op=v,
        n_slices=n_slices,
        projectors=smallmat.outer(states),
    )


def gram_eigenvalues(e):
    """Gram eigenvalues in descending order, clamped at zero."""
    mu = np.sort(np.asarray(e.gram_values, dtype=float))[::-1]
    mu = np.where((mu < 0) & (mu > -TOL.prior_sum), 0.0, mu)
    return mu


def with_priors(e, priors):
    """Same states, different prior probabilities."""
    return build_ensemble(e.mean_photon, priors, e.n_slices)
