"""
Outer polytope of the achievable conditional-success region.

Every MEM solve at priors p yields a certified offset c(p) with
p . q <= c(p) for all triples q = (<b_m|B_m|b_m>)_m that any measurement on
the slice states can reach. Intersecting those halfspaces with the unit box
gives a polytope that contains the region by construction.
"""

import csv
import itertools
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .constants import TOL
from .errors import ValidationError
from .mem import solve_mem_batch

log = logging.getLogger(__name__)

PERMUTATIONS = tuple(itertools.permutations(range(3)))

BOX_NORMALS = np.vstack([np.eye(3), -np.eye(3)])
BOX_OFFSETS = np.concatenate([np.ones(3), np.zeros(3)])


@dataclass(eq=False)
class QPolytope:
    """Supporting halfspaces ``normals @ q <= offsets`` plus the unit box."""

    normals: np.ndarray  # (K, 3), rows on the probability simplex
    offsets: np.ndarray  # (K,)
    vertices: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    n_unconverged: int = 0

    @property
    def n_supporting(self):
        return len(self.offsets)

    @property
    def n_halfspaces(self):
        return len(self.offsets) + len(BOX_OFFSETS)

    def halfspaces(self):
        """All halfspaces as (A, b) with A q <= b, box faces last."""
        a = np.vstack([self.normals, BOX_NORMALS])
        b = np.concatenate([self.offsets, BOX_OFFSETS])
        return a, b

    def contains(self, q, tol=TOL.psd):
        """Membership test for one point or a stack of points."""
        a, b = self.halfspaces()
        q = np.atleast_2d(q)
        return np.all(q @ a.T <= b + tol, axis=1)


def sample_priors(n, scheme="grid"):
    """Deterministic prior vectors strictly inside the probability simplex.

    ``grid``: the triangular lattice with ``n`` points per edge (n(n+1)/2
    points). ``fibonacci``: ``n`` points of a golden-ratio lattice mapped
    uniformly onto the simplex. Either way components are pulled in to at
    least ``TOL.prior_clip`` by the affine map p -> e + (1 - 3e) p.
    """
    n = int(n)
    if n < 1:
        raise ValidationError("n must be >= 1")
    if scheme == "grid":
        if n == 1:
            pts = np.full((1, 3), 1 / 3)
        else:
            ij = [(i, j) for i in range(n) for j in range(n - i)]
            ij = np.array(ij, dtype=float)
            k = (n - 1) - ij.sum(axis=1)
            pts = np.column_stack([ij, k]) / (n - 1)
    elif scheme == "fibonacci":
        golden = (np.sqrt(5.0) - 1.0) / 2.0
        i = np.arange(n)
        u = (i + 0.5) / n
        v = (i * golden) % 1.0
        r = np.sqrt(u)
        pts = np.column_stack([1.0 - r, r * (1.0 - v), r * v])
    else:
        raise ValidationError(f"unknown sampling scheme {scheme!r}")
    e = TOL.prior_clip
    pts = e + (1.0 - 3.0 * e) * pts
    # put the last component on the exact complement so rows sum to 1
    pts[:, 2] = 1.0 - pts[:, 0] - pts[:, 1]
    return pts


def polytope_priors(n, scheme="grid"):
    """``sample_priors(n, scheme)`` plus the centroid when the lattice misses it.

    The equal-prior plane is the one that pins the bound for identical states.
    """
    pts = sample_priors(n, scheme)
    centroid = np.full(3, 1 / 3)
    if not np.any(np.all(np.abs(pts - centroid) <= TOL.halfspace_dedup, axis=1)):
        pts = np.vstack([pts, centroid])
    return pts


def _canonical(normals, offsets):
    """Sort rows, drop duplicate normals within tolerance (keeping the tighter offset)."""
    if len(offsets) == 0:
        return normals, offsets
    key = np.round(normals / TOL.halfspace_dedup).astype(np.int64)
    order = np.lexsort((offsets, key[:, 2], key[:, 1], key[:, 0]))
    key, normals, offsets = key[order], normals[order], offsets[order]
    step = np.any(np.diff(key, axis=0) != 0, axis=1)
    starts = np.concatenate([[0], np.flatnonzero(step) + 1])
    return normals[starts], np.minimum.reduceat(offsets, starts)


def permutation_closure(normals, offsets):
    """Add every coordinate permutation of each halfspace."""
    ns = np.vstack([normals[:, list(p)] for p in PERMUTATIONS])
    cs = np.concatenate([offsets] * len(PERMUTATIONS))
    return ns, cs


def build_qpolytope(e, priors_list, cache_dir=None, cache_key=None):
    """Outer polytope from certified MEM halfspaces at each prior vector.

    Halfspaces are closed under coordinate permutations (the slice ensemble
    is symmetric under all of them, so the same certified offset holds),
    deduplicated and stored in sorted order.
    """
    if cache_dir is not None and cache_key is not None:
        path = cache_path(cache_dir, *cache_key)
        if os.path.exists(path):
            normals, offsets = load_halfspaces(path)
            log.debug("loaded %d halfspaces from %s", len(offsets), path)
            return QPolytope(normals, offsets)

    priors = np.atleast_2d(np.asarray(priors_list, dtype=float))
    if priors.size == 0:
        raise ValidationError("priors list is empty")
    batch = solve_mem_batch(e.state_vectors, priors)
    n_bad = int(np.count_nonzero(~batch.converged))
    if n_bad:
        log.warning("%d of %d MEM solves above the gap tolerance; offsets remain certified",
                    n_bad, len(priors))
    normals, offsets = permutation_closure(batch.priors, batch.certified_upper)
    normals, offsets = _canonical(normals, offsets)
    if len(offsets) == 0:
        raise ValidationError("no supporting halfspaces")
    poly = QPolytope(normals, offsets, n_unconverged=n_bad)

    if cache_dir is not None and cache_key is not None:
        save_halfspaces(cache_path(cache_dir, *cache_key), normals, offsets)
    return poly


# -- cache files ---------------------------------------------------------------

def cache_path(cache_dir, mean_photon, scheme, n):
    return os.path.join(cache_dir, f"halfspaces_nbar{float(mean_photon)!r}_{scheme}_{int(n)}.csv")


def save_halfspaces(path, normals, offsets):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p1", "p2", "p3", "offset"])
        for nrm, c in zip(normals, offsets):
            w.writerow([repr(float(x)) for x in (*nrm, c)])
    os.replace(tmp, path)


def load_halfspaces(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["p1", "p2", "p3", "offset"]:
        raise ValidationError(f"{path}: not a halfspace cache file")
    data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(-1, 4)
    return data[:, :3].copy(), data[:, 3].copy()
