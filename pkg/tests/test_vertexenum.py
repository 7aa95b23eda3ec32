import numpy as np
import pytest

from seqbound import qregion
from seqbound.ensembles import build_ensemble
from seqbound.errors import StructuralError
from seqbound.mem import solve_mem_batch
from seqbound.vertexenum import bruteforce_vertices, enumerate_vertices, interior_point


def as_set(points, decimals=7):
    return sorted(map(tuple, np.round(points, decimals)))


def same_points(a, b, tol=1e-7):
    if len(a) != len(b):
        return False
    a = a[np.lexsort(a.T[::-1])]
    b = b[np.lexsort(b.T[::-1])]
    d = np.abs(a[:, None, :] - b[None, :, :]).max(axis=2)
    return bool(np.all(d.min(axis=1) <= tol) and np.all(d.min(axis=0) <= tol))


def test_unit_cube():
    vs = enumerate_vertices((qregion.BOX_NORMALS, qregion.BOX_OFFSETS))
    assert len(vs) == 8
    assert as_set(vs.points) == as_set(np.array(np.meshgrid([0, 1], [0, 1], [0, 1])).reshape(3, -1).T)


def test_corner_simplex():
    a = np.vstack([qregion.BOX_NORMALS, np.ones(3)])
    b = np.concatenate([qregion.BOX_OFFSETS, [1]])
    vs = enumerate_vertices((a, b))
    assert as_set(vs.points) == as_set(np.vstack([np.zeros(3), np.eye(3)]))
    assert same_points(vs.points, bruteforce_vertices(a, b).points)


def random_certified(rng, n):
    e = build_ensemble(rng.uniform(0.05, 2.5))
    pri = rng.dirichlet(np.ones(3), size=n)
    batch = solve_mem_batch(e.state_vectors, pri)
    return qregion.QPolytope(batch.priors, batch.certified_upper)


@pytest.mark.parametrize("seed", range(5))
def test_hull_vs_bruteforce(seed):
    rng = np.random.default_rng(seed)
    poly = random_certified(rng, 12)
    h = enumerate_vertices(poly)
    b = enumerate_vertices(poly, method="bruteforce")
    assert same_points(h.points, b.points)
    assert len(poly.vertices) == len(b)


def test_vertices_feasible_and_tight():
    rng = np.random.default_rng(11)
    poly = random_certified(rng, 10)
    a, b = poly.halfspaces()
    vs = enumerate_vertices(poly)
    slack = b[None, :] - vs.points @ a.T
    assert slack.min() >= -1e-7
    # every vertex sits on at least three halfspaces
    assert np.all(np.sum(np.abs(slack) <= 1e-7, axis=1) >= 3)


def test_interior_point_fallback():
    # shifted box that excludes (1/6, 1/6, 1/6)
    a = qregion.BOX_NORMALS
    b = np.array([3, 3, 3, -2, -2, -2], dtype=float)
    c = interior_point(a, b)
    assert np.all(a @ c < b)
    vs = enumerate_vertices((a, b))
    assert len(vs) == 8


def test_structural_errors():
    with pytest.raises(StructuralError):
        interior_point(np.array([[1.0, 0, 0], [-1.0, 0, 0]]), np.array([0.0, -1.0]))
    with pytest.raises(StructuralError):
        enumerate_vertices((np.eye(3), np.ones(3)))  # unbounded
    with pytest.raises(ValueError):
        enumerate_vertices((qregion.BOX_NORMALS, qregion.BOX_OFFSETS), method="magic")
