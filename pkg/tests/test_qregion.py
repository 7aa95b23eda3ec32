import numpy as np
import pytest

from seqbound import qregion
from seqbound.constants import TOL
from seqbound.ensembles import build_ensemble
from seqbound.errors import ValidationError
from seqbound.mem import srm_value
from seqbound.sweep import random_povms
from seqbound.primal import conditional_success


def test_sample_grid_examples():
    np.testing.assert_allclose(qregion.sample_priors(1), [[1 / 3] * 3])
    pts = qregion.sample_priors(3)
    e = TOL.prior_clip
    assert len(pts) == 6
    assert np.any(np.all(np.abs(pts - [1 - 2 * e, e, e]) < 1e-15, axis=1))
    assert len(qregion.sample_priors(141)) == 141 * 142 // 2


@pytest.mark.parametrize("scheme", ["grid", "fibonacci"])
@pytest.mark.parametrize("n", [1, 2, 7, 50])
def test_sample_sums(scheme, n):
    pts = qregion.sample_priors(n, scheme)
    assert np.abs(pts.sum(axis=1) - 1).max() <= 1e-12
    assert pts.min() >= TOL.prior_clip - 1e-15


def test_sample_errors():
    with pytest.raises(ValidationError):
        qregion.sample_priors(0)
    with pytest.raises(ValidationError):
        qregion.sample_priors(5, "random")


def test_polytope_priors_adds_centroid():
    assert len(qregion.polytope_priors(3)) == 7
    assert len(qregion.polytope_priors(4)) == 10  # lattice already holds the centroid


def test_vacuum_offsets():
    e = build_ensemble(0.0)
    pri = qregion.sample_priors(6)
    poly = qregion.build_qpolytope(e, pri)
    np.testing.assert_allclose(poly.offsets, poly.normals.max(axis=1), atol=1e-14)


def test_centroid_only():
    e = build_ensemble(1.0)
    poly = qregion.build_qpolytope(e, [[1 / 3] * 3])
    assert poly.n_supporting == 1
    assert poly.n_halfspaces == 7
    np.testing.assert_allclose(poly.normals[0], [1 / 3] * 3)
    assert poly.offsets[0] == pytest.approx(srm_value(e), abs=1e-9)


@pytest.mark.parametrize("nbar", [0.0, 0.7, 2.0])
def test_trivial_strategies_feasible(nbar):
    poly = qregion.build_qpolytope(build_ensemble(nbar), qregion.polytope_priors(11))
    assert np.all(poly.contains(np.eye(3)))


def test_permutation_closed():
    poly = qregion.build_qpolytope(build_ensemble(1.0), qregion.sample_priors(9, "fibonacci"))
    key = {tuple(np.round(n, 9)): c for n, c in zip(poly.normals, poly.offsets)}
    for n, c in zip(poly.normals, poly.offsets):
        for p in qregion.PERMUTATIONS:
            assert key[tuple(np.round(n[list(p)], 9))] == pytest.approx(c, abs=1e-12)


def test_random_povms_inside():
    e = build_ensemble(1.2)
    poly = qregion.build_qpolytope(e, qregion.polytope_priors(21))
    q = conditional_success(e, random_povms(np.random.default_rng(0), 200))
    assert np.all(poly.contains(q))


def test_cache_roundtrip(tmp_path):
    e = build_ensemble(0.9)
    pri = qregion.polytope_priors(7)
    a = qregion.build_qpolytope(e, pri, cache_dir=tmp_path, cache_key=(0.9, "grid", 7))
    path = qregion.cache_path(tmp_path, 0.9, "grid", 7)
    assert path.endswith("halfspaces_nbar0.9_grid_7.csv")
    with open(path) as fh:
        assert fh.readline().strip() == "p1,p2,p3,offset"
    b = qregion.build_qpolytope(e, pri, cache_dir=tmp_path, cache_key=(0.9, "grid", 7))
    np.testing.assert_array_equal(a.normals, b.normals)
    np.testing.assert_array_equal(a.offsets, b.offsets)


def test_bad_cache_file(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValidationError):
        qregion.load_halfspaces(str(p))
