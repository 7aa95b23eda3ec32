import numpy as np
import pytest

import oracles
from seqbound import dpsolver, qregion, smallmat
from seqbound.ensembles import build_ensemble
from seqbound.vertexenum import enumerate_vertices

# generic conic-solver optimum of the vertex-constrained trace problem,
# polytope from the 21-per-edge lattice plus centroid (solver accuracy ~1e-9)
SDP_DUAL_21 = {
    0.5: 0.8578228038742526,
    1.0: 0.964285017592994,
    2.0: 0.9982221878022477,
}


def pipeline(nbar, n=21):
    e = build_ensemble(nbar)
    poly = qregion.build_qpolytope(e, qregion.polytope_priors(n))
    return e, enumerate_vertices(poly)


def test_params_roundtrip():
    rng = np.random.default_rng(0)
    x = rng.normal(size=9)
    X = dpsolver.params_to_matrix(x, "general")
    np.testing.assert_allclose(X, X.conj().T)
    u = rng.normal(size=3) + 1j * rng.normal(size=3)
    g = dpsolver.cut_coefficients(u, "general")[0]
    assert g @ x == pytest.approx(np.real(u.conj() @ X @ u), abs=1e-12)
    xs = rng.normal(size=3)
    gs = dpsolver.cut_coefficients(u, "symmetric")[0]
    assert gs @ xs == pytest.approx(np.real(u.conj() @ np.diag(xs) @ u), abs=1e-12)


@pytest.mark.parametrize("mode", dpsolver.MODES)
def test_vacuum(mode):
    e, vs = pipeline(0.0, 5)
    s = dpsolver.solve_dp_prime(e, vs, mode)
    assert s.trace_value == pytest.approx(1 / 3, abs=1e-9)


def test_orthogonal_limit_unit_vertices():
    e = build_ensemble(50.0)
    s = dpsolver.solve_dp_prime(e, np.eye(3), "general")
    assert s.trace_value == pytest.approx(1.0, abs=1e-4)


def test_certify_examples():
    e = build_ensemble(1.0)
    assert dpsolver.certify(e, np.eye(3), np.eye(3)) == pytest.approx(3.0)
    assert dpsolver.certify(e, np.zeros((3, 3)), np.eye(3)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("nbar", sorted(SDP_DUAL_21))
def test_against_frozen_sdp(nbar):
    e, vs = pipeline(nbar)
    s = dpsolver.solve_dp_prime(e, vs, "symmetric")
    assert abs(s.trace_value - SDP_DUAL_21[nbar]) <= 1e-7
    assert dpsolver.certify(e, s.X, vs) == pytest.approx(s.trace_value, abs=3e-7)
    assert s.certified_bound >= s.trace_value
    H = dpsolver.constraint_matrices(e, vs)
    assert np.all(smallmat.is_psd(s.X - H, 1e-7))


def test_symmetrize_check():
    e, vs = pipeline(1.0)
    sym, gen = dpsolver.symmetrize_check(e, vs)
    assert abs(sym - gen) <= 1e-6
    assert dpsolver.symmetrize_check(*pipeline(0.0, 5)) == pytest.approx((1 / 3, 1 / 3), abs=1e-9)


def test_unequal_weights_general_mode():
    e, vs = pipeline(0.8, 11)
    w = np.array([0.5, 0.3, 0.2])
    s = dpsolver.solve_dp_prime(e, vs, "general", weights=w)
    ref = oracles.dp_sdp(e.projectors, w, vs.points)
    assert abs(s.trace_value - ref) <= 1e-6


def test_monotone_tightening():
    # the 21-per-edge lattice contains the 11-per-edge one
    e = build_ensemble(1.4)
    v11 = enumerate_vertices(qregion.build_qpolytope(e, qregion.polytope_priors(11)))
    v21 = enumerate_vertices(qregion.build_qpolytope(e, qregion.polytope_priors(21)))
    b11 = dpsolver.solve_dp_prime(e, v11).certified_bound
    b21 = dpsolver.solve_dp_prime(e, v21).certified_bound
    assert b21 <= b11 + 1e-8


def test_cutting_plane_generic():
    # X >= H_i for a few random PSD H_i, compared with the conic oracle
    rng = np.random.default_rng(3)
    H = []
    for _ in range(6):
        w = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        H.append(w @ w.conj().T / 10)
    H = np.array(H)
    cp = dpsolver.cutting_plane(H, "general")
    d = 3
    import cvxpy as cvx
    X = cvx.Variable((d, d), hermitian=True)
    prob = cvx.Problem(cvx.Minimize(cvx.real(cvx.trace(X))), [X - h >> 0 for h in H])
    prob.solve(solver=cvx.CLARABEL)
    assert np.trace(cp.X).real == pytest.approx(prob.value, abs=1e-6)
    assert cp.max_violation <= 1e-7


def test_bad_mode():
    with pytest.raises(ValueError):
        dpsolver.cutting_plane(np.zeros((1, 3, 3)), "diagonal")
    with pytest.raises(ValueError):
        dpsolver.solve_dp_prime(build_ensemble(1.0), np.zeros((0, 3)))


def test_weight_scaling():
    e, vs = pipeline(1.1, 11)
    third = dpsolver.solve_dp_prime(e, vs, weights=np.full(3, 1 / 3)).trace_value
    sixth = dpsolver.solve_dp_prime(e, vs, weights=np.full(3, 1 / 6)).trace_value
    assert third == pytest.approx(2 * sixth, abs=1e-9)


def test_conjugation_invariance_and_floor():
    e, vs = pipeline(0.9, 11)
    s = dpsolver.solve_dp_prime(e, vs, "general")
    assert s.trace_value >= 1 / 3
    base = dpsolver.certify(e, s.X, vs)
    V = e.symmetry_op
    for k in (1, 2):
        Vk = np.linalg.matrix_power(V, k)
        assert dpsolver.certify(e, Vk @ s.X @ Vk.conj().T, vs) == pytest.approx(base, abs=1e-9)


def test_random_vertex_feasibility():
    e, vs = pipeline(1.6)
    s = dpsolver.solve_dp_prime(e, vs)
    idx = np.random.default_rng(0).choice(len(vs), size=100, replace=False)
    H = dpsolver.constraint_matrices(e, vs.points[idx])
    assert np.all(smallmat.is_psd(s.X - H, 1e-7))


def test_vertex_subset_monotone():
    e, vs = pipeline(1.2)
    full = dpsolver.solve_dp_prime(e, vs).trace_value
    sub = vs.points[dpsolver._orbit_representatives(vs.points)]
    # permutation closure of a subset of orbits
    rng = np.random.default_rng(1)
    keep = sub[rng.random(len(sub)) < 0.5]
    from seqbound.qregion import PERMUTATIONS
    keep = np.vstack([keep[:, list(p)] for p in PERMUTATIONS])
    part = dpsolver.solve_dp_prime(e, keep).trace_value
    assert part <= full + 1e-8
