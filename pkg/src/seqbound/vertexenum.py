"""
Vertex enumeration for bounded intersections of halfspaces in R^3.

The production path uses polar duality: with an interior point c, each
halfspace a.q <= b maps to the dual point a / (b - a.c), and every facet of
the convex hull of the dual points corresponds to a vertex of the polytope.
Each vertex is then recomputed exactly from the three halfspaces spanning
its (triangulated) hull facet. The brute-force triple enumeration is kept
as an independent oracle for small inputs.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, cKDTree
from scipy.spatial import QhullError

from .constants import TOL
from .errors import StructuralError


@dataclass(frozen=True, eq=False)
class VertexSet:
    points: np.ndarray  # (V, 3)
    triples: np.ndarray  # (V, 3) indices of generating halfspaces
    diagnostics: tuple = ()

    def __len__(self):
        return len(self.points)


def _as_halfspaces(p):
    if hasattr(p, "halfspaces"):
        return p.halfspaces()
    a, b = p
    return np.asarray(a, dtype=float), np.asarray(b, dtype=float)


def interior_point(a, b):
    """A strictly interior point of {q : a q <= b}.

    Tries the point (1/6, 1/6, 1/6), which is interior whenever the
    halfspaces are certified supporting planes plus the unit box; otherwise
    falls back to the Chebyshev center.
    """
    c = np.full(3, 1 / 6)
    if np.min(b - a @ c) > 1e-9:
        return c
    norms = np.linalg.norm(a, axis=1)
    res = linprog(
        np.array([0.0, 0.0, 0.0, -1.0]),
        A_ub=np.column_stack([a, norms]),
        b_ub=b,
        bounds=[(None, None)] * 3 + [(0, None)],
        method="highs",
    )
    if res.status != 0 or res.x[3] <= 1e-12:
        raise StructuralError("halfspace intersection is empty or has no interior")
    return res.x[:3]


def _solve_triples(a, b, triples):
    m = a[triples]  # (T, 3, 3)
    det = np.linalg.det(m)
    ok = np.abs(det) >= TOL.det_min
    pts = np.full((len(triples), 3), np.nan)
    if np.any(ok):
        pts[ok] = np.linalg.solve(m[ok], b[triples[ok]][..., None])[..., 0]
    return pts, ok


def _max_violation(points, a, b, chunk=2048):
    out = np.empty(len(points))
    for s in range(0, len(points), chunk):
        out[s:s + chunk] = np.max(points[s:s + chunk] @ a.T - b, axis=1)
    return out


def _dedup(points, triples, radius):
    order = np.lexsort(points.T[::-1])
    points = points[order]
    triples = triples[order]
    tree = cKDTree(points)
    keep = np.ones(len(points), dtype=bool)
    for i, nbrs in enumerate(tree.query_ball_point(points, radius)):
        if not keep[i]:
            continue
        for j in nbrs:
            if j > i:
                keep[j] = False
    return points[keep], triples[keep]


def enumerate_vertices(p, method="hull"):
    """Vertices of the polytope ``p`` (a QPolytope or an ``(A, b)`` pair).

    Fills ``p.vertices`` when ``p`` is a QPolytope.
    """
    a, b = _as_halfspaces(p)
    if method == "hull":
        vs = _hull_vertices(a, b)
    elif method == "bruteforce":
        vs = bruteforce_vertices(a, b)
    else:
        raise ValueError(f"unknown method {method!r}")
    if hasattr(p, "vertices"):
        p.vertices = vs.points
    return vs


def _hull_vertices(a, b):
    if len(b) < 4:
        raise StructuralError("fewer than four halfspaces cannot bound a 3-d region")
    c = interior_point(a, b)
    slack = b - a @ c
    dual = a / slack[:, None]
    notes = []
    try:
        hull = ConvexHull(dual)
    except QhullError:
        # Degenerate input (e.g. too few distinct planes); joggle offsets slightly.
        rng = np.random.default_rng(0)
        b = b + rng.uniform(0, 1e-12, size=b.shape)
        slack = b - a @ c
        dual = a / slack[:, None]
        try:
            hull = ConvexHull(dual)
        except QhullError as err:
            raise StructuralError(f"hull construction failed: {err}") from err
        notes.append("offsets perturbed by <= 1e-12 for hull construction")

    eq = hull.equations  # n.y + h <= 0 inside
    if np.any(eq[:, 3] >= -1e-14):
        raise StructuralError("polytope is unbounded (origin not inside dual hull)")
    triples = np.sort(hull.simplices, axis=1)
    pts, ok = _solve_triples(a, b, triples)
    facet_pts = c + eq[:, :3] / (-eq[:, 3:4])
    pts[~ok] = facet_pts[~ok]

    viol = _max_violation(pts, a, b)
    bad = viol > TOL.vertex_feasibility
    if np.any(bad):
        pts[bad] = facet_pts[bad]
        viol[bad] = _max_violation(pts[bad], a, b)
        if np.any(viol > TOL.vertex_feasibility):
            raise StructuralError(
                f"{int(np.count_nonzero(viol > TOL.vertex_feasibility))} vertices violate "
                f"the halfspaces (max {viol.max():.3e})")
        notes.append(f"{int(np.count_nonzero(bad))} vertices taken from facet equations")
    points, triples = _dedup(pts, triples, TOL.vertex_dedup)
    return VertexSet(points, triples, tuple(notes))


def bruteforce_vertices(a, b):
    """All feasible intersection points of halfspace triples (O(n^3))."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    triples = np.array(list(itertools.combinations(range(len(b)), 3)), dtype=int)
    if len(triples) == 0:
        raise StructuralError("fewer than three halfspaces")
    pts, ok = _solve_triples(a, b, triples)
    pts, triples = pts[ok], triples[ok]
    feas = _max_violation(pts, a, b) <= TOL.vertex_feasibility
    if not np.any(feas):
        raise StructuralError("no feasible vertex")
    points, triples = _dedup(pts[feas], triples[feas], TOL.vertex_dedup)
    return VertexSet(points, triples)
