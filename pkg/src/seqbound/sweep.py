"""
Sweep over mean photon numbers: dual upper bound, quantum limit and
(optionally) an explicit primal lower bound at each point, written as CSV.
"""

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import dpsolver, primal, qregion, smallmat, vertexenum
from .constants import TOL
from .ensembles import build_ensemble
from .errors import ConvergenceError, SeqboundError, ValidationError
from .mem import srm_value

log = logging.getLogger(__name__)

SWEEP_MODES = ("symmetric", "general", "both")

COLUMNS = (
    "mean_photon",
    "p_mem_success",
    "dual_upper_success",
    "error_lower",
    "quantum_limit_error",
    "ratio",
    "primal_lower_success",
    "n_halfspaces",
    "n_vertices",
    "solver_iterations",
    "status",
    "wall_time_ms",
)

N_RANDOM_POVMS = 100
PRIMAL_LIBRARY_SIZE = 66


@dataclass(frozen=True)
class SweepConfig:
    nbar_min: float = 0.1
    nbar_max: float = 2.0
    nbar_step: float = 0.1
    planes_per_edge: int = 141
    mode: str = "symmetric"
    primal: bool = False
    seed: int = 0
    output_path: str = "bounds.csv"
    cache_dir: str = None
    workers: int = 1

    def __post_init__(self):
        if not (0 <= self.nbar_min <= self.nbar_max):
            raise ValidationError("need 0 <= nbar_min <= nbar_max")
        if not self.nbar_step > 0:
            raise ValidationError("nbar_step must be positive")
        if int(self.planes_per_edge) < 1:
            raise ValidationError("planes_per_edge must be >= 1")
        if self.mode not in SWEEP_MODES:
            raise ValidationError(f"mode must be one of {SWEEP_MODES}")
        if int(self.workers) < 1:
            raise ValidationError("workers must be >= 1")

    def grid(self):
        n = int(math.floor((self.nbar_max - self.nbar_min) / self.nbar_step + 1e-9))
        pts = self.nbar_min + self.nbar_step * np.arange(n + 1)
        # decimal rounding keeps 0.1 + 0.2 from turning into 0.30000000000000004
        return [float(round(x, 12)) for x in pts]


def _q12(x):
    return float(f"{x:.12g}")


@dataclass(frozen=True)
class BoundRecord:
    mean_photon: float
    p_mem_success: float
    dual_upper_success: float
    error_lower: float
    quantum_limit_error: float
    ratio: float
    primal_lower_success: float = None
    n_halfspaces: int = 0
    n_vertices: int = 0
    solver_iterations: int = 0
    status: str = "ok"
    wall_time_ms: int = 0

    @classmethod
    def from_bounds(cls, mean_photon, p_mem, dual, **kw):
        p_mem = _q12(p_mem)
        dual = _q12(dual)
        err_lo = _q12(1.0 - dual)
        err_q = _q12(1.0 - p_mem)
        ratio = _q12(err_lo / err_q) if err_q > 0 else float("nan")
        if kw.get("primal_lower_success") is not None:
            kw["primal_lower_success"] = _q12(kw["primal_lower_success"])
        return cls(_q12(mean_photon), p_mem, dual, err_lo, err_q, ratio, **kw)

    @property
    def failed(self):
        return self.status != "ok"

    @property
    def strict_gap(self):
        return self.p_mem_success - self.dual_upper_success > TOL.strict_gap


# -- per point -------------------------------------------------------------------

def random_povms(rng, n, d=3):
    """Random 3-outcome POVMs; half rank-one projective, half full-rank mixed."""
    out = np.empty((n, 3, d, d), dtype=complex)
    for i in range(n):
        z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        if i % 2 == 0:
            u, _ = np.linalg.qr(z)
            for k in range(3):
                out[i, k] = smallmat.outer(u[:, k])
        else:
            g = np.empty((3, d, d), dtype=complex)
            for k in range(3):
                w = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
                g[k] = w @ smallmat.dagger(w)
            sih = smallmat.psd_sqrt(g.sum(axis=0), inverse=True)
            out[i] = smallmat.hermitian_part(sih @ g @ sih)
    return out


def soundness_check(e, poly, rng, n=N_RANDOM_POVMS):
    """Number of random Bob POVMs whose q-triple falls outside the polytope."""
    q = primal.conditional_success(e, random_povms(rng, n, e.dim))
    return int(np.count_nonzero(~poly.contains(q)))


def _dual(e, verts, mode):
    """(certified bound, rounds, X); a stalled solve still yields a certified bound."""
    try:
        s = dpsolver.solve_dp_prime(e, verts, mode)
        return s.certified_bound, s.iterations, s.X, None
    except ConvergenceError as err:
        sol = err.result
        return float(err.bound), getattr(sol, "iterations", 0), getattr(sol, "X", None), str(err)


def run_point(cfg, nbar):
    t0 = time.perf_counter()
    status = []
    e = build_ensemble(nbar)
    p_mem = srm_value(build_ensemble(nbar, n_slices=1))

    n = int(cfg.planes_per_edge)
    poly = qregion.build_qpolytope(
        e, qregion.polytope_priors(n, "grid"),
        cache_dir=cfg.cache_dir, cache_key=(nbar, "grid", n))
    verts = vertexenum.enumerate_vertices(poly)

    modes = ("symmetric", "general") if cfg.mode == "both" else (cfg.mode,)
    results = {m: _dual(e, verts, m) for m in modes}
    dual, iters, X, note = results[modes[0]]
    for m, r in results.items():
        if r[3]:
            status.append(f"unconverged {m}")
    if cfg.mode == "both":
        diff = abs(results["symmetric"][0] - results["general"][0])
        if diff > TOL.mode_agreement:
            status.append(f"mode mismatch {diff:.2e}")

    if X is not None:
        # final certification against every vertex
        H = dpsolver.constraint_matrices(e, verts)
        if not np.all(smallmat.is_psd(X - H, TOL.dp_violation)):
            status.append("dual not certified")

    rng = np.random.default_rng([int(cfg.seed), int(round(nbar * 1e6))])
    outside = soundness_check(e, poly, rng)
    if outside:
        status.append(f"{outside} random POVMs outside polytope")

    lower = None
    if cfg.primal:
        lib = primal.default_library(e, PRIMAL_LIBRARY_SIZE)
        try:
            lower = primal.optimize_alice(e, lib).success_value
        except ConvergenceError as err:
            lower = float(err.bound)
        if lower > dual + 1e-7:
            status.append("primal above dual")

    ms = int(round((time.perf_counter() - t0) * 1000))
    return BoundRecord.from_bounds(
        nbar, p_mem, dual,
        primal_lower_success=lower,
        n_halfspaces=poly.n_halfspaces,
        n_vertices=len(verts),
        solver_iterations=int(iters),
        status="; ".join(status) if status else "ok",
        wall_time_ms=ms,
    )


def _safe_point(cfg, nbar):
    try:
        return run_point(cfg, nbar)
    except SeqboundError as err:
        log.error("nbar=%s failed: %s", nbar, err)
        nan = float("nan")
        return BoundRecord(_q12(nbar), nan, nan, nan, nan, nan,
                           status=f"failed: {type(err).__name__}: {err}")


def run_sweep(cfg):
    """One record per grid point, ordered by mean photon number."""
    grid = cfg.grid()
    if cfg.workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=int(cfg.workers)) as ex:
            records = list(ex.map(_safe_point, [cfg] * len(grid), grid))
    else:
        records = [_safe_point(cfg, x) for x in grid]
    return sorted(records, key=lambda r: r.mean_photon)


# -- csv -------------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])


def read_csv(path):
    types = {f.name: f.type for f in fields(BoundRecord)}
    out = []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None or tuple(header) != COLUMNS:
            raise ValidationError(f"{path}: unexpected header {header}")
        for row in rd:
            kw = {}
            for c, s in zip(COLUMNS, row):
                t = types[c]
                if c == "status":
                    kw[c] = s
                elif s == "":
                    kw[c] = None
                elif t is int:
                    kw[c] = int(s)
                else:
                    kw[c] = float(s)
            out.append(BoundRecord(**kw))
    return out


# -- report ----------------------------------------------------------------------

def report(records):
    if not records:
        raise ValidationError("no records")
    head = (f"{'nbar':>6} {'P_MEM':>12} {'dual upper':>12} {'err lower':>12} "
            f"{'err QL':>12} {'ratio':>8} {'primal':>12} {'gap':>5}  status")
    lines = [head, "-" * len(head)]
    for r in records:
        prim = "—" if r.primal_lower_success is None else f"{r.primal_lower_success:.9f}"
        lines.append(
            f"{r.mean_photon:6.3f} {r.p_mem_success:12.9f} {r.dual_upper_success:12.9f} "
            f"{r.error_lower:12.9f} {r.quantum_limit_error:12.9f} {r.ratio:8.4f} "
            f"{prim:>12} {'yes' if r.strict_gap else 'no':>5}  {r.status}")
    lines.append("")
    ratios = [r.ratio for r in records if np.isfinite(r.ratio)]
    if ratios:
        best = max(records, key=lambda r: r.ratio if np.isfinite(r.ratio) else -1)
        lines.append(f"max ratio: {best.ratio:.6f} at nbar = {best.mean_photon:g}")
    strict = [r.mean_photon for r in records if r.strict_gap]
    if strict:
        lines.append(f"strict gap (P_MEM - dual > {TOL.strict_gap:g}) for nbar in "
                     f"[{min(strict):g}, {max(strict):g}] ({len(strict)} of {len(records)} points)")
    else:
        lines.append("no strict gap detected")
    failed = [r for r in records if r.failed]
    if failed:
        lines.append(f"{len(failed)} point(s) with non-ok status")
    return "\n".join(lines) + "\n"


def config_with(cfg, **kw):
    return replace(cfg, **kw)
