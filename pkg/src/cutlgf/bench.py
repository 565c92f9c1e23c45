"""End-to-end benchmark pipeline: classify, assemble, reduce, solve, measure.

Per case: build the cut topology, the kernel table, the layer blocks and
extrapolation, assemble the surface system, form the gauge-fixed reduced
system (with the particular-solution correction when the bulk source is
nonzero), solve by conjugate gradients, and evaluate surface and bulk error
norms plus the condition number.

Error conventions:
  * surface L2 / H1 on the discrete interface against the ambient exact
    solution, by segment quadrature; H1 uses tangentially projected gradients.
  * bulk L2 as the h^2-weighted vertex sum over {psi <= 0} against the exact
    field, with the discrete field reconstructed as particular part plus
    layer potential of the solved density.

Reports carry pairwise convergence rates log2(e_{2h} / e_h) and serialize to
CSV with a fixed column set, so identical specs reproduce identical files.
"""
from __future__ import annotations

import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geometry, layers, lgf, reduction, surface as surface_mod
from .krylov import condition_number, pcg
from .problems import ManufacturedProblem, ProblemSpec, manufactured_problem, \
    build_grid, surface_integral
from .surface import q1_gradients, q1_values

__version__ = "0.1.0"

CSV_COLUMNS = ("N", "iter", "cond", "e_bulk_L2", "rate_bulk",
               "e_surf_L2", "rate_L2", "e_surf_H1", "rate_H1")

DENSE_COND_LIMIT = 4096

_TABLE_CACHE: dict[tuple[int, float], lgf.LgfTable] = {}


def _get_table(window: int, sigma_h2: float, cache_dir=None) -> lgf.LgfTable:
    key = (window, round(float(sigma_h2), 15))
    path = None
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        path = os.path.join(cache_dir, f"lgf_w{window}_s{sigma_h2:.12g}.npz")
    table = _TABLE_CACHE.get(key)
    if table is None and path and os.path.exists(path):
        table = lgf.LgfTable.load(path)
    if table is None:
        table = lgf.build_table(window, sigma_h2)
    if path and not os.path.exists(path):
        table.save(path)
    _TABLE_CACHE[key] = table
    return table


@dataclass
class CaseResult:
    N: int
    iterations: int
    kappa: float
    e_bulk: float
    e_surf_l2: float
    e_surf_h1: float
    converged: bool
    residual_history: np.ndarray | None = None
    alpha: float = 0.0
    n_ring: int = 0
    raw_min_diag: float = 0.0
    raw_max_diag: float = 0.0
    error: str | None = None


@dataclass
class ExperimentReport:
    metadata: dict
    rows: list = field(default_factory=list)
    footer: str = ("cond values depend on the gauge constant and quadrature "
                   "details; treat them as order-of-magnitude figures")

    def rates(self):
        """Per-column convergence rates between consecutive rows."""
        out = []
        for prev, cur in zip(self.rows[:-1], self.rows[1:]):
            def rate(a, b):
                if a is None or b is None or a <= 0 or b <= 0:
                    return float("nan")
                return float(np.log2(a / b))
            out.append((rate(prev.e_bulk, cur.e_bulk),
                        rate(prev.e_surf_l2, cur.e_surf_l2),
                        rate(prev.e_surf_h1, cur.e_surf_h1)))
        return out

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        meta = " ".join(f"{k}={v}" for k, v in sorted(self.metadata.items()))
        buf.write(f"# {meta}\n")
        buf.write(",".join(CSV_COLUMNS) + "\n")
        rates = [(float("nan"),) * 3] + self.rates()
        for row, (rb, rl2, rh1) in zip(self.rows, rates):
            def fmt(x):
                return "" if x is None or not np.isfinite(x) else f"{x:.6e}"
            fields = (str(row.N), str(row.iterations), fmt(row.kappa),
                      fmt(row.e_bulk), fmt(rb), fmt(row.e_surf_l2), fmt(rl2),
                      fmt(row.e_surf_h1), fmt(rh1))
            buf.write(",".join(fields) + "\n")
        buf.write(f"# {self.footer}\n")
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv_text())


@dataclass
class SweepRow:
    beta: float
    sigma_bulk: float
    sigma_surface: float
    N: int
    mode: str
    kappa: float
    raw_min_diag: float
    raw_max_diag: float
    error: str | None = None


@dataclass
class SweepReport:
    metadata: dict
    rows: list = field(default_factory=list)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        meta = " ".join(f"{k}={v}" for k, v in sorted(self.metadata.items()))
        buf.write(f"# {meta}\n")
        buf.write("beta,sigma_bulk,sigma_surface,N,mode,kappa,raw_min_diag,"
                  "raw_max_diag\n")
        for r in self.rows:
            buf.write(f"{r.beta:.6g},{r.sigma_bulk:.6g},{r.sigma_surface:.6g},"
                      f"{r.N},{r.mode},{r.kappa:.6e},{r.raw_min_diag:.6e},"
                      f"{r.raw_max_diag:.6e}\n")
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv_text())


def _trace_map_for(mode, topology, table):
    extrap = reduction.build_extrapolation(topology)
    if mode == "E":
        blocks = layers.build_single_layer(topology, table)
        return reduction.value_map(blocks, extrap), blocks
    if mode == "F-single":
        blocks = layers.build_single_layer(topology, table)
        return reduction.density_map(blocks, extrap), blocks
    if mode == "F-double":
        blocks = layers.build_double_layer(topology, table)
        return reduction.density_map(blocks, extrap), blocks
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class CaseContext:
    """Intermediate products of one pipeline run, for reuse by callers."""

    spec: ProblemSpec
    problem: ManufacturedProblem
    topology: geometry.CutTopology
    table: lgf.LgfTable
    blocks: layers.LayerBlocks
    system: reduction.ReducedSystem
    particular: lgf.LatticeField | None


def build_case(spec: ProblemSpec, lgf_cache=None) -> CaseContext:
    problem = manufactured_problem(spec)
    grid = build_grid(problem.box, spec.N)
    topo = geometry.classify_vertices(problem.levelset, grid, spec.quad_order)
    sigma_h2 = spec.sigma_bulk * grid.h ** 2
    table = _get_table(lgf.default_window(topo), sigma_h2, lgf_cache)

    trace_map, blocks = _trace_map_for(spec.mode, topo, table)
    surf = surface_mod.assemble_surface_system(topo, problem.g, spec.sigma_surface)

    particular = None
    needs_source = spec.sigma_bulk > 0.0 or spec.solution_name() != "saddle"
    if needs_source:
        particular = lgf.particular_solution(problem.f, topo, table)

    gauge_target = 0.0
    if problem.gauge == "exact-mean":
        gauge_target = surface_integral(topo, problem.u)

    system = reduction.build_reduced_system(
        surf, trace_map, gauge_target=gauge_target, particular=particular
    )
    return CaseContext(spec=spec, problem=problem, topology=topo, table=table,
                       blocks=blocks, system=system, particular=particular)


def surface_errors(ctx: CaseContext, active_values: np.ndarray):
    """(L2, H1) surface errors of the nodal field against the exact solution."""
    topo = ctx.topology
    grid = topo.grid
    h = grid.h
    err2 = 0.0
    h1_2 = 0.0
    for seg in topo.segments:
        i, j = seg.cell
        origin = grid.points_of(np.array([[i, j]]))[0]
        slots = topo.slot[[j, j, j + 1, j + 1], [i, i + 1, i + 1, i]]
        nodal = active_values[slots]
        rel = (seg.quad_points - origin) / h
        phi = q1_values(rel[:, 0], rel[:, 1])
        gphi = q1_gradients(rel[:, 0], rel[:, 1], h)
        uh = phi @ nodal
        guh = np.einsum("qad,a->qd", gphi, nodal)
        ue = np.asarray(ctx.problem.u(seg.quad_points), float)
        gue = np.asarray(ctx.problem.grad_u(seg.quad_points), float)
        diff_g = guh - gue
        n = seg.normals
        tang = diff_g - np.einsum("qd,qd->q", diff_g, n)[:, None] * n
        err2 += float(seg.quad_weights @ (uh - ue) ** 2)
        h1_2 += float(seg.quad_weights @ np.einsum("qd,qd->q", tang, tang))
    l2 = np.sqrt(err2)
    return l2, np.sqrt(err2 + h1_2)


def bulk_error(ctx: CaseContext, solution: np.ndarray) -> float:
    """h-weighted vertex-sum L2 error of the reconstructed bulk field."""
    topo = ctx.topology
    grid = topo.grid
    pts = grid.vertex_points()
    inside = np.asarray(ctx.problem.levelset.psi(pts), float) <= 0.0
    targets = np.argwhere(inside)[:, ::-1]
    density = ctx.system.trace_map.density_of(solution)
    field = layers.bulk_evaluate(ctx.blocks, density, targets, ctx.table)
    if ctx.particular is not None:
        field = field + ctx.particular.values[targets[:, 1], targets[:, 0]]
    exact = np.asarray(ctx.problem.u(grid.points_of(targets)), float)
    return float(grid.h * np.linalg.norm(field - exact))


def run_case(spec: ProblemSpec, *, want_solve: bool = True, want_errors: bool = True,
             want_kappa: bool = True, lgf_cache=None, max_iter: int = 2000) -> CaseResult:
    ctx = build_case(spec, lgf_cache=lgf_cache)
    system = ctx.system
    K = system.surface.K
    diag = K.diagonal()

    result = CaseResult(
        N=spec.N, iterations=0, kappa=float("nan"), e_bulk=float("nan"),
        e_surf_l2=float("nan"), e_surf_h1=float("nan"), converged=False,
        alpha=system.alpha, n_ring=ctx.topology.n_ring,
        raw_min_diag=float(diag.min()), raw_max_diag=float(diag.max()),
    )

    if want_kappa:
        method = "dense" if system.dim <= DENSE_COND_LIMIT else "lanczos"
        result.kappa = condition_number(system.apply, system.dim, method)

    if want_solve:
        report = pcg(system.apply, system.rhs, tol=spec.tol, max_iter=max_iter)
        result.iterations = report.iterations
        result.converged = report.converged
        result.residual_history = report.residual_history
        if want_errors:
            active_values = system.trace_of(report.solution)
            result.e_surf_l2, result.e_surf_h1 = surface_errors(ctx, active_values)
            result.e_bulk = bulk_error(ctx, report.solution)
    return result


def _thread_count() -> int:
    env = os.environ.get("CUTLGF_THREADS", "1")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _run_many(jobs, worker):
    threads = _thread_count()
    if threads == 1 or len(jobs) <= 1:
        return [worker(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, jobs))


def run_convergence(specs: list[ProblemSpec], *, lgf_cache=None,
                    want_kappa: bool = True) -> ExperimentReport:
    """Full pipeline over a refinement family; rows ordered by N."""
    specs = sorted(specs, key=lambda s: s.N)
    first = specs[0]
    meta = {
        "geometry": first.geometry, "mode": first.mode,
        "solution": first.solution_name(), "sigma_bulk": first.sigma_bulk,
        "sigma_surface": first.sigma_surface, "tol": first.tol,
        "seed": 0, "version": __version__,
    }

    def worker(spec):
        try:
            return run_case(spec, want_kappa=want_kappa, lgf_cache=lgf_cache)
        except Exception as exc:  # recorded, not raised: other N still run
            return CaseResult(N=spec.N, iterations=0, kappa=float("nan"),
                              e_bulk=float("nan"), e_surf_l2=float("nan"),
                              e_surf_h1=float("nan"), converged=False,
                              error=f"{type(exc).__name__}: {exc}")

    rows = _run_many(specs, worker)
    rows.sort(key=lambda r: r.N)
    return ExperimentReport(metadata=meta, rows=rows)


def run_sweep(betas, sigma_bulks, sigma_surfaces, Ns, mode: str = "F-single",
              *, lgf_cache=None) -> SweepReport:
    """Condition numbers and raw-stiffness diagnostics over translation and
    screening parameters; no solves."""
    meta = {"mode": mode, "seed": 0, "version": __version__}
    jobs = [(float(b), float(sb), float(ss), int(N))
            for N in Ns for sb in sigma_bulks for ss in sigma_surfaces
            for b in betas]

    def worker(job):
        beta, sb, ss, N = job
        spec = ProblemSpec(geometry="shifted-circle", N=N, mode=mode, beta=beta,
                           sigma_bulk=sb, sigma_surface=ss)
        try:
            res = run_case(spec, want_solve=False, want_kappa=True,
                           lgf_cache=lgf_cache)
            return SweepRow(beta=beta, sigma_bulk=sb, sigma_surface=ss, N=N,
                            mode=mode, kappa=res.kappa,
                            raw_min_diag=res.raw_min_diag,
                            raw_max_diag=res.raw_max_diag)
        except Exception as exc:
            return SweepRow(beta=beta, sigma_bulk=sb, sigma_surface=ss, N=N,
                            mode=mode, kappa=float("nan"), raw_min_diag=float("nan"),
                            raw_max_diag=float("nan"),
                            error=f"{type(exc).__name__}: {exc}")

    rows = _run_many(jobs, worker)
    rows.sort(key=lambda r: (r.N, r.sigma_bulk, r.sigma_surface, r.beta))
    return SweepReport(metadata=meta, rows=rows)


def fit_rate(hs, errors) -> float:
    """Least-squares slope of log error against log h."""
    hs = np.asarray(hs, float)
    errors = np.asarray(errors, float)
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
