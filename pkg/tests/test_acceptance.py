"""Acceptance suite: one test per shipping criterion, each printing a
PASS/FAIL line.  Run with `pytest tests/test_acceptance.py -v -s`.

Reference values for the benchmark tables (iteration counts, condition
numbers, absolute errors) are encoded next to each criterion; condition
numbers are order-of-magnitude targets (gauge- and quadrature-sensitive),
absolute errors are factor-2 targets, rates are fitted over the mesh ladder.
"""
from __future__ import annotations

import time

import numpy as np
import pytest

from cutlgf import layers, lgf, reduction
from cutlgf import surface as surface_mod
from cutlgf.bench import fit_rate, run_case, run_convergence, run_sweep
from cutlgf.problems import ProblemSpec
from conftest import circle_setup

from test_lgf import five_point_residual, potential_kernel_exact, \
    screened_fft_oracle

LADDER = (128, 256, 512)

# benchmark table values at N = 128, 256, 512: iterations, condition number,
# bulk L2, surface L2, surface H1
CIRCLE_TABLE = {
    128: (31, 17.12, 1.2173e-4, 3.1481e-4, 2.6896e-2),
    256: (37, 16.31, 3.1186e-5, 7.8475e-5, 1.3658e-2),
    512: (44, 26.16, 7.5461e-6, 1.9585e-5, 6.7476e-3),
}
DEFORMED_TABLE = {
    128: (49, 28.14, 2.2604e-3, 3.2441e-3, 1.5290e-1),
    256: (56, 36.87, 5.6947e-4, 8.1397e-4, 7.6282e-2),
    512: (61, 44.48, 1.4087e-4, 2.0156e-4, 3.8054e-2),
}


def _report(criterion: int, ok: bool, detail: str):
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance] criterion {criterion:2d} {status}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def circle_ladder():
    t0 = time.perf_counter()
    report = run_convergence(
        [ProblemSpec(geometry="circle", N=n) for n in LADDER])
    return report, time.perf_counter() - t0


@pytest.fixture(scope="module")
def deformed_ladder():
    report = run_convergence(
        [ProblemSpec(geometry="deformed-circle", N=n) for n in LADDER])
    return report


@pytest.fixture(scope="module")
def conditioning_by_mode():
    out = {}
    for mode in ("E", "F-double"):
        out[mode] = [
            run_case(ProblemSpec(geometry="circle", N=n, mode=mode),
                     want_solve=False).kappa
            for n in LADDER
        ]
    return out


@pytest.fixture(scope="module")
def beta_sweep():
    betas = np.round(np.arange(-1.0, 1.0001, 0.1), 10)
    return run_sweep(betas, [0.0], [0.0], [128], mode="F-single")


def test_criterion_01_lgf_correctness():
    t0 = time.perf_counter()
    worst_identity = 0.0
    worst_oracle = 0.0
    for sigma in (0.0, 0.5, 4.0):
        table = lgf.build_table(18, sigma)
        worst_identity = max(worst_identity, five_point_residual(table))
        if sigma == 0.0:
            oracle = -0.25 * potential_kernel_exact(16)
            got = table.wedge.T[:17, :17]
            diff = max(abs(got[m, n] - oracle[m, n])
                       for m in range(17) for n in range(m + 1))
        else:
            diff = float(np.abs(
                table.values[2:-2, 2:-2] - screened_fft_oracle(16, sigma)).max())
        worst_oracle = max(worst_oracle, diff)
    anchor = max(abs(lgf.lgf_eval(1, 0, 0.0) + 0.25),
                 abs(lgf.lgf_eval(1, 1, 0.0) + 1.0 / np.pi))
    elapsed = time.perf_counter() - t0
    ok = worst_identity < 1e-12 and worst_oracle < 1e-10 \
        and anchor < 1e-12 and elapsed < 10.0
    _report(1, ok, f"five-point residual {worst_identity:.2e}, oracle "
                   f"diff {worst_oracle:.2e}, anchors {anchor:.2e}, "
                   f"{elapsed:.1f}s")


def test_criterion_02_structural_identities():
    rng = np.random.default_rng(2024)
    betas = [0.0] + list(rng.uniform(-1.0, 1.0, size=5))
    worst = {"H1": 0.0, "K1": 0.0, "Kred1": 0.0, "FEP2": 0.0, "sym": 0.0}
    for N in (64, 128):
        for beta in betas:
            topo, table, problem, grid = circle_setup(N, beta)
            blocks = layers.build_single_layer(topo, table)
            ext = reduction.build_extrapolation(topo)
            ones = np.ones(topo.n_ring)
            worst["H1"] = max(worst["H1"], float(np.abs(
                layers.harmonic_extend(blocks, ones) - 1.0).max()))

            surf = surface_mod.assemble_surface_system(topo, problem.g)
            worst["K1"] = max(worst["K1"], float(
                np.abs(surf.K @ np.ones(topo.n_active)).max()
                / abs(surf.K).max()))

            emap = reduction.value_map(blocks, ext)
            fmap = reduction.density_map(blocks, ext)
            esys = reduction.build_reduced_system(surf, emap)
            fsys = reduction.build_reduced_system(surf, fmap)
            A = esys.materialize(gauge=False)
            worst["Kred1"] = max(worst["Kred1"], float(
                np.abs(A @ ones).max() / np.abs(A).max()))

            for _ in range(4):
                q = rng.standard_normal(topo.n_ring)
                fq = fmap.apply(q)
                eq = emap.apply(blocks.on_ring @ q)
                worst["FEP2"] = max(worst["FEP2"], float(
                    np.linalg.norm(fq - eq) / np.linalg.norm(fq)))
            for system in (esys, fsys):
                for _ in range(20):
                    v = rng.standard_normal(topo.n_ring)
                    w = rng.standard_normal(topo.n_ring)
                    av, aw = system.apply(v), system.apply(w)
                    denom = (np.linalg.norm(av) * np.linalg.norm(w)
                             + np.linalg.norm(aw) * np.linalg.norm(v))
                    worst["sym"] = max(worst["sym"],
                                       abs(w @ av - v @ aw) / denom)
    ok = worst["H1"] < 1e-10 and worst["K1"] < 1e-10 \
        and worst["Kred1"] < 1e-10 and worst["FEP2"] < 1e-10 \
        and worst["sym"] < 1e-12
    _report(2, ok, "worst H.1-1 {H1:.1e}, K.1 {K1:.1e}, Kred.1 {Kred1:.1e}, "
                   "F-E.P2 {FEP2:.1e}, symmetry {sym:.1e}".format(**worst))


def test_criterion_03_harmonic_extension_consistency():
    # generic smooth harmonic field; the quadratic x^2 - y^2 is reproduced
    # exactly by the five-point extension, which we assert as the stronger
    # side condition
    def u(p):
        p = np.asarray(p, float)
        return np.exp(p[..., 0]) * np.cos(p[..., 1])

    errs, hs, exact = [], [], 0.0
    for N in (64, 128, 256, 512):
        topo, table, problem, grid = circle_setup(N)
        blocks = layers.build_single_layer(topo, table)
        n1, n2 = topo.n_interior, topo.n_ring
        vals = u(grid.points_of(topo.order))
        got = layers.harmonic_extend(blocks, vals[n1:n1 + n2])
        errs.append(float(np.abs(got - vals[:n1]).max()))
        hs.append(grid.h)
        quad = problem.u(grid.points_of(topo.order))
        gq = layers.harmonic_extend(blocks, quad[n1:n1 + n2])
        exact = max(exact, float(np.abs(gq - quad[:n1]).max()))
    slope = fit_rate(hs, errs)
    ok = slope >= 1.9 and exact < 1e-11
    _report(3, ok, f"sup-error slope {slope:.2f} on exp(x)cos(y) over "
                   f"N=64..512; discrete-harmonic quadratic exact to "
                   f"{exact:.1e}")


def _ladder_checks(report, table, l2_tol=0.15, h1_tol=0.15, bulk_tol=0.2):
    hs = [1.0 / r.N for r in report.rows]
    slope_l2 = fit_rate(hs, [r.e_surf_l2 for r in report.rows])
    slope_h1 = fit_rate(hs, [r.e_surf_h1 for r in report.rows])
    slope_bulk = fit_rate(hs, [r.e_bulk for r in report.rows])
    row256 = next(r for r in report.rows if r.N == 256)
    ref = table[256][3]
    abs_ok = 0.5 <= row256.e_surf_l2 / ref <= 2.0
    ok = (abs(slope_l2 - 2.0) <= l2_tol and abs(slope_h1 - 1.0) <= h1_tol
          and abs(slope_bulk - 2.0) <= bulk_tol and abs_ok
          and all(r.converged for r in report.rows))
    detail = (f"rates L2 {slope_l2:.2f}, H1 {slope_h1:.2f}, bulk "
              f"{slope_bulk:.2f}; e_surf_L2(256) = {row256.e_surf_l2:.3e} "
              f"vs {ref:.3e} (x{row256.e_surf_l2 / ref:.2f})")
    return ok, detail


def test_criterion_04_circle_convergence(circle_ladder):
    report, elapsed = circle_ladder
    ok, detail = _ladder_checks(report, CIRCLE_TABLE)
    ok = ok and elapsed < 300.0
    _report(4, ok, f"{detail}; runtime {elapsed:.0f}s")


def test_criterion_05_deformed_convergence(deformed_ladder):
    ok, detail = _ladder_checks(deformed_ladder, DEFORMED_TABLE)
    _report(5, ok, detail)


def test_criterion_06_conditioning_scalings(circle_ladder, conditioning_by_mode):
    report, _ = circle_ladder
    # kappa ~ h^-2 means log kappa vs log N has slope +2
    slope_e = np.polyfit(np.log(LADDER), np.log(conditioning_by_mode["E"]), 1)[0]
    slope_d = np.polyfit(np.log(LADDER),
                         np.log(conditioning_by_mode["F-double"]), 1)[0]
    ks_single = {r.N: r.kappa for r in report.rows}
    bound_ok = all(k < 100.0 for k in ks_single.values())
    ratio = ks_single[256] / CIRCLE_TABLE[256][1]
    ok = abs(slope_e - 2.0) <= 0.3 and abs(slope_d - 2.0) <= 0.3 \
        and bound_ok and (1 / 3 <= ratio <= 3)
    kappas = ", ".join(f"{ks_single[n]:.1f}" for n in LADDER)
    _report(6, ok, f"slope(E) {slope_e:.2f}, slope(F-double) {slope_d:.2f}, "
                   f"kappa(F-single) [{kappas}] all<100, "
                   f"kappa(256)/16.31 = {ratio:.2f}")


def test_criterion_07_cut_robustness(beta_sweep):
    ks = np.array([r.kappa for r in beta_sweep.rows])
    mins = np.array([r.raw_min_diag for r in beta_sweep.rows])
    kappa_ratio = float(ks.max() / ks.min())
    diag_variation = float(mins.max() / mins.min())
    ok = kappa_ratio <= 3.0 and diag_variation >= 1e6
    _report(7, ok, f"kappa max/min {kappa_ratio:.2f} over beta grid; raw "
                   f"min-diagonal variation {diag_variation:.1e}")


def test_criterion_08_screened_matching():
    kappas = {}
    for sb, ss in ((10.0, 10.0), (0.1, 20.0), (20.0, 0.1)):
        res = run_case(ProblemSpec(geometry="circle", N=256, mode="F-single",
                                   sigma_bulk=sb, sigma_surface=ss),
                       want_solve=False)
        kappas[(sb, ss)] = res.kappa
    matched = kappas[(10.0, 10.0)]
    ok = matched < kappas[(0.1, 20.0)] and matched < kappas[(20.0, 0.1)]
    _report(8, ok, f"matched kappa {matched:.1f} < mismatched "
                   f"{kappas[(0.1, 20.0)]:.1f} and {kappas[(20.0, 0.1)]:.1f}")


def test_criterion_09_pcg_behavior(circle_ladder, deformed_ladder):
    report, _ = circle_ladder
    ok = True
    details = []
    for rep, table in ((report, CIRCLE_TABLE), (deformed_ladder, DEFORMED_TABLE)):
        for row in rep.rows:
            limit = int(np.ceil(1.5 * table[row.N][0]))
            ok = ok and row.converged and row.iterations <= limit
            hist = row.residual_history
            running = np.minimum.accumulate(hist)
            ok = ok and bool(np.all(hist <= 10.0 * running))
            details.append(f"{row.N}:{row.iterations}<={limit}")
    _report(9, ok, "iterations " + " ".join(details)
            + "; residuals monotone within 10x of the running minimum")


def test_criterion_10_extrapolation_properties():
    rng = np.random.default_rng(10)
    worst_affine = 0.0
    for N in (64, 128):
        topo, _, _, grid = circle_setup(N)
        ext = reduction.build_extrapolation(topo)
        pts = grid.points_of(topo.order)
        n1, n2 = topo.n_interior, topo.n_ring
        for _ in range(5):
            a, b, c = rng.uniform(-2, 2, size=3)
            vals = a + b * pts[:, 0] + c * pts[:, 1]
            res = ext.from_interior @ vals[:n1] \
                + ext.from_ring @ vals[n1:n1 + n2] + vals[n1 + n2:]
            worst_affine = max(worst_affine, float(np.abs(res).max()))

    def harmonic(p):
        p = np.asarray(p, float)
        return np.exp(p[..., 0]) * np.cos(p[..., 1])

    errs, hs = [], []
    for N in (64, 128, 256):
        topo, _, _, grid = circle_setup(N)
        ext = reduction.build_extrapolation(topo)
        vals = harmonic(grid.points_of(topo.order))
        n1, n2 = topo.n_interior, topo.n_ring
        res = ext.from_interior @ vals[:n1] + ext.from_ring @ vals[n1:n1 + n2] \
            + vals[n1 + n2:]
        errs.append(float(np.abs(res[ext.two_direction]).max()))
        hs.append(grid.h)
    slope = fit_rate(hs, errs)
    ok = worst_affine <= 1e-13 and slope >= 2.9
    _report(10, ok, f"affine residual {worst_affine:.1e}; two-direction "
                    f"harmonic slope {slope:.2f}")
