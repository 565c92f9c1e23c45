"""Benchmark driver tests: report structure, determinism, the CLI surface."""
from __future__ import annotations

import numpy as np
import pytest

from cutlgf import bench, cli
from cutlgf.problems import ProblemSpec


@pytest.fixture(scope="module")
def small_report():
    specs = [ProblemSpec(geometry="circle", N=n) for n in (32, 64)]
    return bench.run_convergence(specs)


def test_report_row_content(small_report):
    rows = small_report.rows
    assert [r.N for r in rows] == [32, 64]
    for row in rows:
        assert row.converged
        assert row.e_surf_l2 > 0 and np.isfinite(row.kappa)


def test_rates_are_recomputable_from_errors(small_report):
    rows = small_report.rows
    (rb, rl2, rh1), = small_report.rates()
    assert rl2 == pytest.approx(np.log2(rows[0].e_surf_l2 / rows[1].e_surf_l2))
    assert rb == pytest.approx(np.log2(rows[0].e_bulk / rows[1].e_bulk))
    assert rh1 == pytest.approx(np.log2(rows[0].e_surf_h1 / rows[1].e_surf_h1))


def test_csv_schema(small_report):
    text = small_report.to_csv_text()
    lines = text.strip().splitlines()
    assert lines[1] == ",".join(bench.CSV_COLUMNS)
    assert lines[0].startswith("#") and lines[-1].startswith("#")
    first = lines[2].split(",")
    assert first[0] == "32" and first[4] == ""  # no rate on the first row


def test_end_to_end_determinism(small_report):
    specs = [ProblemSpec(geometry="circle", N=n) for n in (32, 64)]
    again = bench.run_convergence(specs)
    assert again.to_csv_text() == small_report.to_csv_text()


def test_sweep_report_schema():
    rep = bench.run_sweep([-0.5, 0.5], [0.0], [0.0], [32])
    text = rep.to_csv_text()
    lines = text.strip().splitlines()
    assert lines[1].startswith("beta,sigma_bulk,sigma_surface,N,mode,kappa")
    assert len(lines) == 2 + 2
    assert all(np.isfinite(r.kappa) for r in rep.rows)


def test_failed_case_is_recorded_not_raised():
    specs = [ProblemSpec(geometry="circle", N=32, solution="nonexistent")]
    rep = bench.run_convergence(specs)
    assert rep.rows[0].error is not None


def test_worker_pool_matches_serial(small_report, monkeypatch):
    monkeypatch.setenv("CUTLGF_THREADS", "3")
    specs = [ProblemSpec(geometry="circle", N=n) for n in (32, 64)]
    threaded = bench.run_convergence(specs)
    assert threaded.to_csv_text() == small_report.to_csv_text()


def test_degenerate_cuts_crush_raw_diagonal():
    # the circle through exact grid vertices leaves slivers whose basis
    # support on the interface is tiny: the unreduced stiffness diagonal
    # collapses while the reduced operator stays well conditioned
    res = bench.run_case(ProblemSpec(geometry="circle", N=64),
                         want_solve=False, want_kappa=True)
    assert res.raw_min_diag < 1e-8 * res.raw_max_diag
    assert res.kappa < 100.0


def test_solution_insensitive_to_box_padding():
    # same h and curve, wider background box: identical physics, identical
    # solved trace on the shared vertices
    import cutlgf.problems as problems_mod

    spec = ProblemSpec(geometry="circle", N=64)
    base = bench.build_case(spec)

    original = problems_mod.experiment_box
    try:
        problems_mod.experiment_box = lambda g: 2.4  # h unchanged with N=96
        wide = bench.build_case(ProblemSpec(geometry="circle", N=96))
    finally:
        problems_mod.experiment_box = original

    from cutlgf.krylov import pcg
    shift = round((2.4 - 1.6) / base.topology.grid.h)
    assert np.array_equal(base.topology.order + shift, wide.topology.order)
    tr_a = base.system.trace_of(pcg(base.system.apply, base.system.rhs,
                                    tol=1e-12).solution)
    tr_b = wide.system.trace_of(pcg(wide.system.apply, wide.system.rhs,
                                    tol=1e-12).solution)
    assert np.abs(tr_a - tr_b).max() < 1e-10


def test_float_list_parsing():
    assert cli._float_list("1,2.5,3") == [1.0, 2.5, 3.0]
    grid = cli._float_list("-1:0.5:1")
    assert grid == [-1.0, -0.5, 0.0, 0.5, 1.0]


class TestCli:
    def test_convergence_command(self, tmp_path):
        out = tmp_path / "report.csv"
        code = cli.main(["convergence", "--geometry", "circle", "--N", "32,64",
                         "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[1] == ",".join(bench.CSV_COLUMNS)
        assert len(lines) == 2 + 2 + 1

    def test_sweep_command(self, tmp_path):
        out = tmp_path / "sweep.csv"
        # values starting with a dash need the = form
        code = cli.main(["sweep", "--beta=-0.5:0.5:0.5", "--N", "32",
                         "--out", str(out)])
        assert code == 0
        assert len(out.read_text().strip().splitlines()) == 2 + 3

    def test_symbols_command(self, tmp_path):
        out = tmp_path / "symbols.csv"
        code = cli.main(["symbols", "--h", "0.01,0.005", "--points", "16",
                         "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "h,theta,k_hat,s_hat,d_hat,composite"
        assert len(lines) == 1 + 2 * 16

    def test_lgf_selftest(self, capsys):
        assert cli.main(["lgf-selftest"]) == 0
        assert "PASS" in capsys.readouterr().out

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "bench.cfg"
        cfg.write_text("geometry = circle\nN = 32\ntol = 1e-8\n")
        out = tmp_path / "from_config.csv"
        code = cli.main(["convergence", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        text = out.read_text()
        assert "tol=1e-08" in text and len(text.strip().splitlines()) == 4

        out2 = tmp_path / "override.csv"
        code = cli.main(["convergence", "--config", str(cfg), "--N", "32,64",
                         "--out", str(out2)])
        assert code == 0
        assert len(out2.read_text().strip().splitlines()) == 5

    def test_lgf_cache(self, tmp_path):
        cache = tmp_path / "cache"
        out = tmp_path / "cached.csv"
        code = cli.main(["convergence", "--geometry", "circle", "--N", "32",
                         "--out", str(out), "--lgf-cache", str(cache)])
        assert code == 0
        assert list(cache.glob("lgf_*.npz"))
