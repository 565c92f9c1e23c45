"""Shared fixtures: cached geometry/table/layer setups for the unit circle."""
from __future__ import annotations

from functools import lru_cache

import pytest

from cutlgf import geometry, layers, lgf, reduction
from cutlgf import surface as surface_mod
from cutlgf.problems import ProblemSpec, build_grid, manufactured_problem


@lru_cache(maxsize=32)
def circle_setup(N: int, beta: float = 0.0, sigma_bulk: float = 0.0):
    """(topology, table, problem, grid) for the shifted unit circle."""
    geom = "circle" if beta == 0.0 else "shifted-circle"
    spec = ProblemSpec(geometry=geom, N=N, beta=beta, sigma_bulk=sigma_bulk)
    problem = manufactured_problem(spec)
    grid = build_grid(problem.box, N)
    topo = geometry.classify_vertices(problem.levelset, grid)
    table = lgf.build_table(lgf.default_window(topo), sigma_bulk * grid.h ** 2)
    return topo, table, problem, grid


@lru_cache(maxsize=16)
def circle_blocks(N: int, kind: str = "single", beta: float = 0.0):
    topo, table, _, _ = circle_setup(N, beta)
    build = layers.build_single_layer if kind == "single" else layers.build_double_layer
    return build(topo, table)


@lru_cache(maxsize=16)
def circle_reduced(N: int, mode: str = "F-single", beta: float = 0.0):
    """Gauge-fixed reduced system for the circle benchmark problem."""
    topo, table, problem, _ = circle_setup(N, beta)
    extrap = reduction.build_extrapolation(topo)
    if mode == "F-double":
        blocks = layers.build_double_layer(topo, table)
    else:
        blocks = layers.build_single_layer(topo, table)
    if mode == "E":
        trace_map = reduction.value_map(blocks, extrap)
    else:
        trace_map = reduction.density_map(blocks, extrap)
    surf = surface_mod.assemble_surface_system(topo, problem.g, 0.0)
    return reduction.build_reduced_system(surf, trace_map)


@pytest.fixture(scope="session")
def circle64():
    return circle_setup(64)


@pytest.fixture(scope="session")
def circle128():
    return circle_setup(128)
