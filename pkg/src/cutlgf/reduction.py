"""Reduced trial space: extrapolation to the outer layer, the value- and
density-parametrized reconstruction maps, and the gauge-fixed reduced system.

A trace function in the reduced space is determined by its ring coefficients:
interior values come from the discrete harmonic extension, outer values from
a local second-order extrapolation.  Writing the extrapolation as

    R_in u_interior + R_ring u_ring + u_outer = 0,

the reconstruction maps are

    value map    u_ring -> (H u_ring, u_ring, -J u_ring),   J = R_in H + R_ring
    density map  q      -> (P1 q, P2 q, -(R_in P1 + R_ring P2) q)

with P1/P2 the layer blocks.  Both are applied matrix-free.  The reduced
operator M^T K M inherits symmetry; with no surface reaction its kernel is the
constant-generating vector, which a scale-matched rank-one term removes:

    A = M^T K M + alpha m m^T,  m = M^T w,  alpha = tr(M^T K M) / (n m^T m).

With an inhomogeneous bulk source only the right-hand side is corrected.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import NoAdmissibleDirection
from .geometry import CutTopology
from .layers import LayerBlocks
from .lgf import LatticeField
from .surface import SurfaceSystem

HUTCHINSON_PROBES = 64
DENSE_ALPHA_LIMIT = 4096  # materialize the reduced matrix for the exact trace


@dataclass
class Extrapolation:
    """Sparse outer-layer extrapolation in the form
    from_interior @ u_interior + from_ring @ u_ring + u_outer = 0."""

    from_interior: sp.csr_matrix   # (n_outer, n_interior)
    from_ring: sp.csr_matrix       # (n_outer, n_ring)
    two_direction: np.ndarray      # (n_outer,) bool, averaged two-axis rule used
    directions: list[tuple]        # per row, the (di, dj) steps used


def build_extrapolation(topology: CutTopology) -> Extrapolation:
    """Second-order extrapolation per outer vertex.

    Per axis the backward points one and two steps away must both lie in the
    interior-or-ring band; +e is preferred over -e.  When both axes admit a
    direction the two three-point rules are averaged, which cancels the
    leading residual on harmonic data.
    """
    n1, n2 = topology.n_interior, topology.n_ring
    ny1, nx1 = topology.grid.vertex_shape
    slot = topology.slot

    def band_slot(i, j):
        if i < 0 or j < 0 or i >= nx1 or j >= ny1:
            return -1
        s = slot[j, i]
        return s if 0 <= s < n1 + n2 else -1

    rows_i, cols_i, vals_i = [], [], []
    rows_r, cols_r, vals_r = [], [], []
    two_dir = np.zeros(topology.n_outer, dtype=bool)
    directions: list[tuple] = []

    for k, (i, j) in enumerate(topology.outer):
        i, j = int(i), int(j)
        picked = []
        for axis_steps in (((1, 0), (-1, 0)), ((0, 1), (0, -1))):
            for di, dj in axis_steps:
                s1 = band_slot(i - di, j - dj)
                s2 = band_slot(i - 2 * di, j - 2 * dj)
                if s1 >= 0 and s2 >= 0:
                    picked.append(((di, dj), s1, s2))
                    break
        if not picked:
            raise NoAdmissibleDirection(
                f"outer vertex ({i}, {j}) has no axis with two in-band "
                "backward points"
            )
        scale = 0.5 if len(picked) == 2 else 1.0
        two_dir[k] = len(picked) == 2
        directions.append(tuple(step for step, _, _ in picked))
        for _, s1, s2 in picked:
            for s, coeff in ((s1, -2.0 * scale), (s2, 1.0 * scale)):
                if s < n1:
                    rows_i.append(k); cols_i.append(s); vals_i.append(coeff)
                else:
                    rows_r.append(k); cols_r.append(s - n1); vals_r.append(coeff)

    n3 = topology.n_outer
    from_interior = sp.coo_matrix((vals_i, (rows_i, cols_i)), shape=(n3, n1)).tocsr()
    from_ring = sp.coo_matrix((vals_r, (rows_r, cols_r)), shape=(n3, n2)).tocsr()
    return Extrapolation(from_interior=from_interior, from_ring=from_ring,
                         two_direction=two_dir, directions=directions)


class TraceMap:
    """Reconstruction map from the reduced unknown to all active vertex values."""

    mode: str

    def __init__(self, blocks: LayerBlocks, extrap: Extrapolation):
        self.blocks = blocks
        self.extrap = extrap
        topo = blocks.topology
        self.n1, self.n2, self.n3 = topo.n_interior, topo.n_ring, topo.n_outer

    @property
    def dim(self) -> int:
        return self.n2

    def split(self, y):
        return y[: self.n1], y[self.n1: self.n1 + self.n2], y[self.n1 + self.n2:]

    def constant_vector(self) -> np.ndarray:
        """Reduced coefficients generating the all-ones trace."""
        raise NotImplementedError

    def density_of(self, solution: np.ndarray) -> np.ndarray:
        """Layer density reproducing the solved trace in the bulk."""
        raise NotImplementedError


class ValueMap(TraceMap):
    """Parametrization by ring nodal values (needs the ring block solve)."""

    mode = "E"

    def apply(self, u_ring):
        u_in = self.blocks.to_interior @ self.blocks.solve_ring(u_ring)
        u_out = -(self.extrap.from_interior @ u_in + self.extrap.from_ring @ u_ring)
        return np.concatenate([u_in, u_ring, u_out], axis=0)

    def applyT(self, y):
        y1, y2, y3 = self.split(y)
        z = y1 - self.extrap.from_interior.T @ y3
        lifted = self.blocks.solve_ring(self.blocks.to_interior.T @ z, transpose=True)
        return lifted + y2 - self.extrap.from_ring.T @ y3

    def constant_vector(self):
        return np.ones(self.n2)

    def density_of(self, solution):
        return self.blocks.solve_ring(solution)


class DensityMap(TraceMap):
    """Parametrization by a layer density (no ring solve anywhere)."""

    def __init__(self, blocks, extrap):
        super().__init__(blocks, extrap)
        self.mode = "F-single" if blocks.kind == "single" else "F-double"

    def apply(self, q):
        u_in = self.blocks.to_interior @ q
        u_ring = self.blocks.on_ring @ q
        u_out = -(self.extrap.from_interior @ u_in + self.extrap.from_ring @ u_ring)
        return np.concatenate([u_in, u_ring, u_out], axis=0)

    def applyT(self, y):
        y1, y2, y3 = self.split(y)
        z1 = y1 - self.extrap.from_interior.T @ y3
        z2 = y2 - self.extrap.from_ring.T @ y3
        return self.blocks.to_interior.T @ z1 + self.blocks.on_ring.T @ z2

    def constant_vector(self):
        return self.blocks.solve_ring(np.ones(self.n2))

    def density_of(self, solution):
        return solution


def value_map(blocks: LayerBlocks, extrap: Extrapolation) -> ValueMap:
    blocks.factorization()  # fail early if the ring block is singular
    return ValueMap(blocks, extrap)


def density_map(blocks: LayerBlocks, extrap: Extrapolation) -> DensityMap:
    return DensityMap(blocks, extrap)


@dataclass
class ReducedSystem:
    """Gauge-fixed reduced operator, right-hand side, and bookkeeping."""

    mode: str
    trace_map: TraceMap
    surface: SurfaceSystem
    rhs: np.ndarray
    gauge_m: np.ndarray
    alpha: float
    gauge_target: float
    gauged: bool
    particular_on_active: np.ndarray | None = None
    gauge_rhs_factor: float = field(default=0.0, repr=False)

    @property
    def dim(self) -> int:
        return self.trace_map.dim

    def apply(self, q, gauge: bool | None = None):
        """Operator action M^T K M q (+ alpha m (m.q) when gauged).

        Accepts a vector or a (dim, k) block of vectors.
        """
        out = self.trace_map.applyT(self.surface.K @ self.trace_map.apply(q))
        use_gauge = self.gauged if gauge is None else gauge
        if use_gauge and self.alpha != 0.0:
            proj = self.gauge_m @ q
            if np.ndim(q) > 1:
                out = out + self.alpha * np.outer(self.gauge_m, proj)
            else:
                out = out + self.alpha * proj * self.gauge_m
        return out

    def materialize(self, gauge: bool | None = None) -> np.ndarray:
        return self.apply(np.eye(self.dim), gauge=gauge)

    def trace_of(self, solution: np.ndarray) -> np.ndarray:
        """Total nodal values on the active set (particular part included)."""
        u = self.trace_map.apply(solution)
        if self.particular_on_active is not None:
            u = u + self.particular_on_active
        return u

    def with_alpha(self, alpha: float) -> "ReducedSystem":
        """Same problem with a different gauge constant, rhs kept consistent."""
        if not self.gauged:
            return self
        rhs = self.rhs + (alpha - self.alpha) * self.gauge_rhs_factor * self.gauge_m
        return ReducedSystem(
            mode=self.mode, trace_map=self.trace_map, surface=self.surface,
            rhs=rhs, gauge_m=self.gauge_m, alpha=float(alpha),
            gauge_target=self.gauge_target, gauged=self.gauged,
            particular_on_active=self.particular_on_active,
            gauge_rhs_factor=self.gauge_rhs_factor,
        )


def _estimate_trace(apply_nogauge, dim, probes=HUTCHINSON_PROBES, seed=0) -> float:
    rng = np.random.default_rng(seed)
    z = rng.integers(0, 2, size=(dim, probes)) * 2.0 - 1.0
    az = apply_nogauge(z)
    return float(np.mean(np.einsum("ik,ik->k", z, az)))


def build_reduced_system(surface: SurfaceSystem, trace_map: TraceMap,
                         gauge_target: float = 0.0,
                         particular: LatticeField | None = None,
                         gauge: str | bool = "auto",
                         alpha_mode: str = "auto",
                         alpha_seed: int = 0) -> ReducedSystem:
    """Assemble the reduced operator and corrected right-hand side.

    gauge="auto" adds the rank-one constant-mode fixing exactly when the
    surface form has no reaction term (sigma_surface == 0).  alpha_mode
    "exact" materializes the reduced matrix for the trace, "hutchinson" uses
    fixed-seed probes; "auto" picks by dimension.
    """
    topo = trace_map.blocks.topology
    n = trace_map.dim

    if gauge == "auto":
        gauged = surface.sigma_surface == 0.0
    else:
        gauged = bool(gauge)

    def apply_nogauge(q):
        return trace_map.applyT(surface.K @ trace_map.apply(q))

    m = trace_map.applyT(surface.w)

    alpha = 0.0
    if gauged:
        mode = alpha_mode
        if mode == "auto":
            mode = "exact" if n <= DENSE_ALPHA_LIMIT else "hutchinson"
        if mode == "exact":
            trace = float(np.trace(apply_nogauge(np.eye(n))))
        elif mode == "hutchinson":
            trace = _estimate_trace(apply_nogauge, n, seed=alpha_seed)
        else:
            raise ValueError(f"unknown alpha_mode {alpha_mode!r}")
        alpha = trace / (n * float(m @ m))

    effective_b = surface.b.copy()
    up_active = None
    mean_particular = 0.0
    if particular is not None:
        up_active = particular.at(topo.order)
        effective_b = effective_b - surface.K @ up_active
        mean_particular = float(surface.w @ up_active)

    gauge_rhs_factor = 0.0
    if gauged:
        # The continuous data is mean free on the closed curve; its discrete
        # image is only O(h^2) so.  Project the effective load onto compatible
        # data, otherwise the incompatible component pollutes the constant
        # mode with an O(1/alpha) amplification through the rank-one term.
        # Both maps reproduce constants, so the kernel functional is 1^T b.
        incompat = float(np.sum(effective_b)) / float(np.sum(surface.w))
        effective_b = effective_b - incompat * surface.w
        gauge_rhs_factor = gauge_target - mean_particular

    rhs = trace_map.applyT(effective_b)
    if gauged:
        rhs = rhs + alpha * gauge_rhs_factor * m

    return ReducedSystem(
        mode=trace_map.mode, trace_map=trace_map, surface=surface, rhs=rhs,
        gauge_m=m, alpha=alpha, gauge_target=float(gauge_target), gauged=gauged,
        particular_on_active=up_active, gauge_rhs_factor=gauge_rhs_factor,
    )
