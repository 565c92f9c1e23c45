"""Discrete single- and double-layer potential blocks on the active layers.

Sources live on the ring; targets are the interior layer or the ring itself.
The single layer is the plain kernel, S[t, s] = g(x_t - x_s).  The double
layer differences the kernel toward the five-point neighbors of the source
that lie outside the active vertex set, which acts as a one-sided discrete
normal derivative in the source variable.

The harmonic-extension map takes ring values to interior values through a
density solve: extend(u_ring) = P_to_interior @ solve(P_on_ring, u_ring).
The self-interaction factorization is formed once and reused; it is never
inverted explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import IsolatedSource, SingularLayerBlock, WindowTooSmall
from .geometry import CutTopology
from .lgf import LgfTable

_STENCIL = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=np.int64)

PIVOT_TOL = 1e-13  # relative to the inf-norm of the ring block


@dataclass
class LayerBlocks:
    """Dense layer-potential blocks in the topology's vertex ordering."""

    kind: str                     # "single" | "double"
    to_interior: np.ndarray       # (n_interior, n_ring)
    on_ring: np.ndarray           # (n_ring, n_ring)
    topology: CutTopology
    outside_dirs: np.ndarray | None = None  # (n_ring, 4) bool, double layer only
    _lu: tuple | None = field(default=None, repr=False)

    def factorization(self):
        """LU of the ring block, cached; fails loudly on tiny pivots."""
        if self._lu is None:
            lu, piv = lu_factor(self.on_ring)
            scale = np.linalg.norm(self.on_ring, np.inf)
            if np.abs(np.diag(lu)).min() < PIVOT_TOL * scale:
                raise SingularLayerBlock(
                    f"{self.kind}-layer ring block has a pivot below "
                    f"{PIVOT_TOL:g} times its norm"
                )
            self._lu = (lu, piv)
        return self._lu

    def solve_ring(self, rhs, transpose=False):
        return lu_solve(self.factorization(), rhs, trans=1 if transpose else 0)


def _offset_table(table: LgfTable, targets_ij, sources_ij, shift=(0, 0)):
    di = np.abs(targets_ij[:, 0:1] - sources_ij[None, :, 0] - shift[0])
    dj = np.abs(targets_ij[:, 1:2] - sources_ij[None, :, 1] - shift[1])
    big = np.maximum(di, dj)
    if big.max(initial=0) > table.window:
        raise WindowTooSmall(
            f"offset {int(big.max())} exceeds the table window {table.window}"
        )
    return table.wedge[np.minimum(di, dj), big]


def build_single_layer(topology: CutTopology, table: LgfTable) -> LayerBlocks:
    ring = topology.ring.astype(np.int64)
    interior = topology.interior.astype(np.int64)
    return LayerBlocks(
        kind="single",
        to_interior=_offset_table(table, interior, ring),
        on_ring=_offset_table(table, ring, ring),
        topology=topology,
    )


def _outside_directions(topology: CutTopology) -> np.ndarray:
    """For each ring vertex, which five-point neighbors take the dipole.

    Primary rule: neighbors outside the active vertex set (off-grid counts as
    outside).  At staircase corners a ring vertex can be fully surrounded by
    active vertices; such sources fall back to neighbors outside the
    interior-and-ring band, i.e. outer-layer vertices.  The reduction never
    evaluates the field at outer vertices, so interior harmonicity is
    preserved either way.  A source with no admissible neighbor at all is an
    error.
    """
    ring = topology.ring.astype(np.int64)
    ny1, nx1 = topology.grid.vertex_shape
    band = topology.n_interior + topology.n_ring
    outside_active = np.zeros((len(ring), 4), dtype=bool)
    outside_band = np.zeros((len(ring), 4), dtype=bool)
    for d, (di, dj) in enumerate(_STENCIL):
        ni = ring[:, 0] + di
        nj = ring[:, 1] + dj
        on_grid = (ni >= 0) & (ni < nx1) & (nj >= 0) & (nj < ny1)
        slot = np.full(len(ring), -1, dtype=np.int64)
        slot[on_grid] = topology.slot[nj[on_grid], ni[on_grid]]
        outside_active[:, d] = ~on_grid | (slot < 0)
        outside_band[:, d] = ~on_grid | (slot < 0) | (slot >= band)
    if not outside_band.any(axis=1).all():
        k = int(np.argmin(outside_band.any(axis=1)))
        i, j = topology.ring[k]
        raise IsolatedSource(
            f"ring vertex ({i}, {j}) has no five-point neighbor outside the "
            "interior-and-ring band"
        )
    surrounded = ~outside_active.any(axis=1)
    dirs = outside_active
    dirs[surrounded] = outside_band[surrounded]
    return dirs


def _dipole_block(table: LgfTable, targets_ij, sources_ij, dirs) -> np.ndarray:
    base = _offset_table(table, targets_ij, sources_ij)
    out = np.zeros_like(base)
    for d, (di, dj) in enumerate(_STENCIL):
        cols = np.nonzero(dirs[:, d])[0]
        if len(cols) == 0:
            continue
        shifted = _offset_table(table, targets_ij, sources_ij[cols], (di, dj))
        out[:, cols] += shifted - base[:, cols]
    return out


def build_double_layer(topology: CutTopology, table: LgfTable) -> LayerBlocks:
    dirs = _outside_directions(topology)
    ring = topology.ring.astype(np.int64)
    interior = topology.interior.astype(np.int64)
    return LayerBlocks(
        kind="double",
        to_interior=_dipole_block(table, interior, ring, dirs),
        on_ring=_dipole_block(table, ring, ring, dirs),
        topology=topology,
        outside_dirs=dirs,
    )


def harmonic_extend(blocks: LayerBlocks, ring_values: np.ndarray) -> np.ndarray:
    """Interior trace of the discrete-harmonic field matching the ring values,
    via solve-then-multiply (the ring inverse is never materialized)."""
    return blocks.to_interior @ blocks.solve_ring(ring_values)


def bulk_evaluate(blocks: LayerBlocks, density: np.ndarray, targets_ij: np.ndarray,
                  table: LgfTable, target_block: int = 2048) -> np.ndarray:
    """Layer-potential field of the given density at arbitrary lattice vertices."""
    targets_ij = np.asarray(targets_ij, dtype=np.int64)
    ring = blocks.topology.ring.astype(np.int64)
    density = np.asarray(density, float)
    out = np.empty(len(targets_ij))
    for t0 in range(0, len(targets_ij), target_block):
        tch = targets_ij[t0:t0 + target_block]
        if blocks.kind == "single":
            mat = _offset_table(table, tch, ring)
        else:
            mat = _dipole_block(table, tch, ring, blocks.outside_dirs)
        out[t0:t0 + target_block] = mat @ density
    return out
