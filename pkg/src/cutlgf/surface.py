"""Unstabilized cut finite element assembly on the piecewise-linear interface.

The trial space is the bilinear space of the active cells; on each cell the
local surface stiffness integrates tangentially projected gradients along the
interface segment.  No penalty, agglomeration, or gradient stabilization is
added; the raw system is expected to become arbitrarily ill-conditioned for
degenerate cuts, which the reduction module cures.

Vertex ordering follows CutTopology.order, so the blocks line up with the
layer-potential and extrapolation operators.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import CutTopology, InterfaceSegment


@dataclass
class SurfaceSystem:
    """Global surface stiffness K, load b, and quadrature weights w.

    w_i integrates basis function i along the discrete interface, so
    sum(w) equals the interface length.  K is exactly symmetric; with
    sigma_surface = 0 constants are in its kernel.
    """

    K: sp.csr_matrix
    b: np.ndarray
    w: np.ndarray
    sigma_surface: float


def q1_values(xi, eta):
    """Bilinear basis at reference points, local order (00, 10, 11, 01)."""
    return np.stack([(1 - xi) * (1 - eta), xi * (1 - eta), xi * eta, (1 - xi) * eta],
                    axis=-1)


def q1_gradients(xi, eta, h):
    gx = np.stack([-(1 - eta), (1 - eta), eta, -eta], axis=-1) / h
    gy = np.stack([-(1 - xi), -xi, xi, (1 - xi)], axis=-1) / h
    return np.stack([gx, gy], axis=-1)  # (..., 4, 2)


def local_stiffness(segment: InterfaceSegment, cell_origin, h, data_g=None,
                    with_mass=False):
    """Local 4x4 surface stiffness and 4-load on one segment.

    Entries integrate (P grad phi_a) . (P grad phi_b) with P = I - n n^T at
    the segment quadrature points; the load integrates g * phi_a.
    Returns (K_loc, b_loc, w_loc[, M_loc]).
    """
    rel = (segment.quad_points - np.asarray(cell_origin)) / h
    xi, eta = rel[:, 0], rel[:, 1]
    phi = q1_values(xi, eta)                    # (q, 4)
    grad = q1_gradients(xi, eta, h)             # (q, 4, 2)
    n = segment.normals                          # (q, 2)
    gn = np.einsum("qad,qd->qa", grad, n)
    tang = grad - gn[..., None] * n[:, None, :]  # projected gradients

    wq = segment.quad_weights
    K_loc = np.einsum("q,qad,qbd->ab", wq, tang, tang)
    K_loc = 0.5 * (K_loc + K_loc.T)  # exact symmetry, kept through assembly
    w_loc = wq @ phi
    if data_g is None:
        b_loc = np.zeros(4)
    else:
        gq = np.asarray(data_g(segment.quad_points), float)
        b_loc = (wq * gq) @ phi
    if with_mass:
        M_loc = np.einsum("q,qa,qb->ab", wq, phi, phi)
        M_loc = 0.5 * (M_loc + M_loc.T)
        return K_loc, b_loc, w_loc, M_loc
    return K_loc, b_loc, w_loc


def assemble_surface_system(topology: CutTopology, data_g=None,
                            sigma_surface: float = 0.0) -> SurfaceSystem:
    """Assemble K (+ sigma_surface * consistent mass), b, and w over all
    active cells, in the (interior, ring, outer) vertex ordering."""
    grid = topology.grid
    h = grid.h
    n = topology.n_active
    with_mass = sigma_surface > 0.0

    rows, cols, data = [], [], []
    b = np.zeros(n)
    w = np.zeros(n)
    for segment in topology.segments:
        i, j = segment.cell
        origin = grid.points_of(np.array([[i, j]]))[0]
        loc = local_stiffness(segment, origin, h, data_g, with_mass=with_mass)
        if with_mass:
            K_loc, b_loc, w_loc, M_loc = loc
            K_loc = K_loc + sigma_surface * M_loc
        else:
            K_loc, b_loc, w_loc = loc
        slots = topology.slot[[j, j, j + 1, j + 1], [i, i + 1, i + 1, i]]
        rows.append(np.repeat(slots, 4))
        cols.append(np.tile(slots, 4))
        data.append(K_loc.reshape(-1))
        np.add.at(b, slots, b_loc)
        np.add.at(w, slots, w_loc)

    K = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    return SurfaceSystem(K=K, b=b, w=w, sigma_surface=float(sigma_surface))
