"""Background grid, level sets, active-vertex classification, interface extraction.

The interface is the zero set of a level-set function psi (negative inside).
Cells of a uniform Cartesian grid whose corner values change sign are *active*;
their vertices are partitioned into three ordered groups:

  interior  -- active vertices with psi <= 0,
  ring      -- exterior active vertices with a five-point neighbor in the interior,
  outer     -- the remaining exterior active vertices.

Each active cell carries one straight interface segment connecting the two
level-set zero crossings on its edges, with Gauss quadrature and unit normals.
Vertex ordering is lexicographic by (j, i) inside each group, so every matrix
assembled downstream is bit-reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateCut, EmptyInterface

# Vertices with |psi| below this (times h) are pushed to the exterior side so
# that no vertex sits exactly on the interface; keeps sweeps reproducible.
VERTEX_DEGENERACY_TOL = 1e-12

# Edge root finding: bisection to this (times h), then one Newton polish.
EDGE_ROOT_TOL = 1e-13

DEFAULT_QUAD_ORDER = 3


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian vertex grid: vertex (i, j) = origin + (i*h, j*h)."""

    origin: tuple[float, float]
    h: float
    nx: int
    ny: int

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"need at least 2x2 cells, got {self.nx}x{self.ny}")

    @property
    def vertex_shape(self) -> tuple[int, int]:
        """(rows, cols) = (ny + 1, nx + 1); arrays over vertices use [j, i]."""
        return (self.ny + 1, self.nx + 1)

    def vertex_points(self) -> np.ndarray:
        """All vertex coordinates, shape (ny+1, nx+1, 2)."""
        ox, oy = self.origin
        x = ox + self.h * np.arange(self.nx + 1)
        y = oy + self.h * np.arange(self.ny + 1)
        return np.stack(np.meshgrid(x, y, indexing="xy"), axis=-1)

    def points_of(self, ij: np.ndarray) -> np.ndarray:
        """Coordinates of vertices given as an (k, 2) array of (i, j) indices."""
        ij = np.asarray(ij)
        return np.asarray(self.origin) + self.h * ij.astype(float)


@dataclass(frozen=True)
class PolarCurve:
    """Star-shaped closed curve r = rho(theta) about a center point."""

    center: tuple[float, float]
    rho: Callable[[np.ndarray], np.ndarray]
    drho: Callable[[np.ndarray], np.ndarray]
    ddrho: Callable[[np.ndarray], np.ndarray]

    def point(self, theta):
        theta = np.asarray(theta, float)
        r = self.rho(theta)
        cx, cy = self.center
        return np.stack([cx + r * np.cos(theta), cy + r * np.sin(theta)], axis=-1)

    def theta_of(self, points):
        p = np.asarray(points, float) - np.asarray(self.center)
        return np.arctan2(p[..., 1], p[..., 0])

    def normal(self, theta):
        """Outward unit normal at parameter theta (counterclockwise curve)."""
        theta = np.asarray(theta, float)
        r, dr = self.rho(theta), self.drho(theta)
        tx = dr * np.cos(theta) - r * np.sin(theta)
        ty = dr * np.sin(theta) + r * np.cos(theta)
        speed = np.sqrt(tx * tx + ty * ty)
        return np.stack([ty / speed, -tx / speed], axis=-1)

    def curvature(self, theta):
        """Signed curvature, +1 for the unit circle with outward normal."""
        theta = np.asarray(theta, float)
        r, dr, ddr = self.rho(theta), self.drho(theta), self.ddrho(theta)
        return (r * r + 2.0 * dr * dr - r * ddr) / (r * r + dr * dr) ** 1.5

    def speed(self, theta):
        theta = np.asarray(theta, float)
        r, dr = self.rho(theta), self.drho(theta)
        return np.sqrt(r * r + dr * dr)


@dataclass(frozen=True)
class LevelSet:
    """Scalar field with gradient; negative inside, zero on the interface.

    ``polar`` is attached for the built-in star-shaped curves and gives exact
    curve points, normals and curvature for manufactured data.
    """

    psi: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    polar: PolarCurve | None = None


def circle_levelset(center=(0.0, 0.0), radius=1.0) -> LevelSet:
    cx, cy = float(center[0]), float(center[1])
    r0 = float(radius)

    def psi(p):
        p = np.asarray(p, float)
        return np.hypot(p[..., 0] - cx, p[..., 1] - cy) - r0

    def grad(p):
        p = np.asarray(p, float)
        dx, dy = p[..., 0] - cx, p[..., 1] - cy
        r = np.hypot(dx, dy)
        r = np.where(r == 0.0, 1.0, r)
        return np.stack([dx / r, dy / r], axis=-1)

    polar = PolarCurve(
        center=(cx, cy),
        rho=lambda t: r0 * np.ones_like(np.asarray(t, float)),
        drho=lambda t: np.zeros_like(np.asarray(t, float)),
        ddrho=lambda t: np.zeros_like(np.asarray(t, float)),
    )
    return LevelSet(psi=psi, grad=grad, polar=polar)


# Fourier perturbation of the unit circle used by the deformed benchmark curve.
_DEFORM_TERMS = (
    (0.16, 2.0, 0.4, "cos"),
    (0.10, 3.0, -0.7, "sin"),
    (0.07, 5.0, 1.3, "cos"),
    (0.05, 8.0, 0.2, "sin"),
)


def _deformed_rho(theta):
    theta = np.asarray(theta, float)
    r = np.ones_like(theta)
    for a, k, phase, fn in _DEFORM_TERMS:
        w = k * theta + phase
        r = r + a * (np.cos(w) if fn == "cos" else np.sin(w))
    return r


def _deformed_drho(theta):
    theta = np.asarray(theta, float)
    r = np.zeros_like(theta)
    for a, k, phase, fn in _DEFORM_TERMS:
        w = k * theta + phase
        r = r + (-a * k * np.sin(w) if fn == "cos" else a * k * np.cos(w))
    return r


def _deformed_ddrho(theta):
    theta = np.asarray(theta, float)
    r = np.zeros_like(theta)
    for a, k, phase, fn in _DEFORM_TERMS:
        w = k * theta + phase
        r = r + (-a * k * k * np.cos(w) if fn == "cos" else -a * k * k * np.sin(w))
    return r


def deformed_circle_levelset() -> LevelSet:
    """Deformed circle r = rho(theta) with a four-term Fourier perturbation."""
    polar = PolarCurve(
        center=(0.0, 0.0), rho=_deformed_rho, drho=_deformed_drho, ddrho=_deformed_ddrho
    )

    def psi(p):
        p = np.asarray(p, float)
        r = np.hypot(p[..., 0], p[..., 1])
        theta = np.arctan2(p[..., 1], p[..., 0])
        return r - _deformed_rho(theta)

    def grad(p):
        # grad psi = grad r - rho'(theta) grad theta; valid away from the origin
        p = np.asarray(p, float)
        x, y = p[..., 0], p[..., 1]
        r2 = x * x + y * y
        r = np.sqrt(r2)
        theta = np.arctan2(y, x)
        dr = _deformed_drho(theta)
        gx = x / r + dr * y / r2
        gy = y / r - dr * x / r2
        return np.stack([gx, gy], axis=-1)

    return LevelSet(psi=psi, grad=grad, polar=polar)


def levelset_by_name(name: str, *, h: float | None = None, beta: float = 0.0) -> LevelSet:
    """Built-in level sets: "circle", "shifted-circle" (center (beta*h, 0)),
    "deformed-circle"."""
    if name == "circle":
        return circle_levelset()
    if name == "shifted-circle":
        if h is None:
            raise ValueError("shifted-circle needs the grid spacing h")
        return circle_levelset(center=(beta * h, 0.0))
    if name == "deformed-circle":
        return deformed_circle_levelset()
    raise ValueError(f"unknown level set {name!r}")


def load_levelset_grid(path) -> LevelSet:
    """Load psi from a plain-text vertex sample file.

    Header line "nx ny h ox oy", then (ny+1)*(nx+1) values row-major (j outer).
    Bilinear interpolation inside the sampled box; the gradient is the bilinear
    one, so normals are first-order accurate.
    """
    with open(path) as fh:
        header = fh.readline().split()
        nx, ny = int(header[0]), int(header[1])
        h, ox, oy = float(header[2]), float(header[3]), float(header[4])
        data = np.loadtxt(fh)
    vals = np.asarray(data, float).reshape(ny + 1, nx + 1)

    def _locate(p):
        p = np.asarray(p, float)
        gx = np.clip((p[..., 0] - ox) / h, 0.0, nx - 1e-12)
        gy = np.clip((p[..., 1] - oy) / h, 0.0, ny - 1e-12)
        i = np.minimum(gx.astype(int), nx - 1)
        j = np.minimum(gy.astype(int), ny - 1)
        return i, j, gx - i, gy - j

    def psi(p):
        i, j, s, t = _locate(p)
        return ((1 - s) * (1 - t) * vals[j, i] + s * (1 - t) * vals[j, i + 1]
                + s * t * vals[j + 1, i + 1] + (1 - s) * t * vals[j + 1, i])

    def grad(p):
        i, j, s, t = _locate(p)
        dx = ((1 - t) * (vals[j, i + 1] - vals[j, i])
              + t * (vals[j + 1, i + 1] - vals[j + 1, i])) / h
        dy = ((1 - s) * (vals[j + 1, i] - vals[j, i])
              + s * (vals[j + 1, i + 1] - vals[j, i + 1])) / h
        return np.stack([dx, dy], axis=-1)

    return LevelSet(psi=psi, grad=grad)


@dataclass(frozen=True)
class InterfaceSegment:
    """Straight interface piece inside one active cell."""

    cell: tuple[int, int]          # (i, j) of the cell's lower-left vertex
    endpoints: np.ndarray          # (2, 2), on two distinct cell edges
    length: float
    quad_points: np.ndarray        # (q, 2)
    quad_weights: np.ndarray       # (q,), sum = length
    normals: np.ndarray            # (q, 2) unit normals grad psi/|grad psi|


@dataclass
class CutTopology:
    """Classified active region plus the piecewise-linear interface.

    ``order`` concatenates (interior, ring, outer) as (i, j) rows; ``slot``
    maps vertex (j, i) to its position in that ordering (-1 if inactive).
    ``psi_vertices`` holds the degeneracy-perturbed vertex samples actually
    used for classification and edge roots.
    """

    grid: Grid
    active_cells: np.ndarray       # (k, 2) of (i, j), lex by (j, i)
    interior: np.ndarray           # (n1, 2) of (i, j)
    ring: np.ndarray               # (n2, 2)
    outer: np.ndarray              # (n3, 2)
    order: np.ndarray              # (n1+n2+n3, 2)
    slot: np.ndarray               # (ny+1, nx+1) int, -1 outside the active set
    psi_vertices: np.ndarray       # (ny+1, nx+1)
    segments: list[InterfaceSegment] = field(default_factory=list)

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def n_ring(self) -> int:
        return len(self.ring)

    @property
    def n_outer(self) -> int:
        return len(self.outer)

    @property
    def n_active(self) -> int:
        return len(self.order)

    def in_band(self, i, j):
        """True for vertices in interior-or-ring (extrapolation source band)."""
        s = self.slot[j, i]
        return (s >= 0) & (s < self.n_interior + self.n_ring)

    def interface_length(self) -> float:
        return float(sum(s.length for s in self.segments))


def _gauss_rule(order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return 0.5 * (nodes + 1.0), 0.5 * weights  # mapped to [0, 1]


def classify_vertices(levelset: LevelSet, grid: Grid,
                      quad_order: int = DEFAULT_QUAD_ORDER) -> CutTopology:
    """Partition active vertices into (interior, ring, outer) and extract the
    interface segments.

    Raises EmptyInterface when no cell is cut, DegenerateCut for cells cut in
    more than one connected piece (checkerboard corner signs).
    """
    pts = grid.vertex_points()
    psi = np.asarray(levelset.psi(pts), float)
    if psi.shape != grid.vertex_shape:
        raise ValueError("level set must evaluate vertex arrays elementwise")

    tol = VERTEX_DEGENERACY_TOL * grid.h
    psi = np.where(np.abs(psi) < tol, tol, psi)

    pos = psi > 0.0
    c00 = pos[:-1, :-1]
    c10 = pos[:-1, 1:]
    c01 = pos[1:, :-1]
    c11 = pos[1:, 1:]
    mixed = ~((c00 == c10) & (c00 == c01) & (c00 == c11))
    if not mixed.any():
        raise EmptyInterface("the level set does not change sign on any cell")

    saddle = mixed & (c00 == c11) & (c10 == c01) & (c00 != c10)
    if saddle.any():
        j, i = np.argwhere(saddle)[0]
        raise DegenerateCut(
            f"cell ({i}, {j}) is cut in more than one connected piece"
        )

    active_v = np.zeros_like(pos)
    active_v[:-1, :-1] |= mixed
    active_v[:-1, 1:] |= mixed
    active_v[1:, :-1] |= mixed
    active_v[1:, 1:] |= mixed

    inside = ~pos
    touches_inside = np.zeros_like(pos)
    touches_inside[:-1, :] |= inside[1:, :]
    touches_inside[1:, :] |= inside[:-1, :]
    touches_inside[:, :-1] |= inside[:, 1:]
    touches_inside[:, 1:] |= inside[:, :-1]

    interior_m = active_v & inside
    ring_m = active_v & pos & touches_inside
    outer_m = active_v & pos & ~touches_inside

    def _ordered(mask):
        ji = np.argwhere(mask)          # lexicographic by (j, i)
        return ji[:, ::-1].astype(np.int32)  # store as (i, j)

    interior = _ordered(interior_m)
    ring = _ordered(ring_m)
    outer = _ordered(outer_m)
    order = np.concatenate([interior, ring, outer], axis=0)

    slot = np.full(grid.vertex_shape, -1, dtype=np.int64)
    slot[order[:, 1], order[:, 0]] = np.arange(len(order))

    cells = np.argwhere(mixed)[:, ::-1].astype(np.int32)  # (i, j), lex by (j, i)

    topo = CutTopology(
        grid=grid,
        active_cells=cells,
        interior=interior,
        ring=ring,
        outer=outer,
        order=order,
        slot=slot,
        psi_vertices=psi,
    )
    topo.segments = extract_interface(levelset, topo, quad_order)
    return topo


def _edge_roots(levelset: LevelSet, starts, directions, f0, f1, h):
    """Vectorized bisection + one Newton polish for psi = 0 on grid edges.

    starts: (k, 2) edge start points; directions: (k, 2) unit axis vectors;
    f0/f1: (possibly perturbed) endpoint values with opposite signs.
    Returns parameters t in [0, 1] along each edge.
    """
    ta = np.zeros(len(starts))
    tb = np.ones(len(starts))
    fa = np.asarray(f0, float).copy()
    steps = int(np.ceil(-np.log2(EDGE_ROOT_TOL))) + 2
    for _ in range(steps):
        tm = 0.5 * (ta + tb)
        fm = np.asarray(levelset.psi(starts + tm[:, None] * directions * h), float)
        left = (fm > 0.0) == (fa > 0.0)
        ta = np.where(left, tm, ta)
        fa = np.where(left, fm, fa)
        tb = np.where(left, tb, tm)
    t = 0.5 * (ta + tb)

    x = starts + t[:, None] * directions * h
    g = np.asarray(levelset.grad(x), float)
    dfdt = np.einsum("kd,kd->k", g, directions) * h
    f = np.asarray(levelset.psi(x), float)
    safe = np.abs(dfdt) > 1e-300
    t_new = np.where(safe, t - f / np.where(safe, dfdt, 1.0), t)
    # keep the polish only while it stays inside the bisection bracket
    t = np.where((t_new >= ta) & (t_new <= tb), t_new, t)
    return np.clip(t, 0.0, 1.0)


def extract_interface(levelset: LevelSet, topology: CutTopology,
                      quad_order: int = DEFAULT_QUAD_ORDER) -> list[InterfaceSegment]:
    """Per active cell: the straight segment between the two edge crossings,
    Gauss quadrature of the given order, and unit normals at the nodes."""
    grid = topology.grid
    h = grid.h
    psi = topology.psi_vertices
    cells = topology.active_cells
    if len(cells) == 0:
        raise EmptyInterface("topology has no active cells")

    ci, cj = cells[:, 0], cells[:, 1]
    f00 = psi[cj, ci]
    f10 = psi[cj, ci + 1]
    f01 = psi[cj + 1, ci]
    f11 = psi[cj + 1, ci + 1]

    origins = grid.points_of(cells)
    ex = np.array([1.0, 0.0])
    ey = np.array([0.0, 1.0])
    # edges per cell: bottom, right, top, left
    edge_defs = (
        (origins, ex, f00, f10),
        (origins + ex * h, ey, f10, f11),
        (origins + ey * h, ex, f01, f11),
        (origins, ey, f00, f01),
    )

    crossings = [(fa > 0.0) != (fb > 0.0) for (_, _, fa, fb) in edge_defs]
    n_cross = sum(c.astype(int) for c in crossings)
    bad = n_cross != 2
    if bad.any():
        k = int(np.argmax(bad))
        raise DegenerateCut(
            f"cell ({ci[k]}, {cj[k]}) has {n_cross[k]} edge crossings, expected 2"
        )

    endpoints = np.empty((len(cells), 2, 2))
    found = np.zeros(len(cells), dtype=int)
    for (starts, direction, fa, fb), mask in zip(edge_defs, crossings):
        if not mask.any():
            continue
        idx = np.nonzero(mask)[0]
        t = _edge_roots(levelset, starts[idx], np.broadcast_to(direction, (len(idx), 2)),
                        fa[idx], fb[idx], h)
        pts = starts[idx] + t[:, None] * direction * h
        slotpos = found[idx]
        endpoints[idx, slotpos] = pts
        found[idx] += 1

    nodes, weights = _gauss_rule(quad_order)
    segments: list[InterfaceSegment] = []
    for k in range(len(cells)):
        p0, p1 = endpoints[k]
        chord = p1 - p0
        length = float(np.hypot(chord[0], chord[1]))
        qp = p0[None, :] + nodes[:, None] * chord[None, :]
        qw = weights * length
        g = np.asarray(levelset.grad(qp), float)
        gn = np.linalg.norm(g, axis=1)
        if np.any(gn < 1e-14):
            raise DegenerateCut(
                f"level-set gradient vanishes on the interface in cell "
                f"({ci[k]}, {cj[k]})"
            )
        segments.append(InterfaceSegment(
            cell=(int(ci[k]), int(cj[k])),
            endpoints=endpoints[k].copy(),
            length=length,
            quad_points=qp,
            quad_weights=qw,
            normals=g / gn[:, None],
        ))
    return segments
