"""Flat-interface symbol calculus for the surface stiffness and layer traces.

For a straight interface aligned with the grid, every operator in the pipeline
is translation invariant along the interface and acts diagonally on tangential
Fourier modes theta in (0, pi].  The symbols used here are

    k(theta)     = (4/h) sin^2(theta/2) + sigma_surface * h
    alpha(theta) = arccosh(2 - cos theta + sigma_bulk h^2 / 2)
    s(theta)     = h / (2 sinh alpha)            single-layer trace
    d(theta)     = (1 - exp(-alpha)) / sinh alpha  double-layer trace

s carries the h-weighted density convention, so k * s^2 / h is bounded between
fixed constants for sigma = 0: the single-layer congruence flattens the
spectrum.  d is order zero (about 1 at low frequency), so the double-layer
congruence keeps the h^{-2} growth of k.  All conditioning predictions are
ratios over the resolved modes theta >= 2 pi h, which makes them independent
of the density normalization convention.

The module also builds the flat periodic strip model with matrices taken from
an actual kernel table (periodized by summing images), used to check measured
spectra against the predictions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergentMode
from .lgf import row_values

MODES = ("E", "F-single", "F-double")


def normal_decay_rate(theta, h: float = 1.0, sigma_bulk: float = 0.0):
    """alpha(theta) with cosh alpha = 2 - cos theta + sigma_bulk h^2 / 2."""
    theta = np.asarray(theta, float)
    w = 2.0 * np.sin(0.5 * theta) ** 2 + 0.5 * sigma_bulk * h * h
    return np.log1p(w + np.sqrt(w * (w + 2.0)))


def stiffness_symbol(theta, h: float, sigma_surface: float = 0.0):
    theta = np.asarray(theta, float)
    return (4.0 / h) * np.sin(0.5 * theta) ** 2 + sigma_surface * h


def layer_symbols(theta, h: float, sigma_bulk: float = 0.0):
    """(single, double) layer trace symbols; theta = 0 diverges when the bulk
    is unscreened."""
    theta = np.asarray(theta, float)
    if sigma_bulk == 0.0 and np.any(theta == 0.0):
        raise DivergentMode("zero-frequency single layer diverges without screening")
    a = normal_decay_rate(theta, h, sigma_bulk)
    sh = np.sinh(a)
    s_hat = h / (2.0 * sh)
    d_hat = -np.expm1(-a) / sh
    return s_hat, d_hat


def composite_symbol(mode: str, theta, h: float, sigma_surface: float = 0.0,
                     sigma_bulk: float = 0.0):
    """Per-mode symbol of the reduced operator family."""
    k = stiffness_symbol(theta, h, sigma_surface)
    if mode == "E":
        return k
    s_hat, d_hat = layer_symbols(theta, h, sigma_bulk)
    if mode == "F-single":
        return k * s_hat ** 2
    if mode == "F-double":
        return k * d_hat ** 2
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def resolved_grid(h: float, n: int = 2048) -> np.ndarray:
    """Resolved tangential frequencies [2 pi h, pi]."""
    return np.linspace(2.0 * np.pi * h, np.pi, n)


def predicted_condition(mode: str, h: float, sigma_surface: float = 0.0,
                        sigma_bulk: float = 0.0, n_grid: int = 2048) -> float:
    """max/min of the composite symbol over the resolved modes."""
    comp = composite_symbol(mode, resolved_grid(h, n_grid), h,
                            sigma_surface, sigma_bulk)
    return float(comp.max() / comp.min())


@dataclass
class SymbolProfile:
    theta_grid: np.ndarray
    k_hat: np.ndarray
    s_hat: np.ndarray
    d_hat: np.ndarray
    sigma_surface: float
    sigma_bulk: float
    h: float


def symbol_profile(h: float, sigma_surface: float = 0.0, sigma_bulk: float = 0.0,
                   n_grid: int = 512) -> SymbolProfile:
    theta = resolved_grid(h, n_grid)
    s_hat, d_hat = layer_symbols(theta, h, sigma_bulk)
    return SymbolProfile(
        theta_grid=theta,
        k_hat=stiffness_symbol(theta, h, sigma_surface),
        s_hat=s_hat,
        d_hat=d_hat,
        sigma_surface=float(sigma_surface),
        sigma_bulk=float(sigma_bulk),
        h=float(h),
    )


# ---------------------------------------------------------------------------
# Flat periodic strip model with real kernel data
# ---------------------------------------------------------------------------

def _periodized_rows(nx: int, sigma_h2: float, rows=(0, 1, 2), tail: float = 1e-16):
    """First circulant rows of the periodized kernel, one per normal offset.

    Images are summed until the screened kernel decays below ``tail``; needs
    sigma_h2 > 0 for the sum to converge.
    """
    if sigma_h2 <= 0.0:
        raise ValueError("periodized kernel needs bulk screening")
    alpha0 = float(normal_decay_rate(0.0, 1.0, sigma_h2))
    reach = int(np.ceil(-np.log(tail) / alpha0)) + nx
    images = max(1, int(np.ceil(reach / nx)))
    m_max = images * nx + nx // 2
    out = {}
    for n_off in rows:
        g = row_values(n_off, m_max, sigma_h2)
        per = np.zeros(nx)
        for d in range(nx):
            vals = [g[abs(d + k * nx)] for k in range(-images, images + 1)
                    if abs(d + k * nx) <= m_max]
            per[d] = float(np.sum(vals))
        out[n_off] = per
    return out


def _circulant_eigs(first_row: np.ndarray) -> np.ndarray:
    """Eigenvalues of the symmetric circulant with the given first row,
    ordered by Fourier mode k = 0..nx-1."""
    return np.real(np.fft.fft(first_row))


def flat_model_spectrum(kind: str, nx: int, sigma_bulk: float, sigma_surface: float,
                        cut_fraction: float = 0.5):
    """Eigenvalues of the density-reduced operator on a flat periodic strip.

    The interface is the horizontal line through a row of cells at height
    ``cut_fraction`` (in cell units) on a periodic strip of nx cells of size
    h = 1/nx.  The interior layer is the row below, the ring the row above,
    and there is no outer layer.  Layer blocks are built from the actual
    kernel table periodized over images, the surface stiffness from the exact
    trace of the bilinear basis on the line.  Returns (modes k != 0 included,
    eigenvalues by Fourier mode).
    """
    if kind not in ("single", "double"):
        raise ValueError(f"kind must be 'single' or 'double', got {kind!r}")
    h = 1.0 / nx
    t = float(cut_fraction)
    sigma_h2 = sigma_bulk * h * h
    rows = _periodized_rows(nx, sigma_h2, rows=(0, 1, 2))

    s_hat = {n: _circulant_eigs(rows[n]) for n in rows}
    if kind == "single":
        trace_interior = s_hat[1]   # source row to the row below, |offset| = 1
        trace_ring = s_hat[0]
    else:
        # dipole toward the outside row: g(., 2) - g(., 1) at interior targets,
        # g(., 1) - g(., 0) on the ring itself
        trace_interior = s_hat[2] - s_hat[1]
        trace_ring = s_hat[1] - s_hat[0]

    # The interface sits at height t inside the cell row, so the bilinear
    # basis traces weight the bottom (interior) row by (1 - t) and the top
    # (ring) row by t.  The restriction to the line is the P1 function with
    # those nodal values: stiffness (2 - 2 cos)/h, consistent mass h(2 + cos)/3.
    k = np.arange(nx)
    c = np.cos(2.0 * np.pi * k / nx)
    k1d = (2.0 - 2.0 * c) / h
    m1d = h * (2.0 + c) / 3.0
    line = (1.0 - t) * trace_interior + t * trace_ring
    return (k1d + sigma_surface * m1d) * np.abs(line) ** 2


def flat_model_condition(kind: str, nx: int, sigma_bulk: float,
                         sigma_surface: float, cut_fraction: float = 0.75) -> float:
    """Measured condition number of the flat strip model over the nonzero
    Fourier modes (matching the resolved-mode convention of the predictions)."""
    eigs = flat_model_spectrum(kind, nx, sigma_bulk, sigma_surface, cut_fraction)
    eigs = np.abs(eigs[1:])
    return float(eigs.max() / eigs.min())
