"""Conjugate gradients and condition-number evaluation for the reduced systems.

No preconditioner is applied inside the solver; the density formulation is
expected to be well conditioned on its own.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CgBreakdown, LanczosNotConverged


@dataclass
class SolveReport:
    iterations: int
    residual_history: np.ndarray   # relative residuals, one entry per iteration
    converged: bool
    solution: np.ndarray


def pcg(operator, rhs, tol: float = 1e-10, max_iter: int = 2000) -> SolveReport:
    """Conjugate gradients on an SPD operator, zero initial guess.

    ``operator`` is a callable v -> A v.  The relative residual is
    ||rhs - A x|| / ||rhs||, tracked through the standard recurrence and
    recomputed from scratch on exit.
    """
    rhs = np.asarray(rhs, float)
    nb = float(np.linalg.norm(rhs))
    if nb == 0.0:
        return SolveReport(0, np.zeros(0), True, np.zeros_like(rhs))

    x = np.zeros_like(rhs)
    r = rhs.copy()
    p = r.copy()
    rr = float(r @ r)
    history = []
    converged = False
    for _ in range(max_iter):
        ap = operator(p)
        pap = float(p @ ap)
        if pap <= 0.0:
            raise CgBreakdown(
                f"non-positive curvature p.Ap = {pap:.3e}; operator is not SPD"
            )
        gamma = rr / pap
        x += gamma * p
        r -= gamma * ap
        rr_new = float(r @ r)
        relres = np.sqrt(rr_new) / nb
        history.append(relres)
        if relres <= tol:
            converged = True
            break
        p = r + (rr_new / rr) * p
        rr = rr_new

    true_rel = float(np.linalg.norm(rhs - operator(x)) / nb)
    if history:
        history[-1] = true_rel
    return SolveReport(
        iterations=len(history),
        residual_history=np.asarray(history),
        converged=true_rel <= tol,
        solution=x,
    )


def dense_matrix(operator, dim: int) -> np.ndarray:
    """Materialize the operator columns; uses a batched apply when available."""
    eye = np.eye(dim)
    try:
        return np.asarray(operator(eye))
    except Exception:
        cols = [np.asarray(operator(eye[:, k])) for k in range(dim)]
        return np.stack(cols, axis=1)


def lanczos_extremes(operator, dim: int, steps: int = 200, seed: int = 0,
                     rel_accuracy: float = 0.01):
    """Extreme eigenvalues of an SPD operator by Lanczos with full
    reorthogonalization.  Returns (lam_min, lam_max)."""
    rng = np.random.default_rng(seed)
    steps = min(steps, dim)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    V = np.empty((dim, steps))
    alphas, betas = [], []
    beta = 0.0
    v_prev = np.zeros(dim)
    for k in range(steps):
        V[:, k] = v
        w = np.asarray(operator(v)) - beta * v_prev
        a = float(v @ w)
        alphas.append(a)
        w -= a * v
        w -= V[:, : k + 1] @ (V[:, : k + 1].T @ w)  # full reorthogonalization
        beta = float(np.linalg.norm(w))
        if beta < 1e-14:
            # invariant subspace found; Ritz values are exact
            T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
            ev = np.linalg.eigvalsh(T)
            return float(ev[0]), float(ev[-1])
        v_prev = v
        v = w / beta
        betas.append(beta)
    betas = betas[: len(alphas) - 1]
    T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
    ev, vec = np.linalg.eigh(T)
    # residual bound |beta_m * last eigenvector component| per Ritz pair
    tail = abs(beta) * np.abs(vec[-1, :])
    lam_min, lam_max = float(ev[0]), float(ev[-1])
    if tail[0] > rel_accuracy * abs(lam_min) or tail[-1] > rel_accuracy * abs(lam_max):
        raise LanczosNotConverged(
            f"extreme Ritz values not resolved to {rel_accuracy:.0%} in "
            f"{steps} steps"
        )
    return lam_min, lam_max


def condition_number(operator, dim: int, method: str = "dense") -> float:
    """2-norm condition number of a symmetric operator.

    "dense" materializes the matrix and takes the ratio of extreme singular
    values (absolute eigenvalues); "lanczos" estimates the SPD extremes.
    """
    if method == "dense":
        A = dense_matrix(operator, dim)
        ev = np.linalg.eigvalsh(0.5 * (A + A.T))
        sv = np.abs(ev)
        return float(sv.max() / sv.min())
    if method == "lanczos":
        lam_min, lam_max = lanczos_extremes(operator, dim)
        if lam_min <= 0.0:
            raise LanczosNotConverged("operator is not positive definite")
        return float(lam_max / lam_min)
    raise ValueError(f"unknown method {method!r}")
