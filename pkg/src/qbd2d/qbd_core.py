"""Minimal nonnegative solutions of the matrix quadratic equations along each axis.

For axis 1 and a fixed ``z`` the level variable is x2, with down/local/up
blocks ``A_{*,-1}(z), A_{*,0}(z), A_{*,1}(z)``.  ``G`` solves
``down + local X + up X^2 = X``, ``R`` solves ``X^2 down + X local + up = X``,
``H = local + up G`` and ``N = (I - H)^{-1}``.  Axis 2 is axis 1 of the model
with the coordinates exchanged.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConvergenceError, DomainError, PreconditionError
from .model import QbdModel
from .settings import iteration_cap
from .spectral import TANGENT_CHI, c_matrix, min_chi_2, perron_root

__all__ = [
    "AxisKernels",
    "OneDQbdStationary",
    "solve_axis1",
    "solve_axis2",
    "factorization_residual",
    "qbd_stationary",
    "stationary_vector",
]

TOL = 1e-12
COND_WARN = 1e12


@dataclass(frozen=True)
class AxisKernels:
    """G, R, N, H at one point ``z`` of an axis, with their residuals."""

    axis: int
    z: float
    G: np.ndarray
    R: np.ndarray
    N: np.ndarray
    H: np.ndarray
    residuals: dict = field(default_factory=dict)
    iterations: int = 0
    method: str = "cr"

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())


@dataclass(frozen=True)
class OneDQbdStationary:
    """Stationary law of an induced one-dimensional QBD.

    Level 0 carries ``pi0``; level ``k >= 1`` carries ``pi1 @ R_star^(k-1)``.
    """

    face: int
    pi0: np.ndarray
    pi1: np.ndarray
    R_star: np.ndarray
    normalization: float

    def level(self, k: int) -> np.ndarray:
        if k == 0:
            return self.pi0
        return self.pi1 @ np.linalg.matrix_power(self.R_star, k - 1)

    def tail_sum(self) -> np.ndarray:
        """sum_{k>=1} pi_k = pi1 (I - R_star)^{-1}."""
        eye = np.eye(self.R_star.shape[0])
        return np.linalg.solve((eye - self.R_star).T, self.pi1)


def _axis_blocks(model: QbdModel, z: float):
    return model.a_col_z(-1, z), model.a_col_z(0, z), model.a_col_z(1, z)


def _cyclic_reduction(down, local, up, tol, max_iter):
    n = down.shape[0]
    eye = np.eye(n)
    a_dn, a_loc, a_up = down.copy(), local.copy(), up.copy()
    a_hat = local.copy()
    G = np.linalg.solve(eye - a_hat, down)
    for it in range(1, max_iter + 1):
        lu = eye - a_loc
        k_dn = np.linalg.solve(lu, a_dn)
        k_up = np.linalg.solve(lu, a_up)
        up_k_dn = a_up @ k_dn
        a_hat = a_hat + up_k_dn
        a_loc = a_loc + up_k_dn + a_dn @ k_up
        a_dn = a_dn @ k_dn
        a_up = a_up @ k_up
        G_new = np.linalg.solve(eye - a_hat, down)
        if not np.all(np.isfinite(G_new)):
            raise ConvergenceError("cyclic reduction produced non-finite iterates", iterations=it)
        change = np.max(np.abs(G_new - G))
        G = G_new
        if change < tol or min(np.max(a_dn), np.max(a_up)) < 1e-300:
            return G, it
    raise ConvergenceError(
        "cyclic reduction hit its iteration cap", iterations=max_iter, last_change=change
    )


def _kernels_from_g(down, local, up, G):
    n = G.shape[0]
    eye = np.eye(n)
    H = local + up @ G
    i_h = eye - H
    cond = np.linalg.cond(i_h)
    if cond > COND_WARN:
        warnings.warn(f"I - H is ill-conditioned (cond ~ {cond:.2e})", RuntimeWarning, stacklevel=3)
    N = np.linalg.solve(i_h, eye)
    R = up @ N
    residuals = {
        "G_equation": float(np.max(np.abs(down + local @ G + up @ G @ G - G))),
        "R_equation": float(np.max(np.abs(R @ R @ down + R @ local + up - R))),
        "G_from_N": float(np.max(np.abs(G - N @ down))),
        "R_from_N": float(np.max(np.abs(R - up @ N))),
        "N_inverse": float(np.max(np.abs(i_h @ N - eye))),
    }
    return H, N, R, residuals


def solve_axis1(model: QbdModel, z: float, tol: float = TOL, max_iter: int | None = None,
                method: str = "cr") -> AxisKernels:
    """Kernels G1(z), R1(z), N1(z), H1(z) for z in [z1_min, z1_max].

    ``method="cr"`` uses cyclic reduction on the problem rescaled by the
    minimiser of ``w -> chi(z, w)``, which puts the unit circle between
    spr(G) and 1/spr(R).  ``method="natural"`` runs the monotone iteration
    ``X <- down + local X + up X^2`` from zero (slow near the interval ends).
    """
    if not z > 0:
        raise DomainError(f"z must be positive, got {z}")
    down, local, up = _axis_blocks(model, z)
    if method == "natural":
        cap = iteration_cap(1_000_000) if max_iter is None else max_iter
        G, its, status = kernels.natural_iteration(
            np.ascontiguousarray(down), np.ascontiguousarray(local), np.ascontiguousarray(up),
            tol, cap,
        )
        if status == 2:
            raise DomainError(
                f"natural iteration diverged at z={z}; z is outside the admissible interval"
            )
        if status == 1:
            raise ConvergenceError(
                f"natural iteration reached {cap} iterations at z={z}; z may be outside "
                "the admissible interval or at its end (raise max_iter)",
                iterations=its, iterate=G,
            )
    elif method == "cr":
        s_min, m = min_chi_2(model, z)
        if m > 1.0 + TANGENT_CHI:
            raise DomainError(
                f"no minimal nonnegative solution at z={z}: min chi = {m:.3e} > 1; "
                "z is outside the admissible interval"
            )
        gamma = math.exp(s_min)
        cap = iteration_cap(200) if max_iter is None else max_iter
        G_scaled, its = _cyclic_reduction(down / gamma, local, up * gamma, tol, cap)
        G = np.maximum(G_scaled, 0.0) * gamma
    else:
        raise ValueError(f"unknown method {method!r}")
    H, N, R, residuals = _kernels_from_g(down, local, up, G)
    return AxisKernels(axis=1, z=float(z), G=G, R=R, N=N, H=H, residuals=residuals,
                       iterations=int(its), method=method)


def solve_axis2(model: QbdModel, w: float, tol: float = TOL, max_iter: int | None = None,
                method: str = "cr") -> AxisKernels:
    """Kernels G2(w), R2(w), N2(w), H2(w): axis 1 of the coordinate-swapped model."""
    k = solve_axis1(model.transposed, w, tol=tol, max_iter=max_iter, method=method)
    return AxisKernels(axis=2, z=k.z, G=k.G, R=k.R, N=k.N, H=k.H, residuals=k.residuals,
                       iterations=k.iterations, method=k.method)


def factorization_residual(model: QbdModel, k: AxisKernels, w: float) -> float:
    """Max-norm of I - C - (w^{-1} I - R)(I - H)(w I - G) at the kernels' point."""
    if not w > 0:
        raise DomainError(f"w must be positive, got {w}")
    C = c_matrix(model, k.z, w) if k.axis == 1 else c_matrix(model, w, k.z)
    eye = np.eye(model.s0)
    rhs = (eye / w - k.R) @ (eye - k.H) @ (w * eye - k.G)
    return float(np.max(np.abs(eye - C - rhs)))


def stationary_vector(P: np.ndarray) -> np.ndarray:
    """Stationary row vector of an irreducible stochastic matrix (dense solve)."""
    n = P.shape[0]
    M = P.T - np.eye(n)
    M[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    return np.linalg.solve(M, rhs)


def _interior_drift(model: QbdModel, axis: int) -> float:
    pi = stationary_vector(model.a_star)
    if axis == 1:
        d = model.a_row(1) - model.a_row(-1)
    else:
        d = model.a_col(1) - model.a_col(-1)
    return float(pi @ d.sum(axis=1))


def qbd_stationary(face: int, model: QbdModel, tol: float = TOL) -> OneDQbdStationary:
    """Stationary law of the induced chain along face 1 (level x2) or face 2 (level x1).

    Needs the interior drift across the face to be negative: a2 < 0 for
    face 1 and a1 < 0 for face 2.
    """
    if face not in (1, 2):
        raise ValueError("face must be 1 or 2")
    drift = _interior_drift(model, 2 if face == 1 else 1)
    if not drift < 0:
        raise PreconditionError(
            f"induced chain of face {face} is not positive recurrent (drift {drift:.4g} >= 0)"
        )
    m = model if face == 1 else model.transposed
    k = solve_axis1(m, 1.0, tol=tol)
    b_loc = m.a1_col_z(0, 1.0)
    b_up = m.a1_col_z(1, 1.0)
    s0 = m.s0
    eye = np.eye(s0)
    censored = b_loc + b_up @ k.G
    weights = 1.0 + b_up @ k.N @ np.linalg.solve(eye - k.R, np.ones(s0))
    M = censored.T - eye
    M[-1, :] = weights
    rhs = np.zeros(s0)
    rhs[-1] = 1.0
    pi0 = np.linalg.solve(M, rhs)
    pi1 = pi0 @ b_up @ k.N
    total = float(pi0.sum() + np.linalg.solve((eye - k.R).T, pi1).sum())
    if perron_root(k.R) >= 1.0:
        raise PreconditionError(f"rate matrix of face {face} has spectral radius >= 1")
    return OneDQbdStationary(face=face, pi0=pi0, pi1=pi1, R_star=k.R, normalization=total)
