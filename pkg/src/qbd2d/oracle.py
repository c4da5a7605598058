"""Brute-force check: the stationary law of the chain truncated to [0, N]^2.

Transitions that would leave the window are replaced by a self-loop, so the
truncated matrix stays stochastic.  This biases the mass near the far edges by
roughly r^{-N}; decay estimates therefore use a window away from them.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import ConvergenceError
from .model import QbdModel
from .settings import iteration_cap

__all__ = [
    "SolveMethod",
    "TruncatedSolution",
    "DecayEstimate",
    "transition_matrix",
    "truncated_stationary",
    "empirical_decay",
    "write_csv",
]

UNDERFLOW = 1e-250


class SolveMethod(str, Enum):
    GAUSS_SEIDEL = "GaussSeidel"
    POWER_ITERATION = "PowerIteration"


@dataclass(frozen=True)
class TruncatedSolution:
    """``nu[k, l, j]`` is the probability of level (k, l) and phase j."""

    N: int
    nu: np.ndarray
    method: SolveMethod
    residual: float
    iterations: int

    def axis_marginal(self, axis: int) -> np.ndarray:
        """Mass on the axis itself: sum_j nu[k, 0, j] (axis 1) or nu[0, k, j] (axis 2)."""
        if axis == 1:
            return self.nu[:, 0, :].sum(axis=1)
        return self.nu[0, :, :].sum(axis=1)


@dataclass(frozen=True)
class DecayEstimate:
    axis: int
    window: tuple[int, int]
    ratios: np.ndarray
    estimate: float
    spread: float
    warnings: tuple[str, ...] = field(default_factory=tuple)


def _family(model: QbdModel, k_pos: bool, l_pos: bool):
    """Offsets and blocks in effect at cells with the given positivity pattern."""
    if k_pos and l_pos:
        return [((i, j), model.a(i, j)) for i in (-1, 0, 1) for j in (-1, 0, 1)]
    if k_pos:
        return [((i, j), model.a1(i, j)) for i in (-1, 0, 1) for j in (0, 1)]
    if l_pos:
        return [((i, j), model.a2(i, j)) for i in (0, 1) for j in (-1, 0, 1)]
    return [((i, j), model.a0(i, j)) for i in (0, 1) for j in (0, 1)]


def transition_matrix(model: QbdModel, N: int) -> sp.csr_matrix:
    """Stochastic matrix of the chain on {0..N}^2 x phases.

    State (k, l, j) has index ``(k * (N + 1) + l) * s0 + j``.
    """
    s0 = model.s0
    n_side = N + 1
    ks, ls = np.meshgrid(np.arange(n_side), np.arange(n_side), indexing="ij")
    rows, cols, vals = [], [], []
    lost = np.zeros(n_side * n_side * s0)
    phase = np.arange(s0)
    for k_pos in (False, True):
        for l_pos in (False, True):
            cell = ((ks > 0) == k_pos) & ((ls > 0) == l_pos)
            for (di, dj), B in _family(model, k_pos, l_pos):
                if not B.any():
                    continue
                src_k, src_l = ks[cell], ls[cell]
                inside = (src_k + di <= N) & (src_l + dj <= N)
                src = (src_k * n_side + src_l) * s0
                out = src[~inside]
                if out.size:
                    np.add.at(lost, (out[:, None] + phase[None, :]).ravel(),
                              np.tile(B.sum(axis=1), out.size))
                src_in = src[inside]
                dst_in = ((src_k[inside] + di) * n_side + src_l[inside] + dj) * s0
                a, b = np.nonzero(B)
                rows.append((src_in[:, None] + a[None, :]).ravel())
                cols.append((dst_in[:, None] + b[None, :]).ravel())
                vals.append(np.tile(B[a, b], src_in.size))
    n = n_side * n_side * s0
    idx = np.arange(n)
    rows.append(idx)
    cols.append(idx)
    vals.append(lost)
    P = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    P.sum_duplicates()
    return P


def _balance_residual(P: sp.csr_matrix, x: np.ndarray) -> float:
    return float(np.max(np.abs(P.T @ x - x)))


def _gauss_seidel(P: sp.csr_matrix, tol: float, max_sweeps: int):
    n = P.shape[0]
    off = P.tocoo()
    keep = off.row != off.col
    # outflow computed from off-diagonal entries, avoiding 1 - P_ii
    outrate = np.bincount(off.row[keep], weights=off.data[keep], minlength=n)
    PT = sp.csr_matrix((off.data[keep], (off.col[keep], off.row[keep])), shape=(n, n))
    PT.sort_indices()
    indptr = PT.indptr.astype(np.int64)
    indices = PT.indices.astype(np.int64)
    data = np.ascontiguousarray(PT.data, dtype=float)
    if np.any(outrate <= 0):
        raise ConvergenceError("truncated chain has an absorbing state")
    x = np.full(n, 1.0 / n)
    for sweep in range(1, max_sweeps + 1):
        change = kernels.gauss_seidel_sweep(indptr, indices, data, outrate, x)
        x /= x.sum()
        if change < tol:
            return x, sweep
    raise ConvergenceError("Gauss-Seidel sweeps did not converge",
                           iterations=max_sweeps, last_change=change)


def _power(P: sp.csr_matrix, tol: float, max_iter: int):
    n = P.shape[0]
    PT = P.T.tocsr()
    x = np.full(n, 1.0 / n)
    for it in range(1, max_iter + 1):
        y = PT @ x
        y /= y.sum()
        pos = y > 0
        change = float(np.max(np.abs(y[pos] - x[pos]) / y[pos]))
        x = y
        if change < tol:
            return x, it
    raise ConvergenceError("power iteration did not converge",
                           iterations=max_iter, last_change=change)


def truncated_stationary(model: QbdModel, N: int,
                         method: SolveMethod | str = SolveMethod.GAUSS_SEIDEL,
                         tol: float = 1e-13, max_iter: int | None = None) -> TruncatedSolution:
    """Stationary vector of the truncated chain.

    Iterates until the largest relative change of any entry drops below
    ``tol``; relative (not absolute) control keeps the deep tail accurate.
    """
    if N < 5:
        raise ValueError("truncation level N must be at least 5")
    method = SolveMethod(method)
    P = transition_matrix(model, N)
    if method is SolveMethod.GAUSS_SEIDEL:
        x, its = _gauss_seidel(P, tol, iteration_cap(200_000) if max_iter is None else max_iter)
    else:
        x, its = _power(P, tol, iteration_cap(2_000_000) if max_iter is None else max_iter)
    nu = x.reshape(N + 1, N + 1, model.s0)
    return TruncatedSolution(N=N, nu=nu, method=method,
                             residual=_balance_residual(P, x), iterations=its)


def empirical_decay(sol: TruncatedSolution, axis: int,
                    window: tuple[int, int] | None = None) -> DecayEstimate:
    """Median of nu_{k+1}/nu_k along an axis over ``window``; approximates 1/r."""
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2")
    N = sol.N
    k_lo, k_hi = window if window is not None else (int(0.4 * N), int(0.8 * N))
    notes = []
    if k_hi >= N - 5:
        notes.append("window too small")
        warnings.warn(f"window too small: k_hi={k_hi} must stay below N-5={N - 5}",
                      RuntimeWarning, stacklevel=2)
    m = sol.axis_marginal(axis)
    k = np.arange(k_lo, min(k_hi, N - 1) + 1)
    den = m[k]
    ok = den >= UNDERFLOW
    ratios = m[k[ok] + 1] / den[ok]
    if ratios.size == 0:
        raise ValueError("no usable ratios in the window (all denominators underflow)")
    est = float(np.median(ratios))
    return DecayEstimate(axis=axis, window=(k_lo, k_hi), ratios=ratios, estimate=est,
                         spread=float(np.std(ratios) / est), warnings=tuple(notes))


def write_csv(sol: TruncatedSolution, path) -> None:
    """Dump nu with columns k, l, j, probability."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "l", "j", "probability"])
        for (k, l, j), p in np.ndenumerate(sol.nu):
            w.writerow([k, l, j, repr(float(p))])
