"""Spectral curve chi(z1, z2) = spr(C(z1, z2)) and the geometry of its unit level set.

Everything here works in log coordinates ``s = log z`` internally, where
``s -> chi(e^{s1}, e^{s2})`` is convex.  Axis-1 variants are obtained from the
axis-2 ones by exchanging the coordinates of the model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .errors import ConvergenceError, DomainError
from .model import QbdModel
from .settings import iteration_cap

__all__ = [
    "RootKind",
    "BranchRoots",
    "SpectralSummary",
    "c_matrix",
    "perron_root",
    "chi",
    "min_chi_2",
    "min_chi_1",
    "branch_roots_2",
    "branch_roots_1",
    "extreme_points",
    "kernel_det",
]

TOL_EIG = 1e-13
TOL_ROOT = 1e-10
TANGENT_GAP = 1e-6
# chi values this close above 1 at the minimum are read as tangency
TANGENT_CHI = 1e-12
MAX_DOUBLINGS = 200
_S_LIMIT = 700.0  # e^700 is close to the float range
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class RootKind(str, Enum):
    TWO_ROOTS = "TwoRoots"
    TANGENT = "Tangent"
    NO_ROOT = "NoRoot"


@dataclass(frozen=True)
class BranchRoots:
    """Real solutions of chi = 1 in one variable with the other held fixed."""

    kind: RootKind
    lower: float | None = None
    upper: float | None = None


@dataclass(frozen=True)
class SpectralSummary:
    """Extreme points of the closed set {chi(e^s1, e^s2) <= 1} mapped back to z."""

    z1_min: float
    z1_max: float
    z2_min: float
    z2_max: float
    tol: float = TOL_ROOT

    def to_dict(self) -> dict:
        return {
            "z1_min": self.z1_min,
            "z1_max": self.z1_max,
            "z2_min": self.z2_min,
            "z2_max": self.z2_max,
            "tol": self.tol,
        }


def _weights(z1, z2):
    p1 = np.array([1.0 / z1, 1.0, z1])
    p2 = np.array([1.0 / z2, 1.0, z2])
    return np.outer(p1, p2)


def c_matrix(model: QbdModel, z1: float, z2: float) -> np.ndarray:
    """C(z1, z2) = sum_{i,j} A_{i,j} z1^i z2^j for positive z1, z2."""
    if not (z1 > 0 and z2 > 0):
        raise DomainError(f"c_matrix needs z1, z2 > 0, got ({z1}, {z2})")
    return np.tensordot(_weights(z1, z2), model.A, axes=([0, 1], [0, 1]))


def perron_root(C: np.ndarray, method: str = "dense", tol: float = TOL_EIG,
                max_iter: int | None = None) -> float:
    """Perron-Frobenius root of a nonnegative irreducible matrix.

    ``method="dense"`` takes the largest real part of the full spectrum, which
    for such matrices is the spectral radius.  ``method="power"`` runs shifted
    power iteration and falls back to the dense solver when it stalls;
    ``method="power-strict"`` raises :class:`ConvergenceError` instead.
    """
    if C.shape == (1, 1):
        return float(C[0, 0])
    if method == "dense":
        return float(np.max(np.linalg.eigvals(C).real))
    if method not in ("power", "power-strict"):
        raise ValueError(f"unknown method {method!r}")
    cap = iteration_cap(100_000) if max_iter is None else max_iter
    rho, vec, its, ok = kernels.perron_power(np.ascontiguousarray(C, dtype=float), tol, cap, 1.0)
    if ok:
        return float(rho)
    if method == "power":
        return float(np.max(np.linalg.eigvals(C).real))
    raise ConvergenceError(
        "power iteration did not converge", iterations=its, estimate=rho, vector=vec
    )


def chi(model: QbdModel, z1: float, z2: float, method: str = "dense") -> float:
    """Perron-Frobenius eigenvalue of C(z1, z2)."""
    return perron_root(c_matrix(model, z1, z2), method=method)


def _chi_s(model: QbdModel, s1: float, s2: float) -> float:
    if abs(s1) > _S_LIMIT or abs(s2) > _S_LIMIT:
        return math.inf
    return chi(model, math.exp(s1), math.exp(s2))


# -- one-dimensional convex search --------------------------------------------------


def _bracket_min(f, x0: float, step: float = 0.5):
    """Return a < b < c with f(b) <= min(f(a), f(c)) for a convex f."""
    fb = f(x0)
    b = x0
    fa_probe = f(x0 - step)
    fc_probe = f(x0 + step)
    if fa_probe >= fb and fc_probe >= fb:
        return (x0 - step, fa_probe), (b, fb), (x0 + step, fc_probe)
    direction = 1.0 if fc_probe < fa_probe else -1.0
    a, fa = b, fb
    b, fb = x0 + direction * step, min(fa_probe, fc_probe)
    h = step
    for _ in range(MAX_DOUBLINGS):
        h *= 2.0
        c = b + direction * h
        fc = f(c)
        if fc >= fb:
            if direction < 0:
                return (c, fc), (b, fb), (a, fa)
            return (a, fa), (b, fb), (c, fc)
        a, fa, b, fb = b, fb, c, fc
    raise ConvergenceError("could not bracket the minimum of chi", last=b, value=fb)


def _golden_min(f, lo, mid, hi, xtol: float):
    """Golden-section search on a bracket; returns (argmin, min)."""
    a, b = lo[0], hi[0]
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    best = min((mid[1], mid[0]), (f1, x1), (f2, x2))
    while b - a > xtol * max(1.0, abs(x1)):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
            best = min(best, (f1, x1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
            best = min(best, (f2, x2))
    return best[1], best[0]


def _bracket_root(f, inside: float, f_in: float, outside: float, f_out: float,
                  xtol: float = 1e-15, max_iter: int = 300):
    """Illinois-safeguarded bisection for f(inside) <= 0 < f(outside).

    Returns the final (inside, outside) pair; the sign invariant is kept.
    An exact zero collapses the pair onto it.
    """
    a, fa, b, fb = inside, f_in, outside, f_out
    side = 0
    for _ in range(max_iter):
        if abs(b - a) <= xtol * max(1.0, abs(a)) or fa == 0.0:
            break
        x = b - fb * (b - a) / (fb - fa)
        # keep the step inside the middle 98% of the bracket
        lo, hi = min(a, b), max(a, b)
        margin = 0.01 * (hi - lo)
        if not (lo + margin < x < hi - margin) or not math.isfinite(x):
            x = 0.5 * (a + b)
        fx = f(x)
        if fx <= 0.0:
            a, fa = x, fx
            if side == -1:
                fb *= 0.5
            side = -1
        else:
            b, fb = x, fx
            if side == 1:
                fa *= 0.5
            side = 1
    if fa == 0.0:
        return a, a
    return a, b


# -- branch equations ---------------------------------------------------------------


def min_chi_2(model: QbdModel, z1: float, start: float = 0.0, xtol: float = 1e-10):
    """Minimise s2 -> chi(z1, e^{s2}); returns (s2 at the minimum, minimum)."""
    if not z1 > 0:
        raise DomainError(f"z1 must be positive, got {z1}")
    s1 = math.log(z1)

    def f(s2):
        return _chi_s(model, s1, s2)

    lo, mid, hi = _bracket_min(f, start)
    return _golden_min(f, lo, mid, hi, xtol)


def min_chi_1(model: QbdModel, z2: float, start: float = 0.0, xtol: float = 1e-10):
    """Minimise s1 -> chi(e^{s1}, z2); returns (s1 at the minimum, minimum)."""
    return min_chi_2(model.transposed, z2, start, xtol)


def _expand_to_positive(f, x0: float, direction: float):
    h = 0.25
    for _ in range(MAX_DOUBLINGS):
        x = x0 + direction * h
        fx = f(x)
        if fx > 0:
            return x, fx
        h *= 2.0
    raise ConvergenceError("bracket expansion failed; chi appears bounded", last=x)


def branch_roots_2(model: QbdModel, z1: float, tol_root: float = TOL_ROOT) -> BranchRoots:
    """Lower and upper solutions zeta of chi(z1, zeta) = 1."""
    s_min, m = min_chi_2(model, z1)
    if m > 1.0 + TANGENT_CHI:
        return BranchRoots(RootKind.NO_ROOT)
    if m >= 1.0:
        z = math.exp(s_min)
        return BranchRoots(RootKind.TANGENT, z, z)
    s1 = math.log(z1)

    def g(s2):
        return _chi_s(model, s1, s2) - 1.0

    xtol = 1e-12 * tol_root / TOL_ROOT
    ends = []
    for direction in (-1.0, 1.0):
        out, f_out = _expand_to_positive(g, s_min, direction)
        a, b = _bracket_root(g, s_min, m - 1.0, out, f_out, xtol=xtol)
        ends.append(0.5 * (a + b))
    lower, upper = math.exp(ends[0]), math.exp(ends[1])
    if upper - lower < TANGENT_GAP:
        mid = math.sqrt(lower * upper)
        return BranchRoots(RootKind.TANGENT, mid, mid)
    return BranchRoots(RootKind.TWO_ROOTS, lower, upper)


def branch_roots_1(model: QbdModel, z2: float, tol_root: float = TOL_ROOT) -> BranchRoots:
    """Lower and upper solutions zeta of chi(zeta, z2) = 1."""
    return branch_roots_2(model.transposed, z2, tol_root)


def _extreme_s1(model: QbdModel, direction: float) -> float:
    """Extreme s1 of the unit level set in ``direction`` (+1 upper, -1 lower)."""
    warm = [0.0]

    def g(s1):
        s2, m = min_chi_2(model, math.exp(s1), start=warm[0])
        warm[0] = s2
        return m - 1.0

    g0 = g(0.0)
    inside, f_in = 0.0, min(g0, 0.0)
    h = 0.5
    for _ in range(MAX_DOUBLINGS):
        x = direction * h
        if abs(x) > _S_LIMIT:
            break
        warm[0] = 0.0
        fx = g(x)
        if fx > 0:
            a, _ = _bracket_root(g, inside, f_in, x, fx)
            return a
        inside, f_in = x, fx
        h *= 2.0
    raise ConvergenceError(
        "extreme point bracket expansion failed; the model looks degenerate",
        last=direction * h,
    )


def extreme_points(model: QbdModel) -> SpectralSummary:
    """Lower and upper extremes of the unit level set of chi along both axes."""
    swapped = model.transposed
    return SpectralSummary(
        z1_min=math.exp(_extreme_s1(model, -1.0)),
        z1_max=math.exp(_extreme_s1(model, 1.0)),
        z2_min=math.exp(_extreme_s1(swapped, -1.0)),
        z2_max=math.exp(_extreme_s1(swapped, 1.0)),
    )


def kernel_det(model: QbdModel, z, w):
    """det L(z, w) with L(z, w) = z w (C(z, w) - I); complex arguments allowed."""
    if z == 0 or w == 0:
        raise DomainError("kernel_det needs nonzero z and w")
    pz = np.array([1.0, z, z * z])
    pw = np.array([1.0, w, w * w])
    L = np.tensordot(np.outer(pz, pw), model.A, axes=([0, 1], [0, 1]))
    L = L - z * w * np.eye(model.s0)
    return np.linalg.det(L)
