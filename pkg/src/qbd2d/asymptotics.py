"""Critical points on the unit curve of chi, configuration type, decay rates and
the form class of the exact tail asymptotics along each axis."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ClassificationError, ConvergenceError
from .model import QbdModel
from .qbd_core import TOL, solve_axis1
from .spectral import RootKind, SpectralSummary, branch_roots_2, extreme_points, perron_root

__all__ = [
    "ConfigType",
    "FormTag",
    "FormClass",
    "CriticalPoints",
    "AsymptoticsReport",
    "psi1",
    "psi2",
    "critical_points",
    "classify_type",
    "decay_rates",
    "form_classes",
    "psi_sign",
    "analyze",
]

EQ_TOL = 1e-8
# psi at an extreme point comes from a kernel at the tangency, so its sign
# decision uses at least this band
PSI_BAND = 1e-6
SCAN_POINTS = 33
SCAN_JUMP = 0.2


class ConfigType(str, Enum):
    I = "I"
    II = "II"
    III = "III"


class FormTag(str, Enum):
    PURE_GEOMETRIC = "PureGeometric"
    POLY_HALF_ODD_LOWER = "PolyHalfOddLower"  # k^{-(2l-1)/2} z^{-k}
    POLY_HALF_ODD_UPPER = "PolyHalfOddUpper"  # k^{-(2l+1)/2} z^{-k}
    LINEAR_TIMES_GEOMETRIC = "LinearTimesGeometric"  # k r^{-k}
    PLAIN_AT_BRANCH = "PlainAtBranch"  # z^{-k} at the extreme point
    INVERSE_SQRT = "InverseSqrt"  # k^{-1/2} z^{-k}


@dataclass(frozen=True)
class FormClass:
    tag: FormTag
    rate: float

    def to_dict(self) -> dict:
        return {"tag": self.tag.value, "rate": self.rate}

    @classmethod
    def from_dict(cls, d: dict) -> "FormClass":
        return cls(FormTag(d["tag"]), float(d["rate"]))


@dataclass(frozen=True)
class CriticalPoints:
    """Critical points in log coordinates, plus scan diagnostics.

    ``psi1_at_zmax``/``psi2_at_wmax`` are psi at the upper extreme points.
    ``multiple_crossings`` names the axes whose scan saw psi cross 1 more
    than once; ``max_scan_jump`` is the largest change of psi between
    neighbouring scan points.
    """

    theta1_c: float
    theta2_c: float
    eta1_c: float
    eta2_c: float
    theta2_bar_c: float
    eta1_bar_c: float
    psi1_at_zmax: float = math.nan
    psi2_at_wmax: float = math.nan
    multiple_crossings: tuple[str, ...] = ()
    max_scan_jump: float = 0.0

    _FLOATS = ("theta1_c", "theta2_c", "eta1_c", "eta2_c", "theta2_bar_c", "eta1_bar_c",
               "psi1_at_zmax", "psi2_at_wmax", "max_scan_jump")

    def to_dict(self) -> dict:
        d = {k: float(getattr(self, k)) for k in self._FLOATS}
        d["multiple_crossings"] = list(self.multiple_crossings)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CriticalPoints":
        kw = {k: float(d[k]) for k in cls._FLOATS}
        return cls(multiple_crossings=tuple(d.get("multiple_crossings", ())), **kw)


@dataclass(frozen=True)
class AsymptoticsReport:
    type: ConfigType
    xi: tuple[float, float]
    rates: tuple[float, float]
    psi1_at_zmax: float
    psi2_at_wmax: float
    h1_class: FormClass
    h2_class: FormClass
    equality_flags: tuple[str, ...] = ()
    eq_tol: float = EQ_TOL
    critical: CriticalPoints | None = field(default=None, compare=False)
    extremes: SpectralSummary | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "type": self.type.value,
            "xi": list(self.xi),
            "rates": list(self.rates),
            "psi1_at_zmax": self.psi1_at_zmax,
            "psi2_at_wmax": self.psi2_at_wmax,
            "h1_class": self.h1_class.to_dict(),
            "h2_class": self.h2_class.to_dict(),
            "equality_flags": list(self.equality_flags),
            "eq_tol": self.eq_tol,
        }

    @classmethod
    def from_dict(cls, d: dict, critical=None, extremes=None) -> "AsymptoticsReport":
        return cls(
            type=ConfigType(d["type"]),
            xi=tuple(float(x) for x in d["xi"]),
            rates=tuple(float(x) for x in d["rates"]),
            psi1_at_zmax=float(d["psi1_at_zmax"]),
            psi2_at_wmax=float(d["psi2_at_wmax"]),
            h1_class=FormClass.from_dict(d["h1_class"]),
            h2_class=FormClass.from_dict(d["h2_class"]),
            equality_flags=tuple(d["equality_flags"]),
            eq_tol=float(d["eq_tol"]),
            critical=critical,
            extremes=extremes,
        )


# -- psi -----------------------------------------------------------------------------


def psi1(model: QbdModel, z1: float, tol: float = TOL) -> float:
    """spr(A1_{*,0}(z1) + A1_{*,1}(z1) G1(z1))."""
    k = solve_axis1(model, z1, tol=tol)
    C = model.a1_col_z(0, z1) + model.a1_col_z(1, z1) @ k.G
    return perron_root(C)


def psi2(model: QbdModel, z2: float, tol: float = TOL) -> float:
    """spr(A2_{0,*}(z2) + A2_{1,*}(z2) G2(z2))."""
    return psi1(model.transposed, z2, tol)


# -- critical points -----------------------------------------------------------------


def _last_unit_crossing(f, s_max: float):
    """max{s in [0, s_max]: f(s) <= 1} for a continuous f with f(0) <= 1.

    Returns (s, f(s_max), number of upward crossings seen, largest scan jump).
    """
    grid = np.linspace(0.0, s_max, SCAN_POINTS)
    vals = np.array([f(s) for s in grid])
    jump = float(np.max(np.abs(np.diff(vals))))
    above = vals > 1.0
    above[0] = False  # f(0) <= 1 holds in exact arithmetic
    crossings = int(np.count_nonzero(~above[:-1] & above[1:]))
    if not above[-1]:
        return s_max, float(vals[-1]), crossings, jump
    i = int(np.nonzero(~above)[0][-1])
    a, fa, b, fb = grid[i], min(vals[i] - 1.0, 0.0), grid[i + 1], vals[i + 1] - 1.0
    # Illinois-safeguarded regula falsi keeping f(a) <= 1 < f(b)
    side = 0
    for _ in range(200):
        if b - a <= 1e-14 * max(1.0, abs(a)):
            break
        x = b - fb * (b - a) / (fb - fa)
        if not (a + 0.01 * (b - a) < x < b - 0.01 * (b - a)):
            x = 0.5 * (a + b)
        fx = f(x) - 1.0
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
    return float(a), float(vals[-1]), crossings, jump


def critical_points(model: QbdModel, extremes: SpectralSummary | None = None,
                    tol: float = TOL) -> CriticalPoints:
    """theta^(c), eta^(c) and the companion upper-branch values.

    psi need not be monotone, so a 33-point scan locates its last upward
    crossing of 1, which is then refined by bracketing.
    """
    ep = extremes if extremes is not None else extreme_points(model)
    swapped = model.transposed

    theta1, p1max, n1, j1 = _last_unit_crossing(
        lambda s: psi1(model, math.exp(s), tol), math.log(ep.z1_max))
    eta2, p2max, n2, j2 = _last_unit_crossing(
        lambda s: psi1(swapped, math.exp(s), tol), math.log(ep.z2_max))

    b2 = branch_roots_2(model, math.exp(theta1))
    b1 = branch_roots_2(swapped, math.exp(eta2))
    if b2.kind is RootKind.NO_ROOT or b1.kind is RootKind.NO_ROOT:
        raise ConvergenceError("critical point fell outside the unit curve of chi",
                               theta1=theta1, eta2=eta2)
    if max(j1, j2) >= SCAN_JUMP:
        warnings.warn(f"psi changes by {max(j1, j2):.3g} between scan points; "
                      "the kernel solver may be unstable", RuntimeWarning, stacklevel=2)
    multiple = tuple(name for name, n in (("psi1", n1), ("psi2", n2)) if n > 1)
    return CriticalPoints(
        theta1_c=theta1,
        theta2_c=math.log(b2.lower),
        eta1_c=math.log(b1.lower),
        eta2_c=eta2,
        theta2_bar_c=math.log(b2.upper),
        eta1_bar_c=math.log(b1.upper),
        psi1_at_zmax=p1max,
        psi2_at_wmax=p2max,
        multiple_crossings=multiple,
        max_scan_jump=max(j1, j2),
    )


# -- classification ------------------------------------------------------------------


def _lt(a: float, b: float, tol: float) -> bool:
    return a < b - tol


def classify_type(cp: CriticalPoints, eq_tol: float = EQ_TOL) -> ConfigType:
    """Configuration type; differences within ``eq_tol`` count as equal."""
    eta1_lt_theta1 = _lt(cp.eta1_c, cp.theta1_c, eq_tol)
    theta2_lt_eta2 = _lt(cp.theta2_c, cp.eta2_c, eq_tol)
    if eta1_lt_theta1 and theta2_lt_eta2:
        return ConfigType.I
    if eta1_lt_theta1:
        return ConfigType.II
    if theta2_lt_eta2:
        return ConfigType.III
    raise ClassificationError(
        "critical points fit no configuration type: "
        f"theta=({cp.theta1_c:.6g}, {cp.theta2_c:.6g}), eta=({cp.eta1_c:.6g}, {cp.eta2_c:.6g})"
    )


def decay_rates(cp: CriticalPoints, ctype: ConfigType) -> tuple[float, float, float, float]:
    """(xi1, xi2, r1, r2) for the given configuration type."""
    if ctype is ConfigType.I:
        xi1, xi2 = cp.theta1_c, cp.eta2_c
    elif ctype is ConfigType.II:
        xi1, xi2 = cp.eta1_bar_c, cp.eta2_c
    else:
        xi1, xi2 = cp.theta1_c, cp.theta2_bar_c
    return xi1, xi2, math.exp(xi1), math.exp(xi2)


def _psi_sign(psi: float, band: float) -> int:
    if abs(psi - 1.0) <= band:
        return 0
    return 1 if psi > 1.0 else -1


def psi_sign(psi: float, eq_tol: float = EQ_TOL) -> str:
    """'+', '-' or '=' for psi - 1 at an extreme point, using the widened band."""
    return {1: "+", 0: "=", -1: "-"}[_psi_sign(psi, max(eq_tol, PSI_BAND))]


def _type1_form(psi: float, rate: float, z_max: float, band: float) -> FormClass:
    s = _psi_sign(psi, band)
    if s > 0:
        return FormClass(FormTag.PURE_GEOMETRIC, rate)
    if s == 0:
        return FormClass(FormTag.POLY_HALF_ODD_LOWER, z_max)
    return FormClass(FormTag.POLY_HALF_ODD_UPPER, z_max)


def _boundary_form(equal: bool, psi: float, rate: float, z_max: float, band: float) -> FormClass:
    if not equal:
        return FormClass(FormTag.PURE_GEOMETRIC, rate)
    s = _psi_sign(psi, band)
    if s > 0:
        return FormClass(FormTag.LINEAR_TIMES_GEOMETRIC, rate)
    if s == 0:
        return FormClass(FormTag.PLAIN_AT_BRANCH, z_max)
    return FormClass(FormTag.INVERSE_SQRT, z_max)


def form_classes(extremes: SpectralSummary, cp: CriticalPoints, ctype: ConfigType,
                 eq_tol: float = EQ_TOL) -> tuple[FormClass, FormClass]:
    """Form class of h1 and h2 for the configuration type."""
    _, _, r1, r2 = decay_rates(cp, ctype)
    band = max(eq_tol, PSI_BAND)
    if ctype is ConfigType.I:
        return (_type1_form(cp.psi1_at_zmax, r1, extremes.z1_max, band),
                _type1_form(cp.psi2_at_wmax, r2, extremes.z2_max, band))
    if ctype is ConfigType.II:
        equal = not _lt(cp.eta2_c, cp.theta2_c, eq_tol)
        return (_boundary_form(equal, cp.psi1_at_zmax, r1, extremes.z1_max, band),
                FormClass(FormTag.PURE_GEOMETRIC, r2))
    equal = not _lt(cp.theta1_c, cp.eta1_c, eq_tol)
    return (FormClass(FormTag.PURE_GEOMETRIC, r1),
            _boundary_form(equal, cp.psi2_at_wmax, r2, extremes.z2_max, band))


def _equality_flags(cp: CriticalPoints, ctype: ConfigType, eq_tol: float) -> tuple[str, ...]:
    near = 10.0 * eq_tol
    near_psi = 10.0 * max(eq_tol, PSI_BAND)
    flags = []
    if abs(cp.eta1_c - cp.theta1_c) <= near:
        flags.append("eta1_c~theta1_c")
    if abs(cp.theta2_c - cp.eta2_c) <= near:
        flags.append("theta2_c~eta2_c")
    if ctype is not ConfigType.III and abs(cp.psi1_at_zmax - 1.0) <= near_psi:
        flags.append("psi1(z1_max)~1")
    if ctype is not ConfigType.II and abs(cp.psi2_at_wmax - 1.0) <= near_psi:
        flags.append("psi2(z2_max)~1")
    return tuple(flags)


def analyze(model: QbdModel, eq_tol: float = EQ_TOL,
            extremes: SpectralSummary | None = None, tol: float = TOL) -> AsymptoticsReport:
    """Extremes, critical points, type, rates and form classes in one pass.

    The model is assumed positive recurrent; check ``stability.drifts`` first.
    """
    ep = extremes if extremes is not None else extreme_points(model)
    cp = critical_points(model, ep, tol)
    ctype = classify_type(cp, eq_tol)
    xi1, xi2, r1, r2 = decay_rates(cp, ctype)
    h1, h2 = form_classes(ep, cp, ctype, eq_tol)
    return AsymptoticsReport(
        type=ctype,
        xi=(xi1, xi2),
        rates=(r1, r2),
        psi1_at_zmax=cp.psi1_at_zmax,
        psi2_at_wmax=cp.psi2_at_wmax,
        h1_class=h1,
        h2_class=h2,
        equality_flags=_equality_flags(cp, ctype, eq_tol),
        eq_tol=eq_tol,
        critical=cp,
        extremes=ep,
    )
