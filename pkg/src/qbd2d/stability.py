"""Induced-chain stationary vectors, mean drift vectors and the stability verdict."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import PreconditionError
from .model import QbdModel
from .qbd_core import qbd_stationary, stationary_vector

__all__ = ["Verdict", "DriftReport", "pi_star", "drifts", "face_drift"]

# drifts this close to zero are treated as zero
DRIFT_ZERO = 1e-12


class Verdict(str, Enum):
    POSITIVE_RECURRENT = "PositiveRecurrent"
    TRANSIENT = "Transient"
    OUTSIDE_ASSUMPTION = "OutsideAssumption"


@dataclass(frozen=True)
class DriftReport:
    pi_star: np.ndarray
    a12: tuple[float, float]
    a1_1: float | None
    a2_2: float | None
    verdict: Verdict

    def to_dict(self) -> dict:
        return {
            "pi_star": [float(x) for x in self.pi_star],
            "a12": [float(self.a12[0]), float(self.a12[1])],
            "a1_1": self.a1_1,
            "a2_2": self.a2_2,
            "verdict": self.verdict.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DriftReport":
        return cls(
            pi_star=np.asarray(d["pi_star"], dtype=float),
            a12=(float(d["a12"][0]), float(d["a12"][1])),
            a1_1=d["a1_1"],
            a2_2=d["a2_2"],
            verdict=Verdict(d["verdict"]),
        )


def pi_star(model: QbdModel) -> np.ndarray:
    """Stationary probability vector of A_{*,*}."""
    P = model.a_star
    n_comp, _ = connected_components(P > 0, directed=True, connection="strong")
    if n_comp > 1:
        raise PreconditionError("A_{*,*} is reducible; its stationary vector is not unique")
    return stationary_vector(P)


def _interior(model: QbdModel, pi: np.ndarray) -> tuple[float, float]:
    a1 = pi @ (model.a_row(1) - model.a_row(-1)).sum(axis=1)
    a2 = pi @ (model.a_col(1) - model.a_col(-1)).sum(axis=1)
    return float(a1), float(a2)


def face_drift(model: QbdModel, face: int) -> float:
    """x1-drift of the chain with only the x1-axis boundary kept (face 1), or
    the x2-drift of its mirror image (face 2)."""
    m = model if face == 1 else model.transposed
    st = qbd_stationary(face, model)
    boundary = (m.A1[2, 0] + m.A1[2, 1] - m.A1[0, 0] - m.A1[0, 1]).sum(axis=1)
    interior = (m.a_row(1) - m.a_row(-1)).sum(axis=1)
    return float(st.pi0 @ boundary + st.tail_sum() @ interior)


def _sign(x: float) -> int:
    if abs(x) <= DRIFT_ZERO:
        return 0
    return 1 if x > 0 else -1


def _verdict(a1: float, a2: float, a1_1: float | None, a2_2: float | None) -> Verdict:
    s1, s2 = _sign(a1), _sign(a2)
    if s1 == 0 or s2 == 0 or (s1 > 0 and s2 > 0):
        return Verdict.OUTSIDE_ASSUMPTION
    needed = []
    if s2 < 0:
        needed.append(a1_1)
    if s1 < 0:
        needed.append(a2_2)
    signs = [_sign(x) for x in needed]
    if all(s < 0 for s in signs):
        return Verdict.POSITIVE_RECURRENT
    if any(s > 0 for s in signs):
        return Verdict.TRANSIENT
    return Verdict.OUTSIDE_ASSUMPTION


def drifts(model: QbdModel) -> DriftReport:
    """Mean drifts of the three induced chains and the resulting verdict.

    ``a1_1`` exists only when a2 < 0 and ``a2_2`` only when a1 < 0.
    """
    pi = pi_star(model)
    a1, a2 = _interior(model, pi)
    a1_1 = face_drift(model, 1) if _sign(a2) < 0 else None
    a2_2 = face_drift(model, 2) if _sign(a1) < 0 else None
    return DriftReport(pi_star=pi, a12=(a1, a2), a1_1=a1_1, a2_2=a2_2,
                       verdict=_verdict(a1, a2, a1_1, a2_2))
