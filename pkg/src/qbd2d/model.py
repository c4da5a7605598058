"""Block description of a discrete-time 2d-QBD process.

A model is held as four stacked block families.  Phases are 0-indexed and
the level increments ``i, j`` are mapped to array positions:

=======  ==================  ====================
family   array shape         position of (i, j)
=======  ==================  ====================
``A``    (3, 3, s0, s0)      ``A[i + 1, j + 1]``
``A1``   (3, 2, s0, s0)      ``A1[i + 1, j]``
``A2``   (2, 3, s0, s0)      ``A2[i, j + 1]``
``A0``   (2, 2, s0, s0)      ``A0[i, j]``
=======  ==================  ====================

``A`` drives the interior, ``A1`` the x1-axis (x2 = 0), ``A2`` the x2-axis
(x1 = 0) and ``A0`` the origin.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

__all__ = [
    "QbdModel",
    "LimitedServiceParams",
    "ModelFormatError",
    "validate",
    "build_limited_service",
    "load_model",
    "save_model",
    "read_model",
    "write_model",
    "permute_phases",
]

STOCHASTIC_TOL = 1e-12

_SHAPES = {"A": (3, 3), "A1": (3, 2), "A2": (2, 3), "A0": (2, 2)}
# offsets converting array position -> increment, per family and axis
_OFFSETS = {"A": (-1, -1), "A1": (-1, 0), "A2": (0, -1), "A0": (0, 0)}


class ModelFormatError(ValueError):
    """Malformed serialized model; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class QbdModel:
    """Transition blocks of an irreducible 2d-QBD process."""

    A: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    A0: np.ndarray

    def __post_init__(self):
        s0 = None
        for name, (ni, nj) in _SHAPES.items():
            arr = _frozen(getattr(self, name))
            if arr.ndim != 4 or arr.shape[:2] != (ni, nj) or arr.shape[2] != arr.shape[3]:
                raise ValueError(
                    f"{name} must have shape ({ni}, {nj}, s0, s0), got {arr.shape}"
                )
            if s0 is None:
                s0 = arr.shape[2]
            elif arr.shape[2] != s0:
                raise ValueError(f"{name} has phase dimension {arr.shape[2]}, expected {s0}")
            object.__setattr__(self, name, arr)
        if s0 < 1:
            raise ValueError("s0 must be positive")

    @property
    def s0(self) -> int:
        return self.A.shape[2]

    def __eq__(self, other):
        if not isinstance(other, QbdModel):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, n), getattr(other, n)) for n in _SHAPES
        )

    def __hash__(self):
        return hash(tuple(getattr(self, n).tobytes() for n in _SHAPES))

    # -- block access by increments -------------------------------------------------
    def a(self, i: int, j: int) -> np.ndarray:
        return self.A[i + 1, j + 1]

    def a1(self, i: int, j: int) -> np.ndarray:
        return self.A1[i + 1, j]

    def a2(self, i: int, j: int) -> np.ndarray:
        return self.A2[i, j + 1]

    def a0(self, i: int, j: int) -> np.ndarray:
        return self.A0[i, j]

    # -- aggregates -------------------------------------------------------------------
    @property
    def a_star(self) -> np.ndarray:
        """A_{*,*}, the phase transition matrix of the boundary-free chain."""
        return self.A.sum(axis=(0, 1))

    def a_row(self, i: int) -> np.ndarray:
        """A_{i,*} = sum_j A_{i,j}."""
        return self.A[i + 1].sum(axis=0)

    def a_col(self, j: int) -> np.ndarray:
        """A_{*,j} = sum_i A_{i,j}."""
        return self.A[:, j + 1].sum(axis=0)

    def a_col_z(self, j: int, z) -> np.ndarray:
        """A_{*,j}(z) = sum_i A_{i,j} z^i."""
        return self.A[0, j + 1] / z + self.A[1, j + 1] + self.A[2, j + 1] * z

    def a_row_z(self, i: int, w) -> np.ndarray:
        """A_{i,*}(w) = sum_j A_{i,j} w^j."""
        return self.A[i + 1, 0] / w + self.A[i + 1, 1] + self.A[i + 1, 2] * w

    def a1_col_z(self, j: int, z) -> np.ndarray:
        """A^{(1)}_{*,j}(z) = sum_i A^{(1)}_{i,j} z^i, j in {0, 1}."""
        return self.A1[0, j] / z + self.A1[1, j] + self.A1[2, j] * z

    def a2_row_z(self, i: int, w) -> np.ndarray:
        """A^{(2)}_{i,*}(w) = sum_j A^{(2)}_{i,j} w^j, i in {0, 1}."""
        return self.A2[i, 0] / w + self.A2[i, 1] + self.A2[i, 2] * w

    @cached_property
    def transposed(self) -> "QbdModel":
        """The same process with the roles of x1 and x2 exchanged."""
        return QbdModel(
            A=self.A.transpose(1, 0, 2, 3),
            A1=self.A2.transpose(1, 0, 2, 3),
            A2=self.A1.transpose(1, 0, 2, 3),
            A0=self.A0.transpose(1, 0, 2, 3),
        )


@dataclass(frozen=True)
class LimitedServiceParams:
    """Rates of the (1,K)-limited service polling queue."""

    K: int
    lambda1: float
    lambda2: float
    mu1: float
    mu2: float

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K!r}")
        for name in ("lambda1", "lambda2", "mu1", "mu2"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive, got {value!r}")

    @property
    def nu(self) -> float:
        """Uniformization constant lambda1 + lambda2 + mu1 + mu2."""
        return self.lambda1 + self.lambda2 + self.mu1 + self.mu2


def build_limited_service(p: LimitedServiceParams) -> QbdModel:
    """Discrete-time (1,K)-limited service model obtained by uniformization.

    Phase 0 means the server attends queue 1; phase ``j >= 1`` means it is
    serving the ``(K - j + 1)``-th class-2 customer of the current visit.
    """
    K = int(p.K)
    n = K + 1
    nu = p.nu
    lam = p.lambda1 + p.lambda2
    eye = np.eye(n)

    A = np.zeros((3, 3, n, n))
    A[2, 1] = p.lambda1 / nu * eye  # A_{1,0}
    A[1, 2] = p.lambda2 / nu * eye  # A_{0,1}
    A[0, 1, 0, K] = p.mu1 / nu  # A_{-1,0}: queue-1 completion starts a queue-2 visit
    A[1, 0] = p.mu2 / nu * np.eye(n, k=-1)  # A_{0,-1}
    diag = np.full(n, lam + p.mu2)
    diag[0] = lam + p.mu1
    A[1, 1] = eye - np.diag(diag) / nu  # A_{0,0}

    A1 = np.zeros((3, 2, n, n))
    A1[2, 0] = p.lambda1 / nu * eye  # A^{(1)}_{1,0}
    A1[1, 0] = (1.0 - (lam + p.mu1) / nu) * eye  # A^{(1)}_{0,0}
    A1[1, 1, :, 0] = p.lambda2 / nu  # A^{(1)}_{0,1}
    A1[0, 0] = p.mu1 / (nu * n) * np.ones((n, n))  # A^{(1)}_{-1,0}

    A2 = np.zeros((2, 3, n, n))
    A2[0, 2] = p.lambda2 / nu * eye  # A^{(2)}_{0,1}
    A2[0, 1] = (1.0 - (lam + p.mu2) / nu) * eye  # A^{(2)}_{0,0}
    up = np.eye(n)
    up[0] = 0.0
    up[0, 1] = 1.0
    A2[1, 1] = p.lambda1 / nu * up  # A^{(2)}_{1,0}
    down = np.zeros((n, n))
    down[0, K] = down[1, K] = 1.0
    if K >= 2:
        down[2, 0] = down[2, 1] = 0.5
    for j in range(3, n):
        down[j, j - 1] = 1.0
    A2[0, 0] = p.mu2 / nu * down  # A^{(2)}_{0,-1}

    A0 = np.zeros((2, 2, n, n))
    A0[1, 0] = p.lambda1 / nu * eye  # A^{(0)}_{1,0}
    A0[0, 0] = (1.0 - lam / nu) * eye  # A^{(0)}_{0,0}
    A0[0, 1, :, K] = p.lambda2 / nu  # A^{(0)}_{0,1}
    return QbdModel(A=A, A1=A1, A2=A2, A0=A0)


def permute_phases(model: QbdModel, perm: Iterable[int]) -> QbdModel:
    """Relabel phases so that new phase ``k`` is old phase ``perm[k]``."""
    perm = np.asarray(list(perm), dtype=int)
    if sorted(perm.tolist()) != list(range(model.s0)):
        raise ValueError("perm must be a permutation of range(s0)")
    ix = np.ix_(perm, perm)
    return QbdModel(
        **{name: getattr(model, name)[..., ix[0], ix[1]] for name in _SHAPES}
    )


# -- validation ---------------------------------------------------------------------


def _period(adj: np.ndarray) -> int:
    """Period of a strongly connected digraph given by a boolean adjacency."""
    n = adj.shape[0]
    level = np.full(n, -1)
    level[0] = 0
    queue = deque([0])
    g = 0
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u]):
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = np.gcd(g, level[u] + 1 - level[v])
    return int(g)


def _window_graph(model: QbdModel, kind: str, radius: int = 2):
    """Transition graph of a boundary-removed chain on a 5x5 lattice window.

    ``kind`` is ``"12"`` (no boundaries), ``"1"`` (x2 >= 0 kept) or ``"2"``
    (x1 >= 0 kept).  Returns the adjacency and the indices of the centre cells.
    """
    s0 = model.s0
    span = range(-radius, radius + 1)
    half = range(0, 2 * radius + 1)
    xs = half if kind == "2" else span
    ys = half if kind == "1" else span
    cells = [(x, y) for x in xs for y in ys]
    index = {c: k for k, c in enumerate(cells)}
    rows, cols = [], []
    for (x, y), k in index.items():
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if kind == "1" and y == 0:
                    block = model.a1(di, dj) if dj >= 0 else None
                elif kind == "2" and x == 0:
                    block = model.a2(di, dj) if di >= 0 else None
                else:
                    block = model.a(di, dj)
                target = index.get((x + di, y + dj))
                if block is None or target is None:
                    continue
                src, dst = np.nonzero(block > 0)
                rows.extend(k * s0 + src)
                cols.extend(target * s0 + dst)
    n = len(cells) * s0
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    inner = [k for (x, y), k in index.items() if abs(x) <= 1 and abs(y) <= 1]
    return adj, inner


def validate(model: QbdModel) -> list[str]:
    """Return the list of violated model checks (empty when the model is fine).

    The boundary-removed chains can only be inspected on a finite window, so
    their irreducibility check is a heuristic: within a 5x5 window, some
    state of the 3x3 centre block must be reachable from every state of that
    block.  Phases that the chain never enters (transient boundary phases)
    are therefore tolerated, while two closed classes are caught.
    """
    problems: list[str] = []
    for name in _SHAPES:
        arr = getattr(model, name)
        di0, dj0 = _OFFSETS[name]
        for a in range(arr.shape[0]):
            for b in range(arr.shape[1]):
                if not np.all(np.isfinite(arr[a, b])):
                    problems.append(f"non-finite entry, family {name}, block ({a + di0},{b + dj0})")
                elif np.any(arr[a, b] < 0):
                    problems.append(f"negative entry, family {name}, block ({a + di0},{b + dj0})")
        sums = arr.sum(axis=(0, 1)).sum(axis=1)
        for row in np.flatnonzero(np.abs(sums - 1.0) > STOCHASTIC_TOL):
            problems.append(f"row-sum violation, family {name}, row {row}")
    if problems:
        return problems

    adj = model.a_star > 0
    ncomp, _ = connected_components(csr_matrix(adj), directed=True, connection="strong")
    if ncomp > 1:
        problems.append("A_{*,*} reducible")
    elif _period(adj) != 1:
        problems.append("A_{*,*} periodic")

    labels = {"12": "Y~", "1": "Y~(1)", "2": "Y~(2)"}
    s0 = model.s0
    for kind, label in labels.items():
        graph, inner = _window_graph(model, kind)
        states = np.array([c * s0 + j for c in inner for j in range(s0)])
        reach = np.zeros((len(states), len(states)), dtype=bool)
        for row, u in enumerate(states):
            seen = np.zeros(graph.shape[0], dtype=bool)
            seen[breadth_first_order(graph, u, return_predecessors=False)] = True
            reach[row] = seen[states]
        np.fill_diagonal(reach, True)
        if not reach.all(axis=0).any():
            problems.append(
                f"heuristic: boundary-removed chain {label} not irreducible on 5x5 window"
            )
    return problems


# -- serialization ------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".16e")


def save_model(model: QbdModel) -> str:
    """Serialize to JSON text; every number carries 17 significant digits."""

    def matrix(m):
        return "[" + ", ".join("[" + ", ".join(_fmt(x) for x in row) + "]" for row in m) + "]"

    parts = [f'  "s0": {model.s0}']
    for name in _SHAPES:
        arr = getattr(model, name)
        outer = []
        for a in range(arr.shape[0]):
            outer.append("[" + ", ".join(matrix(arr[a, b]) for b in range(arr.shape[1])) + "]")
        parts.append(f'  "{name}": [\n    ' + ",\n    ".join(outer) + "\n  ]")
    return "{\n" + ",\n".join(parts) + "\n}\n"


def load_model(text: str) -> QbdModel:
    """Parse JSON model text, raising :class:`ModelFormatError` on bad shape."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError("$", f"invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ModelFormatError("$", "top level must be an object")
    s0 = data.get("s0")
    if isinstance(s0, bool) or not isinstance(s0, int) or s0 < 1:
        raise ModelFormatError("s0", "must be a positive integer")
    families = {}
    for name, (ni, nj) in _SHAPES.items():
        if name not in data:
            raise ModelFormatError(name, "missing")
        outer = data[name]
        if not isinstance(outer, list) or len(outer) != ni:
            raise ModelFormatError(name, f"expected {ni} block rows")
        arr = np.empty((ni, nj, s0, s0))
        for a, blocks in enumerate(outer):
            if not isinstance(blocks, list) or len(blocks) != nj:
                raise ModelFormatError(f"{name}[{a}]", f"expected {nj} blocks")
            for b, m in enumerate(blocks):
                path = f"{name}[{a}][{b}]"
                if not isinstance(m, list) or any(not isinstance(r, list) for r in m):
                    raise ModelFormatError(path, "block must be an array of arrays")
                if len(m) != s0 or any(len(r) != s0 for r in m):
                    raise ModelFormatError(path, f"dimension mismatch, expected {s0}x{s0}")
                try:
                    arr[a, b] = np.array(m, dtype=float)
                except (TypeError, ValueError) as exc:
                    raise ModelFormatError(path, "entries must be numbers") from exc
        families[name] = arr
    return QbdModel(**families)


def read_model(path) -> QbdModel:
    with open(path, encoding="utf-8") as fh:
        return load_model(fh.read())


def write_model(model: QbdModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(save_model(model))
