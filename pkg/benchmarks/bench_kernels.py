"""Time the compiled kernels against their pure-Python twins.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--K 8] [--N 60]
"""

import argparse
import timeit

import numpy as np
import scipy.sparse as sp

from qbd2d import _kernels_py
from qbd2d.model import LimitedServiceParams, build_limited_service
from qbd2d.oracle import transition_matrix
from qbd2d.spectral import c_matrix

try:
    from qbd2d import _kernels as compiled
except ImportError:
    compiled = None


def gs_operands(model, N):
    P = transition_matrix(model, N).tocoo()
    n = P.shape[0]
    keep = P.row != P.col
    outrate = np.bincount(P.row[keep], weights=P.data[keep], minlength=n)
    PT = sp.csr_matrix((P.data[keep], (P.col[keep], P.row[keep])), shape=(n, n))
    PT.sort_indices()
    return (PT.indptr.astype(np.int64), PT.indices.astype(np.int64),
            np.ascontiguousarray(PT.data), outrate, np.full(n, 1.0 / n))


def cases(model, N):
    z = 1.2
    blocks = (model.a_col_z(-1, z), model.a_col_z(0, z), model.a_col_z(1, z))
    C = c_matrix(model, 1.3, 1.7)
    gs = gs_operands(model, N)
    return {
        "natural_iteration (200 its)": lambda k: k.natural_iteration(*blocks, 0.0, 200),
        "perron_power (tol 1e-13)": lambda k: k.perron_power(C, 1e-13, 100000),
        f"gauss_seidel_sweep (N={N}, {gs[4].size} states)":
            lambda k: k.gauss_seidel_sweep(*gs[:4], gs[4].copy()),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--K", type=int, default=8, help="limited-service parameter")
    ap.add_argument("--N", type=int, default=60, help="oracle truncation level")
    args = ap.parse_args()
    if compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")

    model = build_limited_service(LimitedServiceParams(args.K, 0.3, 0.3, 1.0, 1.0))
    print(f"{'kernel':<44}{'compiled':>12}{'python':>12}{'speedup':>10}")
    for name, call in cases(model, args.N).items():
        fast = min(timeit.repeat(lambda: call(compiled), number=1, repeat=args.repeat))
        slow = min(timeit.repeat(lambda: call(_kernels_py), number=1, repeat=args.repeat))
        print(f"{name:<44}{fast * 1e3:>10.3f}ms{slow * 1e3:>10.3f}ms{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
