"""Pure-Python versions of the compiled kernels.

Signatures and results match ``_kernels.pyx`` up to floating-point rounding.
"""

import numpy as np


def natural_iteration(down, local, up, tol, max_iter, blowup=1e12):
    down = np.ascontiguousarray(down, dtype=float)
    local = np.ascontiguousarray(local, dtype=float)
    up = np.ascontiguousarray(up, dtype=float)
    X = np.zeros_like(down)
    status = 1
    it = 0
    while it < max_iter:
        it += 1
        Y = down + (local + up @ X) @ X
        diff = np.max(np.abs(Y - X))
        X = Y
        if X.max() > blowup:
            status = 2
            break
        if diff < tol:
            status = 0
            break
    return X, it, status


def perron_power(C, tol, max_iter, shift=1.0):
    C = np.ascontiguousarray(C, dtype=float)
    n = C.shape[0]
    x = np.full(n, 1.0 / n)
    lo = hi = 0.0
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        y = C @ x + shift * x
        pos = x > 0
        ratios = y[pos] / x[pos]
        hi = ratios.max()
        lo = ratios.min() if pos.all() else 0.0
        x = y / y.sum()
        if hi - lo <= tol * hi:
            converged = True
            break
    return 0.5 * (lo + hi) - shift, x, it, converged


def gauss_seidel_sweep(indptr, indices, data, outrate, x):
    ip = indptr.tolist()
    ix = indices.tolist()
    dv = data.tolist()
    xs = x.tolist()
    worst = 0.0
    for i in range(len(xs)):
        acc = 0.0
        for p in range(ip[i], ip[i + 1]):
            acc += dv[p] * xs[ix[p]]
        new = acc / outrate[i]
        old = xs[i]
        xs[i] = new
        if new > 0.0:
            rel = abs(new - old) / new
            if rel > worst:
                worst = rel
    x[:] = xs
    return worst
