"""Hot inner loops, each in two flavours.

Every kernel has an explicit-loop implementation that is compiled with
``numba.njit`` when numba is importable, and a vectorized pure-numpy
implementation.  The active pair is chosen once at import time:

* ``KACZFACT_JIT=0`` forces the numpy path;
* otherwise numba is used when it imports cleanly.

``BACKEND`` reports the choice.  Both flavours are always reachable through
``LOOP_KERNELS`` / ``NUMPY_KERNELS`` so tests and benchmarks can compare them.
"""
import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False


def _jit_requested():
    return os.environ.get("KACZFACT_JIT", "1").strip().lower() not in ("0", "false", "no", "off")


def _njit(fn=None, **opts):
    if fn is None:
        return lambda f: _njit(f, **opts)
    if HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True, **opts)(fn)
    return fn


# --------------------------------------------------------------------------
# loop implementations (numba targets)


@_njit
def _csr_gather_loop(indptr, indices, data, row, cols):
    lo = indptr[row]
    hi = indptr[row + 1]
    out = np.zeros(cols.shape[0])
    for s in range(cols.shape[0]):
        c = cols[s]
        a = lo
        b = hi
        while a < b:
            mid = (a + b) // 2
            if indices[mid] < c:
                a = mid + 1
            else:
                b = mid
        if a < hi and indices[a] == c:
            out[s] = data[a]
    return out


# fastmath only reorders the sum of squares so it can vectorize
@_njit(fastmath=True)
def _panel_residual_sq_loop(indptr, indices, data, row0, D):
    nrows, ncols = D.shape
    for r in range(nrows):
        for p in range(indptr[row0 + r], indptr[row0 + r + 1]):
            D[r, indices[p]] -= data[p]
    total = 0.0
    for r in range(nrows):
        for c in range(ncols):
            total += D[r, c] * D[r, c]
    return total


@_njit
def _rk_sweep_loop(M, b, y, order, eps):
    y = y.copy()
    p, q = M.shape
    nsteps = order.shape[0]
    for s in range(nsteps):
        t = order[s]
        nrm = 0.0
        dot = 0.0
        for c in range(q):
            nrm += M[t, c] * M[t, c]
            dot += M[t, c] * y[c]
        if nrm == 0.0:
            continue
        coef = (b[t] - dot) / nrm
        for c in range(q):
            y[c] += coef * M[t, c]
        if eps > 0.0 and s < nsteps - 1:
            res = 0.0
            for i in range(p):
                acc = -b[i]
                for c in range(q):
                    acc += M[i, c] * y[c]
                res += acc * acc
            if np.sqrt(res) < eps:
                return y, s + 1
    return y, nsteps


@_njit
def _weighted_draw_loop(weights, uniforms):
    w = weights.copy()
    n = w.shape[0]
    r = uniforms.shape[0]
    out = np.empty(r, dtype=np.int64)
    cs = np.empty(n)
    for s in range(r):
        acc = 0.0
        for j in range(n):
            acc += w[j]
            cs[j] = acc
        target = uniforms[s] * cs[n - 1]
        pick = n
        for j in range(n):
            if cs[j] > target:
                pick = j
                break
        if pick == n:
            # rounding pushed target onto the total; take the last live weight
            pick = n - 1
            while w[pick] <= 0.0:
                pick -= 1
        out[s] = pick
        w[pick] = 0.0
    return out


# --------------------------------------------------------------------------
# vectorized numpy implementations


def _csr_gather_numpy(indptr, indices, data, row, cols):
    lo, hi = indptr[row], indptr[row + 1]
    rc = indices[lo:hi]
    out = np.zeros(cols.shape[0])
    if hi == lo:
        return out
    pos = np.searchsorted(rc, cols)
    pos = np.minimum(pos, hi - lo - 1)
    hit = rc[pos] == cols
    out[hit] = data[lo:hi][pos[hit]]
    return out


def _panel_residual_sq_numpy(indptr, indices, data, row0, D):
    nrows = D.shape[0]
    lo, hi = indptr[row0], indptr[row0 + nrows]
    counts = np.diff(indptr[row0:row0 + nrows + 1])
    rr = np.repeat(np.arange(nrows), counts)
    D[rr, indices[lo:hi]] -= data[lo:hi]
    return float(np.einsum("ij,ij->", D, D))


def _rk_sweep_numpy(M, b, y, order, eps):
    y = y.copy()
    nsteps = order.shape[0]
    for s in range(nsteps):
        row = M[order[s]]
        nrm = row @ row
        if nrm == 0.0:
            continue
        y += ((b[order[s]] - row @ y) / nrm) * row
        if eps > 0.0 and s < nsteps - 1 and np.linalg.norm(M @ y - b) < eps:
            return y, s + 1
    return y, nsteps


def _weighted_draw_numpy(weights, uniforms):
    w = weights.copy()
    n = w.shape[0]
    out = np.empty(uniforms.shape[0], dtype=np.int64)
    for s, u in enumerate(uniforms):
        cs = np.cumsum(w)
        pick = int(np.searchsorted(cs, u * cs[-1], side="right"))
        if pick == n:
            pick = int(np.flatnonzero(w > 0.0)[-1])
        out[s] = pick
        w[pick] = 0.0
    return out


LOOP_KERNELS = {
    "csr_gather": _csr_gather_loop,
    "panel_residual_sq": _panel_residual_sq_loop,
    "rk_sweep": _rk_sweep_loop,
    "weighted_draw": _weighted_draw_loop,
}

NUMPY_KERNELS = {
    "csr_gather": _csr_gather_numpy,
    "panel_residual_sq": _panel_residual_sq_numpy,
    "rk_sweep": _rk_sweep_numpy,
    "weighted_draw": _weighted_draw_numpy,
}

BACKEND = "numba" if (HAVE_NUMBA and _jit_requested()) else "numpy"
_ACTIVE = LOOP_KERNELS if BACKEND == "numba" else NUMPY_KERNELS


def csr_gather(indptr, indices, data, row, cols):
    """Entries ``X[row, cols]`` of a CSR matrix with sorted column indices."""
    return _ACTIVE["csr_gather"](indptr, indices, data, row, np.ascontiguousarray(cols, dtype=np.int64))


def panel_residual_sq(indptr, indices, data, row0, D):
    """Subtract rows ``row0:row0+len(D)`` of the sparse matrix from ``D`` in
    place and return the squared Frobenius norm of the difference."""
    return float(_ACTIVE["panel_residual_sq"](indptr, indices, data, row0, D))


def rk_sweep(M, b, y, order, eps=0.0):
    """Classical single-row Kaczmarz projections over ``order``.

    Zero rows are skipped.  When ``eps > 0`` the sweep stops as soon as
    ``||M y - b|| < eps`` (checked between steps).  Returns ``(y, steps)``.
    """
    y, steps = _ACTIVE["rk_sweep"](
        np.ascontiguousarray(M, dtype=np.float64),
        np.ascontiguousarray(b, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(order, dtype=np.int64),
        float(eps),
    )
    return y, int(steps)


def weighted_draw(weights, uniforms):
    """Sequential proportional sampling without replacement.

    Each uniform in ``uniforms`` selects one index with probability
    proportional to the weights still in play; the chosen weight is then
    zeroed.  Caller guarantees at least ``len(uniforms)`` positive weights.
    """
    return _ACTIVE["weighted_draw"](
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(uniforms, dtype=np.float64),
    )
