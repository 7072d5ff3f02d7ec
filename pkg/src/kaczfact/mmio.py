"""Matrix Market coordinate I/O for :class:`CSRMatrix` (real, general, 1-based)."""
from pathlib import Path

import numpy as np

from .errors import ParseError
from .matrix import CSRMatrix

HEADER = "%%MatrixMarket matrix coordinate real general"


def _fmt(v):
    # integral values are written without a fractional part
    if v == int(v) and abs(v) < 2**53:
        return str(int(v))
    return repr(float(v))


def write_mtx(path, X, comment=None):
    path = Path(path)
    m, n = X.shape
    counts = np.diff(X.indptr)
    rows = np.repeat(np.arange(m), counts)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(HEADER + "\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{m} {n} {X.nnz}\n")
        for r, c, v in zip(rows.tolist(), X.indices.tolist(), X.data.tolist()):
            fh.write(f"{r + 1} {c + 1} {_fmt(v)}\n")
    return path


def read_mtx(path):
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        banner = fh.readline()
        tokens = banner.strip().lower().split()
        if len(tokens) != 5 or tokens[0] != "%%matrixmarket":
            raise ParseError("missing %%MatrixMarket banner", line=1)
        _, obj, fmt, field, symmetry = tokens
        if obj != "matrix" or fmt != "coordinate":
            raise ParseError(f"unsupported layout {obj} {fmt}", line=1)
        if field not in ("real", "integer") or symmetry != "general":
            raise ParseError(f"unsupported field/symmetry {field} {symmetry}", line=1)
        lineno = 1
        size = None
        for raw in fh:
            lineno += 1
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            size = line.split()
            break
        if size is None or len(size) != 3:
            raise ParseError("missing size line", line=lineno)
        try:
            m, n, nnz = (int(t) for t in size)
        except ValueError:
            raise ParseError("malformed size line", line=lineno) from None
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        k = 0
        for raw in fh:
            lineno += 1
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            parts = line.split()
            if len(parts) != 3 or k >= nnz:
                raise ParseError("malformed entry", line=lineno)
            try:
                rows[k] = int(parts[0]) - 1
                cols[k] = int(parts[1]) - 1
                vals[k] = float(parts[2])
            except ValueError:
                raise ParseError("malformed entry", line=lineno) from None
            if not (0 <= rows[k] < m and 0 <= cols[k] < n):
                raise ParseError("entry index outside declared shape", line=lineno)
            k += 1
        if k != nnz:
            raise ParseError(f"expected {nnz} entries, found {k}", line=lineno)
    return CSRMatrix.from_coo(rows, cols, vals, (m, n))
