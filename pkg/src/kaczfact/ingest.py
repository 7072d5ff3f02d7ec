"""Ratings CSV -> sparse reviewer x product matrix."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datagen import sparsity
from .errors import EmptyFile, InvalidRating, ParseError
from .matrix import CSRMatrix

logger = logging.getLogger(__name__)


@dataclass
class IdMaps:
    """Bijections between opaque ids and matrix indices, in first-seen order."""

    reviewer_index: dict = field(default_factory=dict)
    product_index: dict = field(default_factory=dict)
    reviewers: list = field(default_factory=list)
    products: list = field(default_factory=list)

    def _intern(self, table, inverse, key):
        idx = table.get(key)
        if idx is None:
            idx = table[key] = len(inverse)
            inverse.append(key)
        return idx

    def reviewer(self, rid):
        return self._intern(self.reviewer_index, self.reviewers, rid)

    def product(self, pid):
        return self._intern(self.product_index, self.products, pid)


def _parse_rating(text, lineno):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"rating {text!r} is not a number", line=lineno) from None
    if value != int(value) or not 1 <= value <= 5:
        raise InvalidRating(f"rating {text!r} outside 1..5", line=lineno)
    return int(value)


def _looks_like_header(fields):
    if len(fields) < 3:
        return False
    try:
        float(fields[2])
    except ValueError:
        return True
    return False


def load_ratings(path, limit=None, format="csv"):
    """Read ``reviewer_id,product_id,rating[,timestamp]`` lines.

    A first line whose rating field is not numeric is taken as a header.
    ``limit`` caps the number of data lines read.  Duplicate
    (reviewer, product) pairs keep the last rating.  Returns
    ``(X, id_maps, report)``.
    """
    if format != "csv":
        raise ValueError(f"unsupported format {format!r}")
    path = Path(path)
    maps = IdMaps()
    entries = {}
    lines = 0
    duplicates = 0
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, fields in enumerate(reader, start=1):
            if not fields or all(not f.strip() for f in fields):
                continue
            if lineno == 1 and _looks_like_header(fields):
                continue
            if limit is not None and lines >= limit:
                break
            if len(fields) not in (3, 4):
                raise ParseError(f"expected 3 or 4 fields, got {len(fields)}", line=lineno)
            rid, pid = fields[0].strip(), fields[1].strip()
            if not rid or not pid:
                raise ParseError("empty id", line=lineno)
            rating = _parse_rating(fields[2].strip(), lineno)
            if len(fields) == 4 and fields[3].strip():
                try:
                    int(float(fields[3]))
                except ValueError:
                    raise ParseError(f"timestamp {fields[3]!r} is not a number", line=lineno) from None
            key = (maps.reviewer(rid), maps.product(pid))
            if key in entries:
                duplicates += 1
            entries[key] = rating
            lines += 1
    if lines == 0:
        raise EmptyFile(f"{path} contains no ratings")
    if duplicates:
        logger.warning("%d duplicate (reviewer, product) ratings; kept the last of each", duplicates)
    keys = np.fromiter((c for key in entries for c in key), dtype=np.int64, count=2 * len(entries)).reshape(-1, 2)
    vals = np.fromiter(entries.values(), dtype=np.float64, count=len(entries))
    shape = (len(maps.reviewers), len(maps.products))
    X = CSRMatrix.from_coo(keys[:, 0], keys[:, 1], vals, shape)
    report = matrix_report(X)
    report.update(triples=lines, duplicates=duplicates)
    return X, maps, report


def matrix_report(X):
    rows, cols = X.shape
    return {
        "rows": rows,
        "cols": cols,
        "nnz": X.nnz,
        "sparsity": sparsity(X),
        "min_value": float(X.data.min()) if X.nnz else None,
        "max_value": float(X.data.max()) if X.nnz else None,
    }
