"""Strict CSV access: recipes may touch only allowlisted columns.

The renderer never recomputes physics; everything it draws must come out
of these readers, which hand back exactly the allowlisted columns and
nothing else.
"""

import csv

import numpy as np


class SchemaError(ValueError):
    """Missing or empty input, or a column outside the recipe's allowlist."""


def read_columns(path, allowlist):
    """Read the allowlisted columns of a CSV into float arrays.

    Empty cells become NaN.  Raises SchemaError if the file has no data
    rows or any allowlisted column is absent.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise SchemaError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path} is empty") from None
        missing = [c for c in allowlist if c not in header]
        if missing:
            raise SchemaError(f"{path} lacks required columns {missing}")
        idx = {c: header.index(c) for c in allowlist}
        data = {c: [] for c in allowlist}
        for row in reader:
            if not row:
                continue
            for c in allowlist:
                cell = row[idx[c]]
                data[c].append(float(cell) if cell != "" else np.nan)
    n_rows = len(next(iter(data.values()))) if allowlist else 0
    if n_rows == 0:
        raise SchemaError(f"{path} has a header but no data rows")
    return {c: np.asarray(v) for c, v in data.items()}
