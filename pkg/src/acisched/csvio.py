"""CSV helpers: matrices with a ``# N=<n>`` header and plain dict tables."""
from __future__ import annotations

import csv
import io
import math
import os
import tempfile

import numpy as np


def atomic_write(path, text):
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else repr(float(v))
    return "" if v is None else str(v)


def format_matrix(M, N, meta=None):
    lines = [f"# N={int(N)}"]
    for key, value in (meta or {}).items():
        lines.append(f"# {key}={value}")
    M = np.atleast_2d(np.asarray(M))
    for row in M:
        lines.append(",".join(_fmt(v) if M.dtype.kind == "f" else str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def write_matrix_csv(path, M, N, meta=None):
    """Row-major matrix with ``# N=<n>`` and optional ``# key=value`` lines."""
    text = format_matrix(M, N, meta)
    if path in (None, "-"):
        return text
    atomic_write(path, text)
    return text


def parse_matrix(text, dtype=float):
    meta, rows = {}, []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
            continue
        rows.append([dtype(float(x)) for x in line.split(",")])
    if "N" not in meta:
        raise ValueError("matrix CSV lacks the '# N=<n>' header")
    meta["N"] = int(meta["N"])
    return np.array(rows, dtype=dtype), meta


def read_matrix_csv(path, dtype=float):
    with open(path) as fh:
        return parse_matrix(fh.read(), dtype)


def write_rows_csv(path, rows, header_lines=()):
    """Write a list of dicts as CSV; columns in first-seen order."""
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    if rows:
        cols = list(rows[0])
        for r in rows[1:]:
            cols += [c for c in r if c not in cols]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for r in rows:
            writer.writerow([_fmt(r.get(c)) for c in cols])
    atomic_write(path, buf.getvalue())
