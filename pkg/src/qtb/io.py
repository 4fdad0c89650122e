"""JSON serialization of complex matrices and atomic file output.

A matrix is a list of rows, each row a list of ``[re, im]`` pairs.
"""
import json
import os
import tempfile

import numpy as np

from .errors import QtbError


class JsonFormatError(QtbError):
    """Malformed or structurally invalid JSON input."""


def matrix_to_json(m):
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(obj, what="matrix"):
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise JsonFormatError(f"{what}: expected a non-empty list of rows")
    ncols = len(obj[0])
    out = np.empty((len(obj), ncols), dtype=np.complex128)
    for i, row in enumerate(obj):
        if len(row) != ncols:
            raise JsonFormatError(f"{what}: row {i} has {len(row)} entries, expected {ncols}")
        for j, z in enumerate(row):
            if (not isinstance(z, list) or len(z) != 2
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in z)):
                raise JsonFormatError(f"{what}: entry [{i}][{j}] must be a [re, im] pair of numbers")
            out[i, j] = complex(z[0], z[1])
    if not np.all(np.isfinite(out)):
        raise JsonFormatError(f"{what}: non-finite entry")
    return out


def loads(text, source="<string>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise JsonFormatError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return loads(text, str(path))


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temp file in the same directory and a rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
