"""
Machine readable outputs of the CLI.

Trajectories are CSV (comma separated, header row, LF line endings,
UTF-8); reports are a single JSON object written with a fixed key order
and every float at 17 significant digits, so identical runs give
byte identical files.

"""
import collections
import csv
import enum
import json
import logging
import math
import os

import numpy as np

from vako.common import format_float

LOGGER = logging.getLogger(__name__)

JSON_INDENT = 2


TrajectoryTable = collections.namedtuple("TrajectoryTable", ("times", "q", "p", "u", "H"))


class TrajectoryFormatError(ValueError):
    def __init__(self, error, filename):
        self.error = error
        self.filename = filename

    def __str__(self):
        return f"{self.error} in trajectory {self.filename}"


# -----------------------------------------------------------
# CSV
# -----------------------------------------------------------
def trajectory_header(n, k):
    return (["t"] + [f"q_{i + 1}" for i in range(n)] + [f"p_{i + 1}" for i in range(n)] +
            [f"u_{i + 1}" for i in range(k)] + ["H"])


def write_trajectory(filename, path):
    """
    Write a phase path as t, q_1..q_n, p_1..p_n, u_1..u_k, H rows.

    """
    n, k = path.q.shape[1], path.u.shape[1]
    filename = os.path.expanduser(filename)
    with open(filename, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(trajectory_header(n, k))
        for row in zip(path.times, path.q, path.p, path.u, path.H):
            t, q, p, u, H = row
            writer.writerow([format_float(t)] + [format_float(x) for x in q] +
                            [format_float(x) for x in p] + [format_float(x) for x in u] +
                            [format_float(H)])
    LOGGER.info("Wrote %d trajectory rows to %s", len(path.times), filename)


def _columns(header, prefix):
    indices = [i for i, name in enumerate(header) if name.startswith(prefix)]
    expected = [f"{prefix}{j + 1}" for j in range(len(indices))]
    if [header[i] for i in indices] != expected:
        return None
    return indices


def read_trajectory(filename, n):
    """
    Read a trajectory CSV. Only the t and q_1..q_n columns are mandatory;
    p, u and H are returned as None when absent.

    Raises:
        TrajectoryFormatError if the file cannot be used with an n
        dimensional problem.

    """
    path = os.path.expanduser(filename)
    if not os.path.exists(path):
        raise TrajectoryFormatError("File not found", filename)

    with open(path, newline="", encoding="utf-8") as f:
        rows = [row for row in csv.reader(f) if row]
    if not rows or rows[0][0] != "t":
        raise TrajectoryFormatError("Missing header row starting with 't'", filename)

    header, body = rows[0], rows[1:]
    try:
        data = np.array([[float(x) for x in row] for row in body], dtype=float)
    except ValueError:
        raise TrajectoryFormatError("Non-numeric value", filename) from None
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != len(header):
        raise TrajectoryFormatError("Need at least two complete rows", filename)

    groups = {}
    for prefix in ("q_", "p_", "u_"):
        indices = _columns(header, prefix)
        if indices is None:
            raise TrajectoryFormatError(f"Badly numbered {prefix} columns", filename)
        groups[prefix] = data[:, indices] if indices else None

    if groups["q_"] is None or groups["q_"].shape[1] != n:
        found = 0 if groups["q_"] is None else groups["q_"].shape[1]
        raise TrajectoryFormatError(f"Expected {n} q columns, found {found}", filename)
    if groups["p_"] is not None and groups["p_"].shape[1] != n:
        raise TrajectoryFormatError(f"Expected {n} p columns", filename)

    H = data[:, header.index("H")] if "H" in header else None
    return TrajectoryTable(data[:, 0], groups["q_"], groups["p_"], groups["u_"], H)


# -----------------------------------------------------------
# JSON
# -----------------------------------------------------------
def _is_scalar(value):
    return not isinstance(value, (dict, list, tuple, np.ndarray))


def _encode(value, level):
    pad = " " * (JSON_INDENT * (level + 1))
    end = " " * (JSON_INDENT * level)

    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(key))}: {_encode(item, level + 1)}"
                 for key, item in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"

    if isinstance(value, (list, tuple, np.ndarray)):
        items = list(value)
        if not items:
            return "[]"
        if all(_is_scalar(item) for item in items):
            return "[" + ", ".join(_encode(item, level + 1) for item in items) + "]"
        return ("[\n" + ",\n".join(pad + _encode(item, level + 1) for item in items) +
                "\n" + end + "]")

    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return json.dumps(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value) if math.isfinite(value) else "null"
    if isinstance(value, enum.Enum):
        return json.dumps(value.name.lower())
    return json.dumps(str(value))


def to_json(value):
    """
    Deterministic JSON text of a report: dict keys keep their insertion
    order, floats have 17 significant digits and non-finite floats
    become null.

    """
    return _encode(value, 0) + "\n"

