"""CSV serialization of observable series (17 significant digits, round-trip exact)."""

import csv

import numpy as np

from .errors import OutputError


def _fmt(x):
    return format(float(x), ".17g")


def series_columns(series):
    cols = {"t": series.times}
    for i, name in enumerate(series.names):
        cols[name] = series.estimate[:, i]
        cols[f"{name}_se"] = series.standard_error[:, i]
    cols["trace"] = series.trace
    cols["trace_se"] = series.trace_se
    cols["flagged_fraction"] = series.flagged_fraction
    return cols


def raw_columns(series):
    cols = {"t": series.times}
    for i, name in enumerate(series.names):
        cols[f"{name}_raw"] = series.raw_estimate[:, i]
        cols[f"{name}_raw_se"] = series.raw_standard_error[:, i]
    return cols


def write_columns(cols, path):
    header = list(cols)
    data = np.column_stack([np.asarray(cols[h], dtype=float) for h in header])
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in data:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def emit_csv(series, path):
    write_columns(series_columns(series), path)


def read_csv(path):
    """Read a numeric CSV back into an ordered ``{column: array}`` mapping."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body]).reshape(len(body), len(header))
    return {h: data[:, i] for i, h in enumerate(header)}


def write_trajectory_dump(series, path):
    """Long-format per-trajectory normalized expectations: t, trajectory, observables."""
    traj = series.trajectories
    n, M, _ = traj.shape
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "trajectory", *series.names])
            for j in range(n):
                for nu in range(M):
                    w.writerow([_fmt(series.times[j]), nu, *(_fmt(v) for v in traj[j, nu])])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
