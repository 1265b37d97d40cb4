"""CSV reading and writing for population series and ejection outcomes.

Files are UTF-8 with a header row and '.' as decimal separator. Population
files carry time_s, p00, p1m1, p2m2 and optionally se00, se1m1, se2m2;
outcome files carry time_s, p0, p1, p2.
"""

import csv
import hashlib
import json
import math

import numpy as np

from .exceptions import InputError
from .measurement import EjectionOutcome
from .trajectory import COLUMNS, STDERR_COLUMNS, PopulationTrajectory

TIME_COLUMN = "time_s"
OUTCOME_COLUMNS = ("p0", "p1", "p2")
# Rounding slack on probability bounds so simulated output reads back.
PROBABILITY_SLACK = 1e-9


class CSVFormatError(InputError):
    def __init__(self, path, line, column, message):
        where = f"{path}:{line}" + (f", column {column!r}" if column else "")
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


def _read_table(path, required, optional=()):
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc.strerror}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise CSVFormatError(path, 1, None, "file is empty; a header row is required") from None
        except (csv.Error, UnicodeDecodeError) as exc:
            raise CSVFormatError(path, 1, None, str(exc)) from exc
        header = [h.strip() for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise CSVFormatError(path, 1, missing[0], "required column missing from header")
        unknown = [h for h in header if h not in required and h not in optional]
        if unknown:
            raise CSVFormatError(path, 1, unknown[0], "unexpected column")
        if len(set(header)) != len(header):
            raise CSVFormatError(path, 1, None, "duplicate column names")
        present = [c for c in optional if c in header]
        if present and len(present) != len(optional):
            raise CSVFormatError(path, 1, None, f"give all or none of {', '.join(optional)}")
        columns = list(required) + present
        where = [header.index(c) for c in columns]
        rows = []
        try:
            for row in reader:
                line = reader.line_num
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) != len(header):
                    raise CSVFormatError(path, line, None, f"expected {len(header)} fields, found {len(row)}")
                values = []
                for name, k in zip(columns, where):
                    text = row[k].strip()
                    try:
                        value = float(text)
                    except ValueError:
                        raise CSVFormatError(path, line, name, f"not a number: {text!r}") from None
                    if not math.isfinite(value):
                        raise CSVFormatError(path, line, name, f"value must be finite, got {text!r}")
                    values.append((line, value))
                rows.append(values)
        except (csv.Error, UnicodeDecodeError) as exc:
            raise CSVFormatError(path, reader.line_num, None, str(exc)) from exc
    if not rows:
        raise CSVFormatError(path, 2, None, "no data rows")
    return columns, rows


def _check_times_column(path, rows):
    previous = None
    for values in rows:
        line, t = values[0]
        if t < 0:
            raise CSVFormatError(path, line, TIME_COLUMN, "time must be nonnegative")
        if previous is not None and t < previous:
            raise CSVFormatError(path, line, TIME_COLUMN, "times must be sorted ascending")
        previous = t


def _check_range(path, rows, columns, names, low, high):
    for values in rows:
        for name, (line, v) in zip(columns, values):
            if name in names and not low - PROBABILITY_SLACK <= v <= high + PROBABILITY_SLACK:
                raise CSVFormatError(path, line, name, f"value {v!r} outside [{low}, {high}]")


def read_populations_csv(path, normalize=False) -> PopulationTrajectory:
    """Load a population series; ``normalize`` divides by the first |0,0> population."""
    columns, rows = _read_table(path, (TIME_COLUMN,) + COLUMNS, STDERR_COLUMNS)
    _check_times_column(path, rows)
    _check_range(path, rows, columns, COLUMNS, 0.0, 1.0)
    _check_range(path, rows, columns, STDERR_COLUMNS, 0.0, math.inf)
    data = np.array([[v for _, v in values] for values in rows])
    stderr = data[:, 4:7] if data.shape[1] == 7 else None
    traj = PopulationTrajectory(data[:, 0], data[:, 1:4], stderr)
    return traj.normalized_to_initial() if normalize else traj


def read_outcomes_csv(path):
    """Load ejection outcomes; returns (times, list of EjectionOutcome)."""
    columns, rows = _read_table(path, (TIME_COLUMN,) + OUTCOME_COLUMNS)
    _check_times_column(path, rows)
    _check_range(path, rows, columns, OUTCOME_COLUMNS, 0.0, 1.0)
    times, outcomes = [], []
    for values in rows:
        line = values[0][0]
        times.append(values[0][1])
        try:
            outcomes.append(EjectionOutcome(*(v for _, v in values[1:])))
        except InputError as exc:
            raise CSVFormatError(path, line, None, str(exc)) from None
    return np.array(times), outcomes


def format_float(value):
    """Shortest round-trip representation, so files are stable byte for byte."""
    return repr(float(value))


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) for v in row])


def write_populations_csv(path, traj: PopulationTrajectory):
    header = [TIME_COLUMN, *COLUMNS]
    table = np.column_stack([traj.times, traj.populations])
    if traj.stderr is not None:
        header += list(STDERR_COLUMNS)
        table = np.column_stack([table, traj.stderr])
    write_csv(path, header, table)


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def file_digest(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()
