"""Reading delimiter-separated datasets and writing deterministic result files."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError
from .network import Dataset, Task


def _parse_float(cell: str) -> float | None:
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_table(
    path,
    delimiter: str = ",",
    target_column: int = -1,
    task: Task | str = Task.REGRESSION,
    header: bool | None = None,
) -> tuple[Dataset, list[str] | None]:
    """Read a numeric table into a dataset, returning header names if present.

    Parameters
    ----------
    path : path-like
    delimiter : str
    target_column : int
        Index of the response column; negative values count from the end.
    task : Task or str
        ``binary`` requires every target to be 0 or 1.
    header : bool, optional
        ``None`` treats the first row as a header when none of its cells is numeric.

    Returns
    -------
    data : Dataset
    names : list of str or None
        Feature names from the header, with the target column removed.

    Raises
    ------
    ParseError
        On ragged rows, non-numeric cells or invalid targets. The message
        names the 1-based line number.
    """
    task = Task(task)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = list(_rows(fh, delimiter))
    if not rows:
        raise ParseError(f"{path} contains no rows")

    first_line, first = rows[0]
    if header is None:
        header = all(_parse_float(c) is None for c in first)
    names = [c.strip() for c in first] if header else None
    body = rows[1:] if header else rows
    if not body:
        raise ParseError(f"{path} has a header but no data rows", first_line)

    width = len(first)
    if width < 2:
        raise ParseError("need at least one feature column and a target column", first_line)
    target = target_column if target_column >= 0 else width + target_column
    if not 0 <= target < width:
        raise ParseError(f"target column {target_column} is outside a {width}-column table", first_line)

    values = np.empty((len(body), width))
    for i, (line, row) in enumerate(body):
        if len(row) != width:
            raise ParseError(f"expected {width} fields, found {len(row)}", line)
        for j, cell in enumerate(row):
            v = _parse_float(cell)
            if v is None:
                raise ParseError(f"column {j + 1}: {cell!r} is not a finite number", line)
            values[i, j] = v
        if task is Task.BINARY and values[i, target] not in (0.0, 1.0):
            raise ParseError(f"binary target must be 0 or 1, found {row[target]!r}", line)

    features = np.delete(values, target, axis=1)
    if names is not None:
        del names[target]
    return Dataset(features, values[:, target], task), names


def _rows(fh, delimiter):
    reader = csv.reader(fh, delimiter=delimiter)
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        yield reader.line_num, [c.strip() for c in row]


def load_csv(path, delimiter: str = ",", target_column: int = -1,
             task: Task | str = Task.REGRESSION, header: bool | None = None) -> Dataset:
    return load_table(path, delimiter, target_column, task, header)[0]


def load_names(path, n_features: int | None = None) -> list[str]:
    """One feature name per non-blank line."""
    names = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()]
    names = [n for n in names if n]
    if n_features is not None and len(names) != n_features:
        raise ParseError(f"{path} lists {len(names)} names for {n_features} features")
    return names


def write_json(path, obj) -> None:
    """Sorted keys and a trailing newline, so equal objects give equal bytes."""
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
