"""CSV ingestion. Plain UTF-8, comma separated, '.' decimal point."""

from __future__ import annotations

import csv
from pathlib import Path

from .core import Dataset, Sample, validate_dataset
from .errors import MissingColumn, ParseError, ValidationError


def ingest_csv(path, target_column: str, group_by: str | None = None) -> Dataset:
    """Read a headered CSV into a Dataset.

    Every column except the target and the optional group column is taken
    as a feature, in header order. Cells must parse as floats; failures
    name the offending 1-based file line and column. Sample ids are the
    0-based data row index. The result is validated before being returned.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path} is empty", row=1)
        header = [h.strip() for h in header]
        if target_column not in header:
            raise MissingColumn(f"target column {target_column!r} not in header {header}")
        target_idx = header.index(target_column)
        group_idx: int | None = None
        if group_by is not None:
            if group_by not in header:
                raise MissingColumn(f"group column {group_by!r} not in header {header}")
            group_idx = header.index(group_by)
        feature_idx = [i for i in range(len(header)) if i not in (target_idx, group_idx)]
        feature_names = tuple(header[i] for i in feature_idx)

        samples: list[Sample] = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(
                    f"line {line_no} has {len(row)} cells, header has {len(header)}",
                    row=line_no)
            def cell(i: int) -> float:
                try:
                    return float(row[i])
                except ValueError:
                    raise ParseError(
                        f"line {line_no} column {header[i]!r}: {row[i]!r} is not a number",
                        row=line_no, column=header[i])
            x = [cell(i) for i in feature_idx]
            y = cell(target_idx)
            group = row[group_idx].strip() if group_idx is not None else None
            samples.append(Sample(x=x, y=y, id=str(line_no - 2), group_key=group))

    data = Dataset(samples=tuple(samples), feature_names=feature_names)
    report = validate_dataset(data)
    if not report.passed:
        raise ValidationError(report)
    return data
