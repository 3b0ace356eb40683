"""Plain-text dataset format: one sample per line, ``x_1 ... x_n ; y`` with +-1
entries. Lines starting with ``#`` and blank lines are ignored."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .cube import Dataset


class DataFormatError(ValueError):
    pass


def parse_dataset(text: str) -> Dataset:
    rows, labels = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        left, sep, right = line.partition(";")
        if not sep:
            raise DataFormatError(f"line {lineno}: missing ';' before the label")
        try:
            x = [int(tok) for tok in left.split()]
            y = [int(tok) for tok in right.split()]
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: {exc}") from None
        if len(y) != 1:
            raise DataFormatError(f"line {lineno}: expected exactly one label")
        if any(v not in (-1, 1) for v in x + y):
            raise DataFormatError(f"line {lineno}: entries must be -1 or 1")
        if rows and len(x) != len(rows[0]):
            raise DataFormatError(f"line {lineno}: expected {len(rows[0])} coordinates, got {len(x)}")
        rows.append(x)
        labels.append(y[0])
    if not rows:
        raise DataFormatError("no samples found")
    return Dataset(np.array(rows, dtype=np.int8), np.array(labels, dtype=np.int8))


def format_dataset(data: Dataset, header: str | None = None) -> str:
    lines = [f"# {h}" for h in header.splitlines()] if header else []
    for x, y in zip(data.X, data.y):
        lines.append(" ".join(str(int(v)) for v in x) + f" ; {int(y)}")
    return "\n".join(lines) + "\n"


def read_dataset(path) -> Dataset:
    return parse_dataset(Path(path).read_text())


def write_dataset(data: Dataset, path, header: str | None = None) -> None:
    Path(path).write_text(format_dataset(data, header))
