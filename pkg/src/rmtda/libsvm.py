"""Reader and writer for the sparse libsvm text format, restricted to two labels."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DatasetError
from .model import TrainingSet

__all__ = ["LoadedDataset", "load_libsvm", "write_libsvm"]


@dataclass(frozen=True)
class LoadedDataset:
    data: TrainingSet
    label_pair: tuple[str, str]
    skipped: int


def _parse_label(token: str) -> str:
    # "5", "5.0" and "+5" all name the same class
    try:
        value = float(token)
    except ValueError:
        return token
    return str(int(value)) if value.is_integer() else repr(value)


def load_libsvm(path: str | os.PathLike, labels, n_features: int | None = None) -> LoadedDataset:
    """Parse ``<label> <index>:<value> ...`` lines into a two-class :class:`TrainingSet`.

    ``labels`` is the pair ``(a, b)`` mapped to classes 0 and 1; rows with any
    other label are skipped and counted. Indices are 1-based and must increase
    strictly within a line; missing indices are zero. ``n_features`` defaults to
    the largest index seen in the file.
    """
    a, b = (_parse_label(str(v)) for v in labels)
    if a == b:
        raise DatasetError("the two selected labels must differ")
    rows: list[tuple[int, list[int], list[float]]] = []
    skipped = 0
    max_index = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            label = _parse_label(tokens[0])
            idx: list[int] = []
            val: list[float] = []
            for tok in tokens[1:]:
                key, sep, value = tok.partition(":")
                if not sep:
                    raise DatasetError(f"expected index:value, got {tok!r}", lineno)
                try:
                    k = int(key)
                    v = float(value)
                except ValueError:
                    raise DatasetError(f"bad feature {tok!r}", lineno) from None
                if k < 1:
                    raise DatasetError(f"feature index {k} is not 1-based", lineno)
                if idx and k <= idx[-1]:
                    raise DatasetError(f"feature indices must increase ({idx[-1]} then {k})", lineno)
                idx.append(k)
                val.append(v)
            if label not in (a, b):
                skipped += 1
                continue
            if idx:
                max_index = max(max_index, idx[-1])
            rows.append((0 if label == a else 1, idx, val))
    if not rows:
        raise DatasetError(f"no samples with labels {a!r} or {b!r} in {os.fspath(path)!r}")
    p = max_index if n_features is None else int(n_features)
    if p < max_index:
        raise DatasetError(f"feature index {max_index} exceeds n_features={p}")
    x = np.zeros((p, len(rows)))
    y = np.empty(len(rows), dtype=int)
    for col, (cls, idx, val) in enumerate(rows):
        x[np.asarray(idx, dtype=int) - 1, col] = val
        y[col] = cls
    return LoadedDataset(TrainingSet(x, y), (a, b), skipped)


def write_libsvm(path: str | os.PathLike, data: TrainingSet, label_pair=("0", "1")) -> None:
    """Write non-zero entries with full ``repr`` precision."""
    names = [str(v) for v in label_pair]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for col in range(data.n):
            column = data.samples[:, col]
            nz = np.flatnonzero(column)
            feats = " ".join(f"{k + 1}:{float(column[k])!r}" for k in nz)
            fh.write(f"{names[data.labels[col]]} {feats}".rstrip() + "\n")
