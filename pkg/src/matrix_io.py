# ============================================================================
# FILE: matrix_io.py
# ============================================================================
"""
Matrix, intensity and report files.

Matrices are either CSV (one row per line, no header) or raw binary with a
16-byte header of two little-endian uint64 (rows, cols) followed by
row-major little-endian float64. The `.bin` suffix selects binary.

Every writer goes through atomic_write: data lands in a temporary sibling
and is renamed over the target only once fully written.
"""

import csv
import os
import struct
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional, Sequence

import numpy as np

from src.core.basis import PatternFamily, all_patterns, offset
from src.errors import DimensionError, MatrixFormatError, PatternIndexError
from src.models import GridLayout, IntensityVector

_HEADER = struct.Struct("<QQ")
BINARY_SUFFIX = ".bin"

# ============================================================================
# ATOMIC WRITES
# ============================================================================


@contextmanager
def atomic_write(path: Path, mode: str = "w") -> Iterator[Any]:
    """Open a temporary sibling of path; rename it over path on clean exit"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        newline = "" if "b" not in mode else None
        with os.fdopen(fd, mode, newline=newline) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_csv_rows(path: Path, columns: Sequence[str], rows: Iterable[dict[str, Any]]) -> None:
    """Header row plus one line per dict; None becomes an empty cell"""
    with atomic_write(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(["" if row.get(c) is None else row[c] for c in columns])


# ============================================================================
# MATRICES
# ============================================================================


def read_matrix(path: Path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise MatrixFormatError(str(path), None, "no such file")
    if path.suffix == BINARY_SUFFIX:
        return _read_binary(path)
    return _read_csv(path)


def _read_csv(path: Path) -> np.ndarray:
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                row = [float(cell) for cell in text.split(",")]
            except ValueError as e:
                raise MatrixFormatError(str(path), lineno, f"not a number ({e})") from None
            if not all(np.isfinite(row)):
                raise MatrixFormatError(str(path), lineno, "non-finite value")
            if rows and len(row) != len(rows[0]):
                raise MatrixFormatError(str(path), lineno, f"expected {len(rows[0])} columns, got {len(row)}")
            rows.append(row)
    if not rows:
        raise MatrixFormatError(str(path), None, "empty matrix")
    return np.array(rows, dtype=float)


def _read_binary(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise MatrixFormatError(str(path), None, f"binary header needs {_HEADER.size} bytes, file has {len(raw)}")
    rows, cols = _HEADER.unpack_from(raw)
    expected = _HEADER.size + rows * cols * 8
    if len(raw) != expected:
        raise MatrixFormatError(str(path), None, f"{rows}x{cols} needs {expected} bytes, file has {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(rows, cols).astype(float)
    if not np.all(np.isfinite(data)):
        raise MatrixFormatError(str(path), None, "non-finite value")
    return data


def write_matrix(path: Path, matrix: np.ndarray) -> None:
    """Boolean matrices are written as 0/1"""
    path = Path(path)
    matrix = np.asarray(matrix)
    if path.suffix == BINARY_SUFFIX:
        with atomic_write(path, "wb") as fh:
            fh.write(_HEADER.pack(*matrix.shape))
            fh.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())
        return
    fmt = "%d" if matrix.dtype == bool else "%.17g"
    with atomic_write(path) as fh:
        np.savetxt(fh, matrix.astype(int) if matrix.dtype == bool else matrix, fmt=fmt, delimiter=",")


# ============================================================================
# INTENSITIES
# ============================================================================

INTENSITY_COLUMNS = ("family", "index", "offset", "intensity")


def write_intensities(path: Path, x: IntensityVector, layout: GridLayout, nae_value: Optional[float]) -> None:
    """One row per pattern in C, D, E order, then a trailing nae row"""
    flat = x.flatten()
    rows = [
        {
            "family": pid.family.label,
            "index": pid.index,
            "offset": offset(pid, layout),
            "intensity": float(value),
        }
        for pid, value in zip(all_patterns(layout), flat)
    ]
    rows.append({"family": "nae", "intensity": nae_value})
    write_csv_rows(path, INTENSITY_COLUMNS, rows)


def read_intensities(path: Path) -> IntensityVector:
    """Parse a decompose CSV back into an IntensityVector; the nae row is skipped"""
    path = Path(path)
    if not path.is_file():
        raise MatrixFormatError(str(path), None, "no such file")
    parts: dict[PatternFamily, dict[int, float]] = {f: {} for f in PatternFamily}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != INTENSITY_COLUMNS:
            raise MatrixFormatError(str(path), 1, f"header must be {','.join(INTENSITY_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or row[0] == "nae":
                continue
            try:
                family = PatternFamily.from_label(row[0])
                index, value = int(row[1]), float(row[3])
            except (IndexError, ValueError) as e:
                raise MatrixFormatError(str(path), lineno, f"bad intensity row ({e})") from None
            except PatternIndexError as e:
                raise MatrixFormatError(str(path), lineno, str(e)) from None
            parts[family][index] = value

    arrays = []
    for family, values in parts.items():
        if sorted(values) != list(range(len(values))):
            raise MatrixFormatError(str(path), None, f"{family.label} indices are not 0..{len(values) - 1}")
        arrays.append(np.array([values[k] for k in range(len(values))], dtype=float))
    try:
        return IntensityVector(c=arrays[0], d=arrays[1], e=arrays[2])
    except DimensionError as e:
        raise MatrixFormatError(str(path), None, str(e)) from None
