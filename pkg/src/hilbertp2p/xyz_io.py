"""ASCII XYZ clouds, frame sequences and deterministic file output.

XYZ files hold one point per line as 2 or 3 whitespace-separated decimals.
Blank lines and lines starting with ``#`` are skipped. The first data line
fixes the dimension for the rest of the file.
"""
from __future__ import annotations

import json
import math
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .errors import DomainError

SEQUENCE_NAME = re.compile(r"^(\d+)\.xyz$")


class XYZParseError(DomainError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path, self.line = str(path), line


def parse_xyz(text: str, source: str = "<string>") -> np.ndarray:
    rows: list[list[float]] = []
    dims = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if dims is None:
            if len(fields) not in (2, 3):
                raise XYZParseError(source, lineno, f"expected 2 or 3 values, found {len(fields)}")
            dims = len(fields)
        elif len(fields) != dims:
            raise XYZParseError(source, lineno, f"expected {dims} values, found {len(fields)}")
        try:
            values = [float(v) for v in fields]
        except ValueError:
            raise XYZParseError(source, lineno, f"not a number in {line!r}") from None
        if not all(math.isfinite(v) for v in values):
            raise XYZParseError(source, lineno, "non-finite coordinate")
        rows.append(values)
    if not rows:
        return np.zeros((0, 3))
    return np.array(rows, dtype=np.float64)


def read_xyz(path) -> np.ndarray:
    """Load an XYZ file. Raises XYZParseError for malformed content and
    OSError when the file cannot be read."""
    with open(path, encoding="utf-8") as fh:
        return parse_xyz(fh.read(), str(path))


def format_xyz(points) -> str:
    pc = np.asarray(points, dtype=np.float64)
    return "".join(" ".join(repr(float(v)) for v in row) + "\n" for row in pc)


def atomic_write(path, data: str | bytes) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": "\n"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_xyz(path, points) -> None:
    atomic_write(path, format_xyz(points))


def _float17(v: float) -> str:
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return format(v, ".17g")


def dumps17(obj, indent: int | None = 2, _level: int = 0) -> str:
    """JSON text with every real written to 17 significant digits.

    Accepts dicts with string keys, lists, tuples, numpy arrays and scalars.
    Key order is preserved, so equal inputs give byte-identical text.
    """
    pad = "" if indent is None else "\n" + " " * (indent * (_level + 1))
    end = "" if indent is None else "\n" + " " * (indent * _level)
    sep = ", " if indent is None else ","
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, np.generic):
        obj = obj.item()
    if obj is None or isinstance(obj, bool):
        return {None: "null", True: "true", False: "false"}[obj]
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float17(obj)
    if isinstance(obj, (str, Path)):
        return json.dumps(str(obj))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{dumps17(str(k), indent)}: {dumps17(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{" + pad + (sep + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.generic)) and not isinstance(v, bool) for v in obj):
            # numeric rows stay on one line
            return "[" + ", ".join(dumps17(v, indent) for v in obj) + "]"
        return "[" + pad + (sep + pad).join(dumps17(v, indent, _level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_json(path, obj) -> None:
    atomic_write(path, dumps17(obj) + "\n")


def sequence_files(seq_dir) -> list[tuple[int, Path]]:
    """Frame files of a sequence directory as (index, path), by index.

    Only names made of digits plus ``.xyz`` count as frames. Two names with
    the same numeric index are rejected.
    """
    seq_dir = Path(seq_dir)
    if not seq_dir.is_dir():
        raise FileNotFoundError(f"sequence directory {seq_dir} does not exist")
    found = []
    for entry in seq_dir.iterdir():
        m = SEQUENCE_NAME.match(entry.name)
        if m and entry.is_file():
            found.append((int(m.group(1)), entry))
    found.sort()
    for (a, pa), (b, pb) in zip(found, found[1:]):
        if a == b:
            raise DomainError(f"frames {pa.name} and {pb.name} share index {a}")
    return found
