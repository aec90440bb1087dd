"""
Result files: CSV with shortest round-trip floats and JSON with stable key order.
"""

import csv
import json
import math
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np


def number(value: float) -> str:
    """
    The shortest decimal that reads back to the same double.
    """
    return repr(float(value))


def jsonable(value: Any) -> Any:
    """
    Convert numpy scalars, arrays and complex numbers into plain JSON values.
    """
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return [jsonable(value.real), jsonable(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no infinities; keep them readable.
        if math.isnan(value) or math.isinf(value):
            return repr(value)
        return value
    if isinstance(value, Path):
        return value.as_posix()
    return value


def write_json(path: Path, doc: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as file:
        json.dump(jsonable(doc), file, indent=2, sort_keys=True)
        file.write("\n")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([number(v) if isinstance(v, (float, np.floating)) else v for v in row])

