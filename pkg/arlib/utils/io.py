import csv
import io
import json
import math
import os
import re
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "resolve_structure_path",
    "bundled_structures",
    "atomic_write",
    "to_jsonable",
    "dumps_json",
    "write_json",
    "format_csv",
    "write_csv",
    "STRUCTURE_SUFFIX",
]

STRUCTURE_SUFFIX = ".ar"


def bundled_structures():
    """Names of the structure files shipped in ``arlib/structures``."""
    root = resources.files("arlib.structures")
    return sorted(p.name for p in root.iterdir() if p.name.endswith(STRUCTURE_SUFFIX))


def resolve_structure_path(name):
    """Existing path as given, else a bundled structure matched by file name.

    ``examples/grushin.ar``, ``grushin.ar`` and ``grushin`` all resolve to the
    bundled Grushin file when no such path exists.
    """
    path = Path(name)
    if path.is_file():
        return path
    stem = path.name
    if not stem.endswith(STRUCTURE_SUFFIX):
        stem += STRUCTURE_SUFFIX
    candidate = resources.files("arlib.structures") / stem
    if candidate.is_file():
        return Path(str(candidate))
    raise FileNotFoundError(
        f"no structure file {str(name)!r}; bundled: {', '.join(bundled_structures())}"
    )


def atomic_write(path, text):
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + ".tmp")
    with open(tmp_path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    os.replace(tmp_path, path)
    return path


def to_jsonable(obj):
    """Plain JSON types; numpy scalars/arrays unwrapped, non-finite floats -> None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


# floats are carried through json.dumps as marked strings, then unquoted
_FLOAT_MARK = "\x00"
_FLOAT_TOKEN = re.compile(r'"\\u0000([^"]+)"')


def _mark_floats(obj):
    if isinstance(obj, dict):
        return {k: _mark_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_mark_floats(v) for v in obj]
    if isinstance(obj, float):
        return f"{_FLOAT_MARK}{obj:.16e}"
    return obj


def dumps_json(obj):
    """Sorted, indented JSON; floats in 17-significant-digit scientific notation."""
    text = json.dumps(_mark_floats(to_jsonable(obj)), indent=2, sort_keys=True, allow_nan=False)
    return _FLOAT_TOKEN.sub(r"\1", text) + "\n"


def write_json(path, obj):
    return atomic_write(path, dumps_json(obj))


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.16e}"
    return value


def format_csv(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def write_csv(path, header, rows):
    return atomic_write(path, format_csv(header, rows))
