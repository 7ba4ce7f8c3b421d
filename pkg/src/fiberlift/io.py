"""Deterministic CSV / JSON / PPM writers.

Floats are written with ``repr`` (shortest round-trip form), so identical
numbers always produce identical bytes.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .measures import EmpiricalMeasure, GridMeasure


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
    return path


def read_csv(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.bool_, bool)):
        return bool(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        f = float(o)
        # JSON has no inf / nan
        return f if math.isfinite(f) else repr(f)
    if hasattr(o, "to_dict"):
        return _jsonable(o.to_dict())
    return o


def dumps(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8", newline="\n")
    return path


def git_blob_sha1(data):
    """Content hash as computed by ``git hash-object``."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def file_sha1(path):
    return git_blob_sha1(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# typed writers


def measure_to_csv(mu, path):
    k = mu.dim
    header = ["y"] + [f"z{i}" for i in range(1, k)] + ["weight"]
    return write_csv(path, header, (list(p) + [w] for p, w in zip(mu.points, mu.weights)))


def measure_from_csv(path, space=None):
    header, rows = read_csv(path)
    arr = np.array(rows, dtype=float)
    return EmpiricalMeasure(arr[:, :-1], arr[:, -1], space=space or
                            ("base" if arr.shape[1] == 2 else "total"), normalize=True)


def measure_to_json(mu):
    return {"space": mu.space, "points": mu.points.tolist(), "weights": mu.weights.tolist()}


def grid_to_csv(gm, path):
    return write_csv(path, ["cell", "center", "mass"],
                     ((i, c, m) for i, (c, m) in enumerate(zip(gm.centers, gm.masses))))


def grid_from_csv(path):
    _, rows = read_csv(path)
    return GridMeasure(np.array([float(r[2]) for r in rows]))


def coupling_to_csv(cp, path):
    order = np.lexsort((cp.cols, cp.rows))
    return write_csv(path, ["i", "j", "mass"],
                     ((int(cp.rows[k]), int(cp.cols[k]), cp.mass[k]) for k in order))


def operator_to_csv(op, path):
    r, c, v = op.triplets()
    return write_csv(path, ["i", "j", "value"], zip(r.tolist(), c.tolist(), v.tolist()))


def trace_to_csv(arr, path, header=("n", "distance")):
    return write_csv(path, list(header), ([int(a[0])] + list(a[1:]) for a in np.asarray(arr)))


def write_ppm(path, lit, fg=(0, 0, 0), bg=(255, 255, 255)):
    """Binary PPM (P6) of a boolean raster; row 0 is the top of the image."""
    lit = np.asarray(lit, dtype=bool)
    h, w = lit.shape
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = bg
    img[lit] = fg
    path = Path(path)
    path.write_bytes(b"P6\n%d %d\n255\n" % (w, h) + img.tobytes())
    return path


def read_ppm(path):
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    w, h = map(int, parts[1].split())
    img = np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)
    return img


def write_png(path, lit):
    """Optional PNG copy (needs Pillow); returns None when unavailable."""
    try:
        from PIL import Image
    except ImportError:
        return None
    img = np.where(np.asarray(lit, dtype=bool), 0, 255).astype(np.uint8)
    Image.fromarray(img, mode="L").save(path)
    return Path(path)
