"""File formats: point CSV, membership CSV and JSON, all written atomically."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np


class DatasetParseError(ValueError):
    pass


def atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def format_float(x):
    # 17 significant digits round-trip any float64
    return format(float(x), ".17g")


def points_to_csv(points):
    points = np.atleast_2d(np.asarray(points, float))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{j}" for j in range(points.shape[1])])
    for row in points:
        w.writerow([format_float(v) for v in row])
    return buf.getvalue()


def write_points(path, points):
    return atomic_write_text(path, points_to_csv(points))


def parse_points(text, source="<string>"):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise DatasetParseError(f"{source}: empty file")
    header = [h.strip() for h in rows[0]]
    expected = [f"x{j}" for j in range(len(header))]
    if header != expected:
        raise DatasetParseError(f"{source}:1: header must be {','.join(expected) or 'x0,...'}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DatasetParseError(f"{source}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            data.append([float(c) for c in row])
        except ValueError as exc:
            raise DatasetParseError(f"{source}:{lineno}: {exc}") from None
    if not data:
        raise DatasetParseError(f"{source}: no data rows")
    out = np.array(data)
    if not np.all(np.isfinite(out)):
        raise DatasetParseError(f"{source}: non-finite coordinates")
    return out


def read_points(path):
    return parse_points(Path(path).read_text(), str(path))


def membership_to_csv(labels_per_point):
    """One row per point; label ids joined by ';', empty when unlabelled."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["point_index", "label_ids"])
    for i, ids in enumerate(labels_per_point):
        w.writerow([i, ";".join(str(k) for k in ids)])
    return buf.getvalue()


def write_membership(path, labels_per_point):
    return atomic_write_text(path, membership_to_csv(labels_per_point))


def read_membership(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return [[int(k) for k in ids.split(";") if k] for _, ids in reader]


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def write_json(path, obj):
    return atomic_write_text(path, dumps(obj))


def read_json(path):
    return json.loads(Path(path).read_text())


def write_rows(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return atomic_write_text(path, buf.getvalue())


def atlas_document(atlas, fmap, noise):
    """Self-contained atlas JSON: records plus the map and measure they refer to."""
    return {"feature_map": fmap.to_dict(), "noise": noise.to_dict(), **atlas.to_dict()}


def load_atlas_document(data):
    from .feature import FeatureMap
    from .noise import BackgroundNoise
    from .search import LabelAtlas
    return (LabelAtlas.from_dict(data), FeatureMap.from_dict(data["feature_map"]),
            BackgroundNoise.from_dict(data["noise"]))
