"""CSV and JSON writers for samples, fits, histograms and urn distributions.

CSV files start with ``#``-prefixed metadata lines holding a JSON object,
followed by a header row and data rows. Floats are written with ``repr`` so
identical inputs give byte-identical files.
"""
from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

from .genealogy import SampleSet
from .stats import FitReport, Histogram


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def csv_text(columns: list[str], rows, meta: dict | None = None) -> str:
    buf = io.StringIO()
    if meta is not None:
        buf.write("# " + json.dumps(_jsonable(meta), sort_keys=True) + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Inverse of :func:`csv_text`: metadata, header, raw rows."""
    meta = {}
    rows = []
    header = None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            meta.update(json.loads(line[1:]))
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append(line.split(","))
    return meta, header, rows


def sampleset_csv(s: SampleSet, meta: dict | None = None) -> str:
    rows = zip(range(s.replicates), s.values.tolist(), s.scaled.tolist())
    return csv_text(["index", "t_mrca", "scaled"], rows, {**s.header(), **(meta or {})})


def sampleset_json(s: SampleSet, meta: dict | None = None) -> dict:
    return {"header": {**s.header(), **(meta or {})},
            "t_mrca": s.values, "scaled": s.scaled}


def histogram_csv(h: Histogram, meta: dict | None = None) -> str:
    rows = zip(h.bin_edges[:-1].tolist(), h.bin_edges[1:].tolist(), h.densities.tolist())
    return csv_text(["left", "right", "density"], rows, meta)


def histogram_json(h: Histogram) -> dict:
    return {"bin_edges": h.bin_edges, "densities": h.densities}


def fit_csv(f: FitReport, meta: dict | None = None) -> str:
    d = f.as_dict()
    return csv_text(list(d), [list(d.values())], meta)


def distribution_csv(dist, meta: dict | None = None) -> str:
    return csv_text(["index", "mass"], enumerate(np.asarray(dist, dtype=float).tolist()), meta)


def distribution_json(dist) -> list:
    return [float(v) for v in np.asarray(dist, dtype=float)]


def write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
