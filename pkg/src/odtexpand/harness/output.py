"""CSV emission and run manifests."""
from dataclasses import dataclass, field
import hashlib
import json
import math
import os
from typing import Dict, List, Sequence

import numpy as np

CODE_VERSION = "0.1.0"


def format_value(v) -> str:
    """12 significant digits for reals; ints and strings verbatim."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.12g}"
    if isinstance(v, complex):
        raise TypeError("split complex values into real columns before writing")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return format_value(v) if not math.isfinite(v) else float(format_value(v))
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


@dataclass
class RunManifest:
    """Resolved parameters, unit conversions and per-point diagnostics."""

    name: str
    parameters: dict
    units: dict = field(default_factory=dict)
    points: List[dict] = field(default_factory=list)
    version: str = CODE_VERSION

    def to_json(self) -> str:
        body = {"name": self.name, "version": self.version, "parameters": self.parameters,
                "units": self.units, "points": self.points}
        return json.dumps(_jsonable(body), sort_keys=True, separators=(",", ":"))

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")


def csv_text(columns: Sequence[str], rows: Sequence[Sequence], meta: Dict[str, object]) -> str:
    lines = [f"# {k}: {format_value(v)}" for k, v in meta.items()]
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row length does not match the header")
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, columns, rows, meta=None, manifest: RunManifest = None):
    """Write a CSV whose '#' header names units and the manifest hash."""
    meta = dict(meta or {})
    if manifest is not None:
        meta["manifest_sha256"] = manifest.sha256
    d = os.path.dirname(os.fspath(path))
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(columns, rows, meta))
    return path


def read_csv(path):
    """(meta, columns, rows as float-or-str) for files written by :func:`write_csv`."""
    meta, columns, rows = {}, None, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                k, _, v = line[1:].partition(":")
                meta[k.strip()] = v.strip()
            elif columns is None:
                columns = line.split(",")
            elif line:
                rows.append([_maybe_float(x) for x in line.split(",")])
    return meta, columns, rows


def _maybe_float(x):
    try:
        return float(x)
    except ValueError:
        return x
