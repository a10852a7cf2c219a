"""CSV and JSON serialization for records, fields, spectra, reports and scans.

Floats are written with 17 significant digits so every value round-trips
exactly.  JSON documents carry a ``meta`` block with the tool version, a
configuration hash and the grid description; nothing time-dependent is
written, so identical inputs give byte-identical files.
"""

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .exceptions import ValidationError
from .model import PassiveRecord

PASSIVE_HEADER = ("k", "im_phi_0", "im_phi_1")
FIELD_HEADER = ("x", "re_phi", "im_phi")
EIGEN_HEADER = ("j", "mu", "phi0", "phi1")
COEFF_HEADER = ("j", "mu", "f_j")
STRIP_HEADER = ("re_k", "im_k", "re_F", "im_F")


def fmt(value):
    """Shortest text for ints, 17 significant digits for floats."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def read_csv(path, header):
    """Numeric body of a CSV whose first row must equal ``header``."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(c.strip() for c in rows[0]) != tuple(header):
        raise ValidationError("BAD_FILE", f"{path}: expected header {','.join(header)}")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    except ValueError as err:
        raise ValidationError("BAD_FILE", f"{path}: {err}") from None
    return data.reshape(-1, len(header))


# ---------------------------------------------------------------------------
# records and fields


def write_passive_csv(path, records):
    return write_csv(path, PASSIVE_HEADER, ((r.k, r.im_phi_0, r.im_phi_1) for r in records))


def read_passive_csv(path):
    return [PassiveRecord(*row) for row in read_csv(path, PASSIVE_HEADER)]


def write_field_csv(path, field):
    phi = np.asarray(field.phi_values)
    rows = zip(field.grid.nodes.tolist(), phi.real.tolist(), phi.imag.tolist())
    return write_csv(path, FIELD_HEADER, rows)


def write_eigensystem_csv(path, eigensystem):
    rows = ((p.j, p.mu, p.boundary_0, p.boundary_1) for p in eigensystem.pairs)
    return write_csv(path, EIGEN_HEADER, rows)


def write_eigenvectors(path, eigensystem):
    """Full eigenvector matrix: one row per node, ``x`` then ``phi_1 .. phi_J``."""
    grid = eigensystem.medium.grid
    header = ["x"] + [f"phi_{p.j}" for p in eigensystem.pairs]
    modes = eigensystem.modes
    rows = ([x] + modes[i].tolist() for i, x in enumerate(grid.nodes.tolist()))
    return write_csv(path, header, rows)


def write_coefficients_csv(path, coeffs, eigensystem):
    rows = ((j, eigensystem.pair(j).mu, fj) for j, fj in coeffs.coeffs)
    return write_csv(path, COEFF_HEADER, rows)


def write_strip_csv(path, strip):
    z, F = np.asarray(strip.k_grid), np.asarray(strip.F_values)
    return write_csv(path, STRIP_HEADER, zip(z.real.tolist(), z.imag.tolist(), F.real.tolist(),
                                             F.imag.tolist()))


def write_harmonic_measure_csv(path, field):
    """Matrix layout: header ``y`` then the ``x`` nodes; one row per ``y`` node."""
    header = ["y"] + [fmt(x) for x in field.x.tolist()]
    rows = ([y] + field.w_values[i].tolist() for i, y in enumerate(field.y.tolist()))
    return write_csv(path, header, rows)


# ---------------------------------------------------------------------------
# JSON


def jsonable(obj):
    """Plain JSON types; complex numbers become ``[re, im]``, non-finite floats strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(float(obj.real)), jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def config_hash(text):
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def grid_metadata(grid):
    return {"n_cells": grid.n_cells, "n_nodes": grid.n_nodes, "spacing": grid.spacing}


def write_json(path, payload, *, version, cfg_hash, grid=None, extra_meta=None):
    """Write ``payload`` with a ``meta`` block; keys are sorted for stable output."""
    meta = {"tool_version": version, "config_hash": cfg_hash}
    meta["grid"] = grid_metadata(grid) if grid is not None else None
    meta.update(extra_meta or {})
    doc = dict(jsonable(payload))
    doc["meta"] = jsonable(meta)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
