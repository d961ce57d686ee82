"""JSON and CSV persistence for current sets, traces, CDFs and run manifests."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .beamform import CurrentSet, CurrentVector, Diagnostics
from .fieldcore import Orientation, SphericalLocation

FORMAT = "magbb-current-set"
FORMAT_VERSION = 1


class FormatError(ValueError):
    """A current-set document is missing a field or has the wrong type."""

    def __init__(self, field_path: str, problem: str):
        super().__init__(f"{field_path}: {problem}")
        self.field_path = field_path


def atomic_write_text(path, text: str) -> Path:
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


def _num(x):
    x = float(x)
    return None if math.isnan(x) else x


def _unnum(x):
    return float("nan") if x is None else float(x)


def current_set_to_dict(cs: CurrentSet) -> dict:
    loc = cs.design_location
    vectors = []
    for v in cs.vectors:
        t = v.target_direction
        entry = {
            "target": None if t is None else {
                "theta_deg": t.theta_deg, "phi_deg": t.phi_deg,
                "theta_rad": t.polar, "phi_rad": t.azimuth,
            },
            "i_re": [float(x) for x in v.i.real],
            "i_im": [float(x) for x in v.i.imag],
            "diagnostics": {k: (_num(val) if isinstance(val, float) else val)
                            for k, val in v.diagnostics.to_dict().items()},
        }
        vectors.append(entry)
    return {
        "format": FORMAT,
        "format_version": FORMAT_VERSION,
        "scheme": cs.scheme,
        "n_cv": cs.n_cv,
        "seed": cs.seed,
        "design_location": {
            "r_m": loc.range, "theta_deg": loc.theta_deg, "phi_deg": loc.phi_deg,
            "theta_rad": loc.polar, "phi_rad": loc.azimuth,
        },
        "metadata": cs.metadata,
        "vectors": vectors,
    }


def dumps_current_set(cs: CurrentSet) -> str:
    return json.dumps(current_set_to_dict(cs), indent=2, allow_nan=False) + "\n"


def write_current_set(cs: CurrentSet, path) -> Path:
    return atomic_write_text(path, dumps_current_set(cs))


def _get(d, key, where, kind=None):
    if not isinstance(d, dict) or key not in d:
        raise FormatError(f"{where}.{key}" if where else key, "missing")
    val = d[key]
    if kind == "number" and (isinstance(val, bool) or not isinstance(val, (int, float))):
        raise FormatError(f"{where}.{key}" if where else key, f"expected a number, got {val!r}")
    return val


def _vec3(d, key, where):
    val = _get(d, key, where)
    if (not isinstance(val, list) or len(val) != 3
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in val)):
        raise FormatError(f"{where}.{key}", f"expected a list of 3 numbers, got {val!r}")
    return np.array(val, dtype=float)


def _angles(d, where):
    if "theta_rad" in d and "phi_rad" in d:
        return float(_get(d, "theta_rad", where, "number")), float(_get(d, "phi_rad", where, "number"))
    return (math.radians(_get(d, "theta_deg", where, "number")),
            math.radians(_get(d, "phi_deg", where, "number")) % (2.0 * math.pi))


def current_set_from_dict(doc: dict) -> CurrentSet:
    if not isinstance(doc, dict):
        raise FormatError("<root>", "expected a JSON object")
    scheme = _get(doc, "scheme", "")
    loc_doc = _get(doc, "design_location", "")
    theta, phi = _angles(loc_doc, "design_location")
    r_m = float(_get(loc_doc, "r_m", "design_location", "number"))
    try:
        location = SphericalLocation(r_m, theta, phi)
    except ValueError as exc:
        raise FormatError("design_location", str(exc)) from exc
    raw_vectors = _get(doc, "vectors", "")
    if not isinstance(raw_vectors, list) or not raw_vectors:
        raise FormatError("vectors", "expected a non-empty list")
    vectors = []
    for k, entry in enumerate(raw_vectors):
        where = f"vectors[{k}]"
        i = _vec3(entry, "i_re", where) + 1j * _vec3(entry, "i_im", where)
        tgt = entry.get("target") if isinstance(entry, dict) else None
        target = None if tgt is None else Orientation(*_angles(tgt, f"{where}.target"))
        diag_doc = entry.get("diagnostics") or {}
        diag = Diagnostics(
            alignment_error=_unnum(diag_doc.get("alignment_error")),
            rank1_ratio=_unnum(diag_doc.get("rank1_ratio")),
            feasible_voltage=bool(diag_doc.get("feasible_voltage", True)),
            imag_norm=_unnum(diag_doc.get("imag_norm", 0.0)),
            target_voltage=_unnum(diag_doc.get("target_voltage_V")),
            sdp_status=str(diag_doc.get("sdp_status", "")),
            sdp_objective=_unnum(diag_doc.get("sdp_objective")),
        )
        vectors.append(CurrentVector(i=i, target_direction=target, diagnostics=diag))
    n_cv = _get(doc, "n_cv", "", "number")
    if n_cv != len(vectors):
        raise FormatError("n_cv", f"says {n_cv} but {len(vectors)} vectors are present")
    try:
        return CurrentSet(tuple(vectors), location, scheme, doc.get("seed"), doc.get("metadata") or {})
    except ValueError as exc:
        raise FormatError("scheme", str(exc)) from exc


def read_current_set(path) -> CurrentSet:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError("<root>", f"not valid JSON ({exc})") from exc
    return current_set_from_dict(doc)


def fmt(x) -> str:
    """Full-precision, locale-independent decimal."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    return atomic_write_text(path, csv_text(header, rows))


def write_json(path, doc) -> Path:
    return atomic_write_text(path, json.dumps(doc, indent=2, allow_nan=False) + "\n")
