"""CSV and JSON serialization of profiles and reports.

Floats are written with ``repr`` (shortest round-trip decimal), so a profile
written and read back is bit-identical and output is byte-stable.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .soliton import RadialProfile, SolitonParams

PROFILE_COLUMNS = ("t", "phi", "phi1", "phi2", "phi3")
HEADER_PREFIX = "# "


def format_value(value):
    """Deterministic text for one CSV cell."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def write_table(rows, columns, stream=None):
    """Write dict rows as RFC-4180 CSV; returns the text when ``stream`` is None."""
    out = io.StringIO() if stream is None else stream
    writer = csv.writer(out, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[c]) for c in columns])
    return out.getvalue() if stream is None else None


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(payload):
    """Stable JSON text (sorted keys; non-finite floats become null)."""

    def clean(obj):
        if isinstance(obj, dict):
            return {str(k): clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
            return None
        return obj

    return json.dumps(clean(payload), sort_keys=True, indent=2, default=_json_default) + "\n"


def profile_header(profile):
    return {
        "n": profile.n,
        "lambda": None if profile.params is None else profile.params.lam,
        "gauge": profile.gauge,
        "kind": profile.kind,
        "s": profile.s,
    }


def write_profile(profile, stream=None):
    """Profile CSV: a ``# {json}`` metadata line, then t, phi and three derivatives."""
    out = io.StringIO() if stream is None else stream
    out.write(HEADER_PREFIX + json.dumps(profile_header(profile), sort_keys=True) + "\r\n")
    cols = [getattr(profile, c) for c in PROFILE_COLUMNS]
    rows = ({c: col[i] for c, col in zip(PROFILE_COLUMNS, cols)} for i in range(len(profile)))
    write_table(rows, PROFILE_COLUMNS, out)
    return out.getvalue() if stream is None else None


def read_profile(stream):
    """Inverse of :func:`write_profile`; accepts text or a file object.

    Raises
    ------
    ValueError
        on a missing or malformed header or columns.
    """
    text = stream if isinstance(stream, str) else stream.read()
    first, _, body = text.partition("\n")
    if not first.startswith(HEADER_PREFIX):
        raise ValueError("profile CSV lacks its metadata line")
    try:
        meta = json.loads(first[len(HEADER_PREFIX):])
    except json.JSONDecodeError as exc:
        raise ValueError(f"bad profile metadata: {exc}") from exc
    reader = csv.reader(io.StringIO(body))
    header = next(reader, None)
    if header is None or tuple(header) != PROFILE_COLUMNS:
        raise ValueError(f"profile columns must be {','.join(PROFILE_COLUMNS)}")
    data = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValueError("profile CSV needs at least two rows")
    kind = meta.get("kind")
    params = None
    if kind == "soliton":
        params = SolitonParams(int(meta["n"]), float(meta["lambda"]))
    elif kind != "custom":
        raise ValueError(f"unknown profile kind {kind!r}")
    s = meta.get("s")
    return RadialProfile(
        *data.T, int(meta["n"]), params, float(meta.get("gauge", 0.0)), None if s is None else float(s)
    )
