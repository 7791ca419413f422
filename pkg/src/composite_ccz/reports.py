"""Versioned JSON reports and CSV summaries."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from typing import Any, Mapping, Sequence

from . import __version__

REPORT_SCHEMA = 1
TOOL_NAME = "composite-ccz"


def _plain(obj: Any) -> Any:
    """Convert numpy scalars, tuples and sets into JSON-native values."""
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_plain(v) for v in obj)
    if hasattr(obj, "item") and callable(obj.item):
        return obj.item()
    return obj


def make_report(command: str, config: Mapping[str, Any], results: Mapping[str, Any],
                circuit_hash: str | None = None, status: str = "ok") -> dict:
    """Assemble a report; ``report_hash`` covers every other field."""
    body = {
        "tool": TOOL_NAME,
        "version": __version__,
        "schema": REPORT_SCHEMA,
        "command": command,
        "status": status,
        "circuit_hash": circuit_hash,
        "seed": _plain(config.get("seed")),
        "config": _plain(dict(config)),
        "results": _plain(dict(results)),
    }
    body["report_hash"] = hashlib.sha256(_canonical(body).encode()).hexdigest()
    return body


def _canonical(obj: Mapping) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def to_json(report: Mapping) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def flatten(obj: Mapping, prefix: str = "") -> dict[str, Any]:
    """Dotted-key view of nested results; lists of scalars are joined with ';'."""
    out: dict[str, Any] = {}
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(flatten(v, key + "."))
        elif isinstance(v, list):
            if all(not isinstance(x, (Mapping, list)) for x in v):
                out[key] = ";".join(str(x) for x in v)
            else:
                out[key] = json.dumps(v, sort_keys=True, separators=(",", ":"))
        else:
            out[key] = v
    return out


def to_csv(report: Mapping, rows: Sequence[Mapping] | None = None) -> str:
    """CSV summary derived from the JSON report.

    With ``rows`` (a table such as one line per weight) each row becomes a CSV
    line; otherwise the flattened results become ``key,value`` lines.
    """
    buf = io.StringIO()
    if rows:
        fields = list(dict.fromkeys(k for r in rows for k in flatten(r)))
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(flatten(r))
    else:
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in flatten({"command": report["command"], "circuit_hash": report["circuit_hash"],
                             "seed": report["seed"], **report["results"]}).items():
            w.writerow([k, v])
    return buf.getvalue()
