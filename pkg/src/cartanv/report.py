"""Canonical JSON and aligned-text rendering of a :class:`CheckReport`."""

from __future__ import annotations

import json
import math
from dataclasses import asdict
from pathlib import Path

from .suite import CheckReport


def _float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    if all(c not in text for c in ".en"):
        text += ".0"
    return text


def canonical_json(obj, indent: int = 2, level: int = 0) -> str:
    """JSON with insertion-ordered keys and floats written with 17 significant digits."""
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {canonical_json(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + canonical_json(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float(obj)
    if hasattr(obj, "item"):  # numpy scalars
        return canonical_json(obj.item(), indent, level)
    return json.dumps(str(obj))


def report_dict(report: CheckReport) -> dict:
    out = {
        "engine": report.engine,
        "version": report.version,
        "metric": report.metric,
        "config": report.config,
        "sampling": report.sampling,
        "checks": [asdict(c) for c in report.checks],
    }
    if report.error is not None:
        out["error"] = report.error
    if report.wall_ms is not None:
        out["wall_ms"] = report.wall_ms
    return out


def to_json(report: CheckReport) -> str:
    return canonical_json(report_dict(report)) + "\n"


def to_text(report: CheckReport) -> str:
    m = report.metric
    lines = [f"{report.engine} {report.version}  metric={m.get('label')}  dim={m.get('dim')}  "
             f"seed={report.config.get('seed')}  samples={report.config.get('samples')}"]
    if report.sampling:
        lines.append(f"acceptance rate {report.sampling['acceptance_rate']:.3f} "
                     f"({report.sampling['accepted']}/{report.sampling['candidates']})")
    if report.error is not None:
        lines.append(f"ERROR {report.error['type']}: {report.error['message']}")
    if report.checks:
        rows = [("check", "anchor", "max residual", "tolerance", "n", "skip", "verdict")]
        for c in report.checks:
            rows.append((c.name, c.anchor, f"{c.max_residual:.3e}", f"{c.tolerance:.1e}",
                         str(c.samples), str(c.skipped), c.verdict.upper()))
        widths = [max(len(r[k]) for r in rows) for k in range(len(rows[0]))]
        for r in rows:
            lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
        failed = sum(c.verdict != "pass" for c in report.checks)
        lines.append(f"{len(report.checks) - failed} passed, {failed} failed")
    if report.wall_ms is not None:
        lines.append(f"wall time {report.wall_ms:.0f} ms")
    return "\n".join(lines) + "\n"


def emit_report(report: CheckReport, fmt: str = "json", path: str | Path | None = None) -> str:
    text = to_json(report) if fmt == "json" else to_text(report)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
