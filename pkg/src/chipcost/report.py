"""Report serialization: canonical JSON and delimited breakdown rows.

Output is byte-deterministic for identical inputs: keys are sorted,
floats go through repr (JSON) or 9 significant digits (CSV), and
infinite costs are tagged rather than emitted as non-standard JSON.
"""
from __future__ import annotations

import csv
import io
import json
import math

from .engine import CostReport, NodeCosts

SCHEMA_VERSION = 1
CATEGORIES = ("silicon", "assembly", "test", "scrap", "nre")


def _num(value: float):
    return value if math.isfinite(value) else None


def _node_dict(n: NodeCosts) -> dict:
    return {
        "name": n.name,
        "path": n.path,
        "area_mm2": _num(n.area),
        "power_w": _num(n.power),
        "cost_die": _num(n.cost_die),
        "cost_test_self": _num(n.cost_test_self),
        "cost_test_assembly": _num(n.cost_test_assembly),
        "cost_assembly": _num(n.cost_assembly),
        "cost_re_self": _num(n.cost_re_self),
        "cost_re": _num(n.cost_re),
        "cost_nre_self": _num(n.cost_nre_self),
        "cost_nre": _num(n.cost_nre),
        "cost_scrap": _num(n.cost_scrap),
        "yield_die": _num(n.yield_die),
        "yield_tested_self": _num(n.yield_tested_self),
        "quality_self": _num(n.quality_self),
        "yield_assembly": _num(n.yield_assembly),
        "yield_child_quality": _num(n.yield_child_quality),
        "yield_tested_assembly": _num(n.yield_tested_assembly),
        "yield_chip": _num(n.yield_chip),
        "quality_shipped": _num(n.quality_shipped),
        "infeasible": n.infeasible,
    }


def report_to_dict(report: CostReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "cost_total": _num(report.cost_total),
        "cost_re": _num(report.cost_re),
        "cost_nre": _num(report.cost_nre),
        "breakdown": {k: _num(v) for k, v in report.breakdown.items()},
        "yield_chip": _num(report.root.yield_chip),
        "quality_shipped": _num(report.root.quality_shipped),
        "area_mm2": _num(report.root.area),
        "power_w": _num(report.root.power),
        "infeasible": report.infeasible,
        "infeasible_paths": list(report.infeasible_paths),
        "nodes": [_node_dict(n) for n in report.nodes],
    }


def report_to_json(report: CostReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True,
                      allow_nan=False) + "\n"


def breakdown_rows(report: CostReport) -> list[tuple[str, str, float]]:
    """(node path, category, USD) rows whose values sum to the total."""
    rows = []
    for n in report.nodes:
        rows.append((n.path, "silicon", n.cost_die))
        rows.append((n.path, "assembly", n.cost_assembly))
        rows.append((n.path, "test", n.cost_test_self + n.cost_test_assembly))
        rows.append((n.path, "scrap", n.cost_scrap))
        rows.append((n.path, "nre", n.cost_nre_self))
    return rows


def format_value(value: float) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    return format(value, ".9g")


def report_to_csv(report: CostReport) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: chipcost-report-{SCHEMA_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["node", "category", "cost_usd"])
    for path, category, value in breakdown_rows(report):
        writer.writerow([path, category, format_value(value)])
    writer.writerow(["TOTAL", "total", format_value(report.cost_total)])
    return buf.getvalue()
