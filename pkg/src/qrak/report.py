"""Plain-text and CSV renderings of a solve report."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from .evaluator import LOG_COLUMNS, evaluation_rows
from .harness import HIDDEN
from .taxonomy import enumerate_classes

__all__ = ["history_csv", "report_text", "policy_trace_text", "legend_rows", "write_report"]


def _num(v):
    if isinstance(v, str):
        return v
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def history_csv(report) -> str:
    inst = report.instance
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_COLUMNS + ["iteration", "incumbent"] + inst.names)
    rows = evaluation_rows(report.evaluations)
    for entry, row in zip(report.history, rows):
        point = inst.point(entry.evaluation.x)
        w.writerow(row + [entry.iteration, entry.incumbent] + [_num(point[n]) for n in inst.names])
    return buf.getvalue()


def policy_trace_text(report) -> str:
    tr = report.trace
    names = [c.name for c in report.instance.constraints]
    if HIDDEN in tr.points:
        names.append(HIDDEN)
    header = ("constraint", "class", "treatment", "points", "violations")
    rows = []
    for name in names:
        if name in tr.treatments:
            rows.append((name, tr.classes[name].code, tr.treatments[name].value, str(tr.points[name]), str(tr.violations[name])))
        else:
            c = report.instance.constraint(name)
            rows.append((name, c.cls.code, report.policy[name].value, "0", "0"))
    return _table(header, rows)


def _table(header, rows):
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    lines = ["  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip() for r in [header, *rows]]
    return "\n".join(lines) + "\n"


_LEGEND = {
    "QRAK": "quantifiable relaxable a priori known",
    "NRAK": "nonquantifiable relaxable a priori known",
    "QUAK": "quantifiable unrelaxable a priori known",
    "NUAK": "nonquantifiable unrelaxable a priori known",
    "QRSK": "quantifiable relaxable simulation known",
    "NRSK": "nonquantifiable relaxable simulation known",
    "QUSK": "quantifiable unrelaxable simulation known",
    "NUSK": "nonquantifiable unrelaxable simulation known",
    "NUSH": "hidden",
}


def legend_rows() -> list:
    return [(str(c.leaf), c.code, _LEGEND[c.code]) for c in enumerate_classes()]


def legend_text() -> str:
    return _table(("leaf", "class", "meaning"), legend_rows())


def report_text(report) -> str:
    inst = report.instance
    lines = [
        f"problem: {inst.name}",
        f"status: {report.status}",
        f"stop: {report.stop_reason}",
    ]
    if report.solution is not None:
        point = report.x
        lines.append("x: " + ", ".join(f"{n}={_num(point[n])}" for n in inst.names))
        lines.append(f"f: {_num(report.solution.f)}")
        lines.append(f"h: {_num(report.solution.h)}")
    lines += [
        f"iterations: {report.iterations}",
        f"final mesh size: {_num(report.delta)}",
        f"h_max: {_num(report.h_max)}",
        f"points evaluated: {len(report.history)}",
        f"rejected a priori: {report.rejected_apriori}",
        f"hidden events: {sum(e.hidden_event for e in report.evaluations)}",
        f"simulation requests: {report.simulation_requests}",
        f"simulation cache hits: {report.cache_hits}",
        f"simulations executed: {report.simulations_executed}",
    ]
    if report.restoration_evals:
        lines.append(f"restoration evaluations: {report.restoration_evals}")
    return "\n".join(lines) + "\n"


def write_report(report, out_dir) -> dict:
    """Write history.csv, report.txt and policy_trace.txt into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "history": out / "history.csv",
        "report": out / "report.txt",
        "policy_trace": out / "policy_trace.txt",
    }
    paths["history"].write_text(history_csv(report))
    paths["report"].write_text(report_text(report))
    paths["policy_trace"].write_text(policy_trace_text(report))
    return paths
