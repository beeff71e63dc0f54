"""Per-fault FEP counts, totals, fix patterns and table rendering."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Iterable

from . import __version__
from .classifier import EXT_FEP, INT_FEP, SYS, SYS_FEP, UNIT
from .errors import MixedMode, PreconditionError
from .lang import ast as A
from .stats import ConfidenceInterval, clopper_pearson
from .treediff import CHANGE, INSERT, EditScript

CHANGE_RETURN = "ChangeReturn"
ADD_IF_RETURN = "AddIfReturn"
OTHER = "Other"


def classify_fix_pattern(script: EditScript) -> str:
    """Tag fixes whose change is bound to reach the caller.

    ChangeReturn: a return statement is changed into another return.
    AddIfReturn: an inserted if statement holds a return or throw.
    """
    if not script.nodes:
        raise PreconditionError("fix patterns need a statement-level script")
    buggy, fixed = script.nodes["buggy"], script.nodes["fixed"]
    add_if = False
    for op in script.ops:
        if op.kind == CHANGE and buggy[op.source].kind == A.RETURN and fixed[op.target].kind == A.RETURN:
            return CHANGE_RETURN
        if op.kind == INSERT:
            node = fixed[op.target]
            if node.kind == A.IF and any(n.kind in A.EXIT_KINDS for n in node.preorder()):
                add_if = True
    return ADD_IF_RETURN if add_if else OTHER


FLAGS = {UNIT: (INT_FEP, EXT_FEP), SYS: (SYS_FEP, INT_FEP, EXT_FEP)}


@dataclass
class FaultReport:
    fault_id: str
    mode: str
    executions: int = 0
    externally_detectable: int = 0
    counts: dict[str, int] = field(default_factory=dict)
    fix_pattern: str = OTHER
    project: str = ""
    has_ts: bool = True
    infected: int = 0

    def p_fep(self, flag: str) -> float:
        return self.counts.get(flag, 0) / self.executions if self.executions else 0.0

    def ci(self, flag: str, level: float = 0.95) -> ConfidenceInterval | None:
        if not self.executions:
            return None
        return clopper_pearson(self.counts.get(flag, 0), self.executions, level)

    def to_json(self) -> dict:
        flags = FLAGS[self.mode]
        out: dict[str, Any] = {
            "faultId": self.fault_id,
            "project": self.project,
            "mode": self.mode,
            "hasTS": self.has_ts,
            "executions": self.executions,
            "externallyDetectable": self.externally_detectable,
            "infected": self.infected,
        }
        for f in flags:
            out[f] = self.counts.get(f, 0)
        out["pFEP"] = {f: self.p_fep(f) for f in flags}
        out["ci"] = {f: (ci.to_json() if (ci := self.ci(f)) else None) for f in flags}
        out["fixPattern"] = self.fix_pattern
        return out


def _mode_of(records: list[dict]) -> str | None:
    modes = {r["mode"] for r in records}
    if len(modes) > 1:
        raise MixedMode(f"records mix modes {sorted(modes)}")
    return modes.pop() if modes else None


def aggregate(
    records: Iterable[dict],
    faults: Iterable[dict] = (),
) -> tuple[list[FaultReport], dict | None]:
    """Fold verdict records into one row per fault plus a totals row.

    ``faults`` optionally lists {faultId, project, fixPattern, hasTS, mode}
    so faults without any execution still get a row, in the given order.
    Without it rows follow first appearance in ``records``.
    """
    records = list(records)
    faults = list(faults)
    mode = _mode_of(records + [f for f in faults if "mode" in f])
    if mode is None:
        return [], None
    rows: dict[str, FaultReport] = {}
    for meta in faults:
        rows[meta["faultId"]] = FaultReport(
            meta["faultId"],
            mode,
            fix_pattern=meta.get("fixPattern", OTHER),
            project=meta.get("project", ""),
            has_ts=meta.get("hasTS", True),
            counts={f: 0 for f in FLAGS[mode]},
        )
    for rec in records:
        row = rows.get(rec["faultId"])
        if row is None:
            row = rows[rec["faultId"]] = FaultReport(rec["faultId"], mode, counts={f: 0 for f in FLAGS[mode]})
        row.executions += 1
        row.externally_detectable += bool(rec["detectable"])
        row.infected += bool(rec["infected"])
        for flag in rec["verdicts"]:
            if flag in row.counts:
                row.counts[flag] += 1
    reports = list(rows.values())
    return reports, totals(reports, mode)


def totals(reports: list[FaultReport], mode: str) -> dict | None:
    if not reports:
        return None
    flags = FLAGS[mode]
    n = sum(r.executions for r in reports)
    out: dict[str, Any] = {
        "faults": len(reports),
        "withTS": sum(r.has_ts for r in reports),
        "executions": n,
        "externallyDetectable": sum(r.externally_detectable for r in reports),
        "infected": sum(r.infected for r in reports),
    }
    for f in flags:
        out[f] = sum(r.counts.get(f, 0) for r in reports)
    out["pFEP"] = {f: (out[f] / n if n else 0.0) for f in flags}
    out["ci"] = {f: (clopper_pearson(out[f], n).to_json() if n else None) for f in flags}
    return out


def report_json(reports: list[FaultReport], total: dict | None, mode: str, seed: int, extra: dict | None = None) -> str:
    doc: dict[str, Any] = {
        "meta": {"mode": mode, "seed": seed, "toolVersion": __version__},
        "faults": [r.to_json() for r in reports],
        "totals": total,
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def csv_columns(mode: str) -> list[str]:
    if mode == SYS:
        head = ["Fault", "Num of Execs", "Externally Detectable", "Sys FEP", "Int FEP", "Ext FEP"]
    else:
        head = ["Fault", "Project", "With TS", "Num of Execs", "Externally Detectable", "Int FEP", "Ext FEP"]
    for f in FLAGS[mode]:
        head += [f"p {f}", f"CI low {f}", f"CI high {f}"]
    return head


def report_csv(reports: list[FaultReport], total: dict | None, mode: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_columns(mode))
    flags = FLAGS[mode]

    def tail(p: dict, ci: dict) -> list[str]:
        cells = []
        for f in flags:
            c = ci[f]
            cells += [f"{p[f]:.4f}", f"{c['low']:.4f}" if c else "", f"{c['high']:.4f}" if c else ""]
        return cells

    for r in reports:
        j = r.to_json()
        if mode == SYS:
            row = [r.fault_id, r.executions, r.externally_detectable] + [j[f] for f in flags]
        else:
            row = [r.fault_id, r.project, "yes" if r.has_ts else "no", r.executions, r.externally_detectable]
            row += [j[f] for f in flags]
        w.writerow(row + tail(j["pFEP"], j["ci"]))
    if total is not None:
        if mode == SYS:
            row = ["Total", total["executions"], total["externallyDetectable"]]
        else:
            row = ["Total", "", total["withTS"], total["executions"], total["externallyDetectable"]]
        w.writerow(row + [total[f] for f in flags] + tail(total["pFEP"], total["ci"]))
    return buf.getvalue()
