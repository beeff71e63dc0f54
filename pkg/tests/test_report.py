"""Aggregation, fix-pattern tags and report rendering."""

from __future__ import annotations

import csv
import io
import json
import random

import pytest

from fep.classifier import EXT_FEP, INT_FEP, NO_FEP, SYS, SYS_FEP, UNIT
from fep.errors import MixedMode
from fep.lang import parse
from fep.report import (
    ADD_IF_RETURN,
    CHANGE_RETURN,
    OTHER,
    aggregate,
    classify_fix_pattern,
    csv_columns,
    report_csv,
    report_json,
)
from fep.treediff import diff_functions

from .conftest import program


def rec(fault: str, verdicts, mode=UNIT, detectable=False) -> dict:
    return {
        "faultId": fault, "inputId": "i", "mode": mode, "verdicts": list(verdicts),
        "detectable": detectable, "infected": verdicts != [NO_FEP],
    }


def pattern(buggy: str, fixed: str, fn: str = "f") -> str:
    a, b = parse(buggy).function(fn), parse(fixed).function(fn)
    return classify_fix_pattern(diff_functions(a, b).statement_script)


class TestAggregate:
    def test_counts_and_totals(self):
        rng = random.Random(3)
        choices = [[NO_FEP], [EXT_FEP], [INT_FEP, EXT_FEP]]
        records = []
        for fault in ("A", "B", "C"):
            for _ in range(rng.randint(5, 30)):
                v = rng.choice(choices)
                records.append(rec(fault, v, detectable=(v == [NO_FEP] and rng.random() < 0.5)))
        reports, total = aggregate(records)
        assert [r.fault_id for r in reports] == ["A", "B", "C"]
        for r in reports:
            mine = [x for x in records if x["faultId"] == r.fault_id]
            assert r.executions == len(mine)
            assert r.counts[INT_FEP] == sum(INT_FEP in x["verdicts"] for x in mine)
            assert r.counts[EXT_FEP] == sum(EXT_FEP in x["verdicts"] for x in mine)
            assert r.counts[INT_FEP] <= r.counts[EXT_FEP] <= r.executions
            assert r.p_fep(EXT_FEP) == r.counts[EXT_FEP] / r.executions
        for key in ("executions", "externallyDetectable", INT_FEP, EXT_FEP):
            col = [r.to_json()[key] for r in reports]
            assert total[key] == sum(col)

    def test_empty(self):
        assert aggregate([]) == ([], None)

    def test_all_no_fep(self):
        reports, total = aggregate([rec("A", [NO_FEP]) for _ in range(7)])
        j = reports[0].to_json()
        assert j["pFEP"] == {INT_FEP: 0.0, EXT_FEP: 0.0}
        assert j["ci"][INT_FEP]["low"] == 0.0
        assert total["ci"][EXT_FEP]["low"] == 0.0

    def test_mixed_mode(self):
        with pytest.raises(MixedMode):
            aggregate([rec("A", [NO_FEP]), rec("B", [NO_FEP], mode=SYS)])

    def test_fault_without_executions_keeps_row(self):
        reports, total = aggregate([], [{"faultId": "Z", "mode": UNIT, "hasTS": False}])
        assert reports[0].executions == 0 and not reports[0].has_ts
        assert reports[0].to_json()["ci"][EXT_FEP] is None
        assert total["withTS"] == 0

    def test_sys_flags(self):
        reports, _ = aggregate([rec("S", [SYS_FEP], mode=SYS), rec("S", [INT_FEP, EXT_FEP, SYS_FEP], mode=SYS)])
        assert reports[0].counts == {SYS_FEP: 2, INT_FEP: 1, EXT_FEP: 1}


class TestFixPattern:
    def test_change_return(self):
        assert pattern(
            "fn f(x: int) -> int { x = x + 1; return x; }",
            "fn f(x: int) -> int { x = x + 1; return x + 1; }",
        ) == CHANGE_RETURN

    def test_add_if_return(self):
        assert pattern(
            "fn f(x: int) -> int { x = x + 1; return x; }",
            "fn f(x: int) -> int { if (x < 0) { return 0; } x = x + 1; return x; }",
        ) == ADD_IF_RETURN

    def test_add_if_throw(self):
        assert pattern(
            "fn f(x: int) -> int { x = x + 1; return x; }",
            'fn f(x: int) -> int { if (x < 0) { throw "neg"; } x = x + 1; return x; }',
        ) == ADD_IF_RETURN

    def test_added_if_without_exit(self):
        assert pattern(
            "fn f(x: int) -> int { x = x + 1; return x; }",
            "fn f(x: int) -> int { if (x < 0) { x = 0; } x = x + 1; return x; }",
        ) == OTHER

    def test_change_return_wins(self):
        assert pattern(
            "fn f(x: int) -> int { x = x + 1; return x; }",
            "fn f(x: int) -> int { if (x < 0) { return 0; } x = x + 1; return x * 2; }",
        ) == CHANGE_RETURN

    def test_all_keep(self):
        a = program("versions_a.mlang").function("test")
        assert classify_fix_pattern(diff_functions(a, a).statement_script) == OTHER


class TestRendering:
    def test_csv_columns(self):
        assert csv_columns(UNIT)[:7] == [
            "Fault", "Project", "With TS", "Num of Execs", "Externally Detectable", "Int FEP", "Ext FEP",
        ]
        assert csv_columns(SYS)[:6] == [
            "Fault", "Num of Execs", "Externally Detectable", "Sys FEP", "Int FEP", "Ext FEP",
        ]

    def test_csv_rows(self):
        records = [rec("A", [INT_FEP, EXT_FEP]), rec("A", [NO_FEP], detectable=True), rec("A", [EXT_FEP])]
        reports, total = aggregate(records)
        rows = list(csv.reader(io.StringIO(report_csv(reports, total, UNIT))))
        assert rows[1][:7] == ["A", "", "yes", "3", "1", "1", "2"]
        assert rows[1][7] == "0.3333"
        assert rows[-1][0] == "Total"

    def test_json_shape(self):
        reports, total = aggregate([rec("A", [EXT_FEP])])
        doc = json.loads(report_json(reports, total, UNIT, seed=42))
        assert doc["meta"]["mode"] == UNIT and doc["meta"]["seed"] == 42
        assert doc["faults"][0]["pFEP"][EXT_FEP] == 1.0
        assert doc["totals"]["executions"] == 1
