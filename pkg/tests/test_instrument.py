"""Program point placement and the buggy/fixed correspondence."""

from __future__ import annotations

import pytest

from fep.errors import MisalignedScript
from fep.instrument import instrument_pair
from fep.lang import ast as A
from fep.lang import parse
from fep.treediff import DELETE, EditOp, EditScript, diff_functions

from .conftest import program


def align(buggy: str, fixed: str, fn: str = "test"):
    a, b = program(buggy).function(fn), program(fixed).function(fn)
    return a, b, instrument_pair(a, b, diff_functions(a, b).statement_script)


def indexes(points):
    return [p.pp_index for p in points]


class TestVersionCorrespondence:
    def test_changed_statement(self):
        _, _, al = align("versions_a.mlang", "versions_b.mlang")
        assert indexes(al.buggy_points) == [0, 1, 2]
        assert indexes(al.fixed_points) == [0, 1, 2]
        assert al.correspondence == {0: 0, 1: 1, 2: 2}

    def test_inserted_statement(self):
        _, b, al = align("versions_a.mlang", "versions_c.mlang")
        assert al.correspondence == {0: 0, 1: 1, 2: 2}
        inserted = next(s for s in A.block_statements(b.body) if s.line == 3)
        assert al.fixed_points[1].anchor == inserted.node_id
        assert al.fixed_points[1].line == 3

    def test_deleted_statement(self):
        _, _, al = align("versions_a.mlang", "versions_d.mlang")
        assert indexes(al.buggy_points) == [0, 1, 2]
        assert indexes(al.fixed_points) == [0, 1]
        assert al.correspondence == {0: 0, 2: 1}
        assert 1 not in al.correspondence

    def test_identical_functions(self):
        _, _, al = align("versions_a.mlang", "versions_a.mlang")
        assert [p.anchor for p in al.buggy_points] == [p.anchor for p in al.fixed_points]
        assert al.correspondence == {i: i for i in range(len(al.buggy_points))}


class TestPlacement:
    def test_example_points(self):
        a, _, al = align("example_buggy.mlang", "example_fixed.mlang", "f")
        assert [p.line for p in al.buggy_points] == [0, 2, 4, 6, 6]
        assert al.correspondence == {i: i for i in range(5)}

    def test_no_points_on_exits_or_in_loops(self):
        for buggy, fixed, fn in [
            ("propagate_buggy.mlang", "propagate_fixed.mlang", "chiSquare"),
            ("addif_throw_buggy.mlang", "addif_throw_fixed.mlang", "average"),
            ("pipeline_buggy.mlang", "pipeline_fixed.mlang", "fold"),
        ]:
            a, b, al = align(buggy, fixed, fn)
            for fn_def, points in ((a, al.buggy_points), (b, al.fixed_points)):
                index = {n.node_id: n for n in fn_def.body.preorder()}
                in_loops = {
                    n.node_id
                    for loop in fn_def.body.preorder()
                    if loop.kind in A.LOOP_KINDS
                    for n in loop.children[-1].preorder()
                }
                for p in points[1:]:
                    assert index[p.anchor].kind not in A.EXIT_KINDS
                    assert p.anchor not in in_loops

    def test_correspondence_is_monotone(self):
        for buggy, fixed, fn in [
            ("versions_a.mlang", "versions_d.mlang", "test"),
            ("addif_return_buggy.mlang", "addif_return_fixed.mlang", "fromFields"),
            ("rewriter_init_buggy.mlang", "rewriter_fixed.mlang", "simplify"),
        ]:
            _, _, al = align(buggy, fixed, fn)
            pairs = sorted(al.correspondence.items())
            assert pairs[0] == (0, 0)
            assert [f for _, f in pairs] == sorted(f for _, f in pairs)

    def test_trailing_insert_adds_no_point(self):
        a = parse("fn f(x: int) -> int { x = x + 1; return x; }").function("f")
        b = parse("fn f(x: int) -> int { x = x + 1; if (x > 5) { return 0; } return x; }").function("f")
        al = instrument_pair(a, b, diff_functions(a, b).statement_script)
        assert len(al.fixed_points) == 2
        assert al.correspondence == {0: 0, 1: 1}

    def test_unknown_node_is_misaligned(self):
        a = program("versions_a.mlang").function("test")
        bogus = EditScript(ops=[EditOp(DELETE, 9999, None)], cost=1)
        with pytest.raises(MisalignedScript):
            instrument_pair(a, a, bogus)

    def test_json_round_trip(self):
        _, _, al = align("versions_a.mlang", "versions_d.mlang")
        from fep.instrument import AlignedInstrumentation

        assert AlignedInstrumentation.from_json(al.to_json()) == al
