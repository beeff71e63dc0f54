"""Zhang-Shasha distance, edit scripts and their statement-level lift."""

from __future__ import annotations

import random

import pytest

from fep.lang import parse
from fep.treediff import (
    CHANGE,
    DELETE,
    INSERT,
    KEEP,
    EditOp,
    apply_mapping,
    diff_functions,
    shape,
    tree_edit_distance,
    zhang_shasha,
)

from .conftest import program
from .tree_oracle import Node, all_trees, brute_force_distance, build

KIDS = lambda n: n.kids  # noqa: E731
LABEL = lambda n: n.label  # noqa: E731


def ted(a: Node, b: Node):
    return zhang_shasha(a, b, KIDS, LABEL)


def random_tree(rng: random.Random, size: int, alphabet="abc") -> tuple:
    """Random ordered tree with ``size`` nodes, attached under random earlier nodes."""
    nodes = [[rng.choice(alphabet), []]]
    for _ in range(size - 1):
        rng.choice(nodes)[1].append(len(nodes))
        nodes.append([rng.choice(alphabet), []])

    def freeze(i):
        return (nodes[i][0], tuple(freeze(k) for k in nodes[i][1]))

    return freeze(0)


def _statement_ops(buggy: str, fixed: str):
    a, b = program(buggy).function("test"), program(fixed).function("test")
    script = diff_functions(a, b).statement_script
    return [(op.kind, script.text["buggy"].get(op.source), script.text["fixed"].get(op.target)) for op in script.ops], script


class TestVersionScripts:
    def test_changed_statement(self):
        ops, script = _statement_ops("versions_a.mlang", "versions_b.mlang")
        assert ops == [
            (KEEP, "int y = x + 1;", "int y = x + 1;"),
            (CHANGE, "y = y % 2;", "y = y % 3;"),
            (KEEP, "return y;", "return y;"),
        ]
        assert script.cost == 1

    def test_inserted_statement(self):
        ops, _ = _statement_ops("versions_a.mlang", "versions_c.mlang")
        assert [k for k, _, _ in ops] == [KEEP, INSERT, KEEP, KEEP]
        assert ops[1] == (INSERT, None, "y = y * 3;")

    def test_deleted_statement(self):
        ops, _ = _statement_ops("versions_a.mlang", "versions_d.mlang")
        assert [k for k, _, _ in ops] == [KEEP, DELETE, KEEP]
        assert ops[1] == (DELETE, "y = y % 2;", None)

    def test_identical_is_all_keep(self):
        ops, script = _statement_ops("versions_a.mlang", "versions_a.mlang")
        assert {k for k, _, _ in ops} == {KEEP}
        assert script.cost == 0

    def test_node_level_change_is_one_relabel(self):
        a = program("versions_a.mlang").function("test").body
        b = program("versions_b.mlang").function("test").body
        script = tree_edit_distance(a, b)
        assert script.cost == 1
        assert script.kinds().count(CHANGE) == 1


class TestEditScriptInvariants:
    @pytest.mark.parametrize(
        "buggy, fixed, fn",
        [
            ("example_buggy.mlang", "example_fixed.mlang", "f"),
            ("addif_return_buggy.mlang", "addif_return_fixed.mlang", "fromFields"),
            ("addif_throw_buggy.mlang", "addif_throw_fixed.mlang", "average"),
            ("propagate_buggy.mlang", "propagate_fixed.mlang", "chiSquare"),
            ("rewriter_offset_buggy.mlang", "rewriter_fixed.mlang", "simplify"),
        ],
    )
    def test_every_node_in_exactly_one_op(self, buggy, fixed, fn):
        a, b = program(buggy).function(fn).body, program(fixed).function(fn).body
        script = tree_edit_distance(a, b)
        sources = [op.source for op in script.ops if op.source is not None]
        targets = [op.target for op in script.ops if op.target is not None]
        assert sorted(sources) == sorted(n.node_id for n in a.preorder())
        assert sorted(targets) == sorted(n.node_id for n in b.preorder())
        assert script.cost == sum(op.kind != KEEP for op in script.ops)

    def test_op_shapes_are_checked(self):
        with pytest.raises(AssertionError):
            EditOp(KEEP, 1, None)
        with pytest.raises(ValueError):
            EditOp("MOVE", 1, 2)

    def test_script_replays_to_fixed_tree(self):
        a = parse("fn f(x: int) -> int { int y = x; if (y > 0) { y = 1; } return y; }").function("f").body
        b = parse("fn f(x: int) -> int { if (x > 1) { x = 2; x = 3; } return x * 2; }").function("f").body
        m = zhang_shasha(a, b)
        assert apply_mapping(a, b, m) == shape(b)


class TestOracle:
    def test_exhaustive_small_pairs(self):
        """Every pair with at most five nodes in total."""
        trees = {n: all_trees(n) for n in range(1, 5)}
        for n1 in range(1, 5):
            for n2 in range(1, 6 - n1):
                for x in trees[n1]:
                    bx = build(x)
                    for y in trees[n2]:
                        assert ted(bx, build(y)).cost == brute_force_distance(x, y), (x, y)

    def test_random_pairs_up_to_six_nodes_each(self):
        rng = random.Random(7)
        for _ in range(400):
            x = random_tree(rng, rng.randint(1, 6))
            y = random_tree(rng, rng.randint(1, 6))
            assert ted(build(x), build(y)).cost == brute_force_distance(x, y), (x, y)

    def test_mapping_replays_on_random_trees(self):
        rng = random.Random(11)
        for _ in range(500):
            a, b = build(random_tree(rng, rng.randint(1, 9))), build(random_tree(rng, rng.randint(1, 9)))
            m = ted(a, b)
            assert apply_mapping(a, b, m, KIDS, LABEL) == shape(b, KIDS, LABEL)
            assert m.cost == len(m.deleted) + len(m.inserted) + sum(x.label != y.label for x, y in m.pairs)


class TestMetricProperties:
    def test_identity(self):
        rng = random.Random(1)
        for _ in range(100):
            t = random_tree(rng, rng.randint(1, 12))
            m = ted(build(t), build(t))
            assert m.cost == 0 and not m.deleted and not m.inserted

    def test_symmetry(self):
        rng = random.Random(2)
        for _ in range(200):
            x, y = random_tree(rng, rng.randint(1, 10)), random_tree(rng, rng.randint(1, 10))
            ab, ba = ted(build(x), build(y)), ted(build(y), build(x))
            assert ab.cost == ba.cost
            assert ab.renames == ba.renames

    def test_triangle(self):
        rng = random.Random(3)
        for _ in range(200):
            x, y, z = (build(random_tree(rng, rng.randint(1, 8))) for _ in range(3))
            assert ted(x, z).cost <= ted(x, y).cost + ted(y, z).cost

    def test_empty_edges(self):
        one = build(("a", ()))
        assert ted(one, build(("b", ()))).cost == 1
        assert ted(one, build(("a", (("a", ()), ("a", ()))))).cost == 2
