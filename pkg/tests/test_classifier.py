"""Verdicts for paired executions and the subsumption closure."""

from __future__ import annotations

import random

import pytest

from fep.classifier import (
    EXT_FEP,
    INT_FEP,
    NO_FEP,
    SYS,
    SYS_FEP,
    UNIT,
    PairedExecution,
    VerdictSet,
    classify,
    close,
    verdict_record,
)
from fep.errors import AlignmentMismatch, PreconditionError
from fep.instrument import AlignedInstrumentation, ProgramPoint
from fep.pipeline import prepare, run_pair
from fep.tracer import ExecutionOutcome, InputVector, StateSnapshot

from .conftest import program
from .fuzz import random_paired


def example_verdict(x: int, bool_variant: bool = False) -> VerdictSet:
    prefix = "example_bool" if bool_variant else "example"
    prep = prepare(program(f"{prefix}_buggy.mlang"), program(f"{prefix}_fixed.mlang"), "f", UNIT)
    return classify(run_pair(prep, UNIT, "i", InputVector([x]), 10_000, "example"))


def align3() -> AlignedInstrumentation:
    pts = lambda v: [ProgramPoint(i, None if i == 0 else i, v) for i in range(3)]  # noqa: E731
    return AlignedInstrumentation(pts("buggy"), pts("fixed"), {0: 0, 1: 1, 2: 2})


def outcome(states, ext="r") -> ExecutionOutcome:
    return ExecutionOutcome(trace=[StateSnapshot(p, {"x": v}) for p, v in states], ext=ext)


class TestRunningExample:
    def test_x4_is_detected(self):
        v = example_verdict(4)
        assert v.no_fep and v.detectable
        assert v.verdicts == [NO_FEP]

    def test_x5_is_internal_and_external(self):
        v = example_verdict(5)
        assert v.flags == {INT_FEP, EXT_FEP}
        assert not v.detectable and v.infected

    def test_bool_variant_x4_is_external_only(self):
        v = example_verdict(4, bool_variant=True)
        assert v.flags == {EXT_FEP}
        assert not v.detectable

    def test_negative_input_not_infected_when_returns_differ(self):
        # x = -1: buggy -3 -> -2, fixed 1 -> 1; returns differ
        assert example_verdict(-1).detectable


class TestClose:
    def test_examples(self):
        assert close(INT_FEP, SYS).flags == {INT_FEP, EXT_FEP, SYS_FEP}
        assert close(EXT_FEP, UNIT).flags == {EXT_FEP}
        assert close(SYS_FEP, SYS).flags == {SYS_FEP}
        assert close(INT_FEP, UNIT).flags == {INT_FEP, EXT_FEP}

    def test_sys_flag_needs_sys_mode(self):
        with pytest.raises(PreconditionError):
            close(SYS_FEP, UNIT)

    def test_closed_sets(self):
        for mode in (UNIT, SYS):
            for flag in (INT_FEP, EXT_FEP, SYS_FEP):
                if flag == SYS_FEP and mode == UNIT:
                    continue
                assert close(flag, mode).is_closed(mode)
        assert not VerdictSet(frozenset({INT_FEP})).is_closed(UNIT)


class TestDecisionOrder:
    def test_identical_traces(self):
        b = outcome([(0, "1"), (1, "2"), (2, "3")])
        v = classify(PairedExecution(b, outcome([(0, "1"), (1, "2"), (2, "3")]), align3()))
        assert v.no_fep and not v.infected and not v.detectable

    def test_ext_difference_wins(self):
        b = outcome([(0, "1"), (1, "9"), (2, "9")], ext="a")
        f = outcome([(0, "1"), (1, "2"), (2, "3")], ext="b")
        v = classify(PairedExecution(b, f, align3()))
        assert v.detectable and v.no_fep

    def test_return_point_difference(self):
        b = outcome([(0, "1"), (1, "2"), (2, "9")])
        f = outcome([(0, "1"), (1, "2"), (2, "3")])
        assert classify(PairedExecution(b, f, align3())).flags == {EXT_FEP}

    def test_path_divergence(self):
        b = outcome([(0, "1"), (1, "2"), (2, "3")])
        f = outcome([(0, "1"), (2, "3")])
        assert classify(PairedExecution(b, f, align3())).flags == {INT_FEP, EXT_FEP}

    def test_interior_difference(self):
        b = outcome([(0, "1"), (1, "5"), (2, "3")])
        f = outcome([(0, "1"), (1, "2"), (2, "3")])
        assert classify(PairedExecution(b, f, align3())).flags == {INT_FEP, EXT_FEP}

    def test_unaligned_points_are_skipped(self):
        al = AlignedInstrumentation(
            [ProgramPoint(i, i or None, "buggy") for i in range(3)],
            [ProgramPoint(i, i or None, "fixed") for i in range(2)],
            {0: 0, 2: 1},
        )
        b = outcome([(0, "1"), (1, "7"), (2, "3")])
        f = outcome([(0, "1"), (1, "3")])
        assert classify(PairedExecution(b, f, al)).no_fep

    def test_uninstrumented_point(self):
        b = outcome([(0, "1"), (7, "2")])
        with pytest.raises(AlignmentMismatch):
            classify(PairedExecution(b, outcome([(0, "1")]), align3()))


class TestSystemMode:
    def pe(self, out_b, out_f, invs_b, invs_f):
        return PairedExecution(
            ExecutionOutcome(out=out_b), ExecutionOutcome(out=out_f), align3(), SYS,
            buggy_invocations=invs_b, fixed_invocations=invs_f,
        )

    def test_output_difference_is_detection(self):
        v = classify(self.pe(["1"], ["2"], [], []))
        assert v.detectable and v.no_fep

    def test_ext_difference_is_sys_fep(self):
        inv = lambda ext: outcome([(0, "1"), (2, "1")], ext=ext)  # noqa: E731
        v = classify(self.pe(["1"], ["1"], [inv("a")], [inv("b")]))
        assert v.flags == {SYS_FEP}

    def test_flags_union_over_invocations(self):
        same = outcome([(0, "1"), (1, "1"), (2, "1")])
        inner = outcome([(0, "1"), (1, "5"), (2, "1")])
        v = classify(self.pe(["1"], ["1"], [same, inner], [same, same]))
        assert v.flags == {INT_FEP, EXT_FEP, SYS_FEP}

    def test_call_count_mismatch(self):
        same = outcome([(0, "1")])
        assert classify(self.pe(["1"], ["1"], [same, same], [same])).flags == {SYS_FEP}

    def test_status_is_part_of_observation(self):
        b = ExecutionOutcome(out=["1"], status="error:throw")
        v = classify(PairedExecution(b, ExecutionOutcome(out=["1"]), align3(), SYS))
        assert v.detectable


class TestRecords:
    def test_record_shape(self):
        pe = PairedExecution(outcome([(0, "1")]), outcome([(0, "1")]), align3(), fault_id="F", input_id="i1")
        rec = verdict_record(pe, classify(pe))
        assert rec == {
            "faultId": "F", "inputId": "i1", "mode": UNIT,
            "verdicts": [NO_FEP], "detectable": False, "infected": False,
        }

    def test_json_round_trip_reclassifies(self):
        rng = random.Random(5)
        for _ in range(200):
            pe = random_paired(rng)
            assert classify(PairedExecution.from_json(pe.to_json())) == classify(pe)

    def test_fuzzed_verdicts_are_closed(self):
        rng = random.Random(9)
        for _ in range(2000):
            pe = random_paired(rng)
            v = classify(pe)
            assert v.is_closed(pe.mode)
            assert v.no_fep == (v.verdicts == [NO_FEP])
            if v.detectable:
                assert v.no_fep
