"""Failed error propagation verdicts for one paired buggy/fixed execution."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import AlignmentMismatch, PreconditionError
from .instrument import AlignedInstrumentation
from .tracer import ExecutionOutcome, StateSnapshot, system_observation

INT_FEP = "intFEP"
EXT_FEP = "extFEP"
SYS_FEP = "sysFEP"
NO_FEP = "noFEP"
FLAG_ORDER = (INT_FEP, EXT_FEP, SYS_FEP)

UNIT = "unit"
SYS = "sys"
MODES = (UNIT, SYS)


@dataclass(frozen=True)
class VerdictSet:
    flags: frozenset = frozenset()
    detectable: bool = False
    infected: bool = False

    @property
    def no_fep(self) -> bool:
        return not self.flags

    @property
    def verdicts(self) -> list[str]:
        if not self.flags:
            return [NO_FEP]
        return [f for f in FLAG_ORDER if f in self.flags]

    def is_closed(self, mode: str) -> bool:
        if INT_FEP in self.flags and EXT_FEP not in self.flags:
            return False
        if mode == SYS and EXT_FEP in self.flags and SYS_FEP not in self.flags:
            return False
        if mode == UNIT and SYS_FEP in self.flags:
            return False
        return True


def close(flag: str, mode: str) -> VerdictSet:
    """Smallest closed verdict set containing ``flag``."""
    if mode not in MODES:
        raise PreconditionError(f"unknown mode {mode!r}")
    if flag == SYS_FEP and mode == UNIT:
        raise PreconditionError("sysFEP is only meaningful in sys mode")
    chain = FLAG_ORDER[FLAG_ORDER.index(flag):]
    if mode == UNIT:
        chain = tuple(f for f in chain if f != SYS_FEP)
    return VerdictSet(frozenset(chain), detectable=False, infected=True)


@dataclass
class PairedExecution:
    """Both versions run on one input.

    In unit mode ``buggy``/``fixed`` are the traced calls. In sys mode they
    are the whole-system outcomes and the ``*_invocations`` lists hold one
    traced outcome per dynamic call of the faulty function.
    """

    buggy: ExecutionOutcome
    fixed: ExecutionOutcome
    alignment: AlignedInstrumentation
    mode: str = UNIT
    sys_out: tuple[list[str], list[str]] | None = None
    buggy_invocations: list[ExecutionOutcome] = field(default_factory=list)
    fixed_invocations: list[ExecutionOutcome] = field(default_factory=list)
    fault_id: str = ""
    input_id: str = ""

    def to_json(self) -> dict:
        d = {
            "faultId": self.fault_id,
            "inputId": self.input_id,
            "mode": self.mode,
            "buggy": self.buggy.to_json(),
            "fixed": self.fixed.to_json(),
            "alignment": self.alignment.to_json(),
        }
        if self.mode == SYS:
            d["sysOut"] = [list(s) for s in self.observed_out()]
            d["buggyInvocations"] = [o.to_json() for o in self.buggy_invocations]
            d["fixedInvocations"] = [o.to_json() for o in self.fixed_invocations]
        return d

    @classmethod
    def from_json(cls, d: dict) -> PairedExecution:
        sys_out = d.get("sysOut")
        return cls(
            ExecutionOutcome.from_json(d["buggy"]),
            ExecutionOutcome.from_json(d["fixed"]),
            AlignedInstrumentation.from_json(d["alignment"]),
            d.get("mode", UNIT),
            (list(sys_out[0]), list(sys_out[1])) if sys_out else None,
            [ExecutionOutcome.from_json(o) for o in d.get("buggyInvocations", [])],
            [ExecutionOutcome.from_json(o) for o in d.get("fixedInvocations", [])],
            d.get("faultId", ""),
            d.get("inputId", ""),
        )

    def observed_out(self) -> tuple[list[str], list[str]]:
        if self.sys_out is not None:
            return self.sys_out
        return system_observation(self.buggy), system_observation(self.fixed)


def _check_points(trace: list[StateSnapshot], valid: set[int], side: str) -> None:
    for snap in trace:
        if snap.pp_index not in valid:
            raise AlignmentMismatch(f"{side} trace visits pp{snap.pp_index}, which is not instrumented")


def _states(b: ExecutionOutcome, f: ExecutionOutcome, alignment: AlignedInstrumentation) -> str | None:
    """Compare internal states; returns the flag they call for, if any."""
    _check_points(b.trace, {p.pp_index for p in alignment.buggy_points}, "buggy")
    _check_points(f.trace, {p.pp_index for p in alignment.fixed_points}, "fixed")
    if not b.trace or not f.trace:
        if b.trace or f.trace:
            return INT_FEP
        return None
    if b.trace[-1].bindings != f.trace[-1].bindings:
        return EXT_FEP
    corr = alignment.correspondence
    image = set(corr.values())
    b_aligned = [s for s in b.trace if s.pp_index in corr]
    f_aligned = [s for s in f.trace if s.pp_index in image]
    if [corr[s.pp_index] for s in b_aligned] != [s.pp_index for s in f_aligned]:
        return INT_FEP
    for sb, sf in zip(b_aligned[1:], f_aligned[1:]):
        if sb.bindings != sf.bindings:
            return INT_FEP
    return None


def _unit_verdict(b: ExecutionOutcome, f: ExecutionOutcome, alignment, mode: str) -> VerdictSet:
    if b.ext != f.ext:
        if mode == UNIT:
            return VerdictSet(detectable=True, infected=True)
        return close(SYS_FEP, mode)
    flag = _states(b, f, alignment)
    return close(flag, mode) if flag else VerdictSet()


def classify(pe: PairedExecution) -> VerdictSet:
    """Apply the detection-first decision order and close the result."""
    if pe.mode == UNIT:
        return _unit_verdict(pe.buggy, pe.fixed, pe.alignment, UNIT)
    if pe.mode != SYS:
        raise PreconditionError(f"unknown mode {pe.mode!r}")
    out_b, out_f = pe.observed_out()
    if out_b != out_f:
        return VerdictSet(detectable=True, infected=True)
    flags: set[str] = set()
    if len(pe.buggy_invocations) != len(pe.fixed_invocations):
        flags |= close(SYS_FEP, SYS).flags
    for b, f in zip(pe.buggy_invocations, pe.fixed_invocations):
        flags |= _unit_verdict(b, f, pe.alignment, SYS).flags
    return VerdictSet(frozenset(flags), detectable=False, infected=bool(flags))


def verdict_record(pe: PairedExecution, verdict: VerdictSet) -> dict:
    return {
        "faultId": pe.fault_id,
        "inputId": pe.input_id,
        "mode": pe.mode,
        "verdicts": verdict.verdicts,
        "detectable": verdict.detectable,
        "infected": verdict.infected,
    }
