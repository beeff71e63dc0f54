"""Deterministic MiniLang execution with state snapshots at program points."""

from __future__ import annotations

import json
import operator
import sys
from dataclasses import dataclass, field
from typing import Any, Iterable

from .errors import InvalidInput
from .instrument import ProgramPoint
from .lang import ast as A
from .lang.ast import AstNode, SourceUnit, TypeTag

DEFAULT_STEP_BUDGET = 1_000_000
DEFAULT_MAX_DEPTH = 100
MAX_ARRAY_LEN = 1_000_000

_MASK = (1 << 64) - 1
_SIGN = 1 << 63


def wrap(v: int) -> int:
    """64-bit two's-complement wrap-around."""
    v &= _MASK
    return v - (1 << 64) if v & _SIGN else v


def canonical_text(value: Any) -> str:
    # bool before int: True is an int in Python
    if value is True:
        return "true"
    if value is False:
        return "false"
    if value is None:
        return "null"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, list):
        return "[" + ",".join(str(v) for v in value) + "]"
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def canonical_serialize(value: Any) -> bytes:
    """Canonical bytes for a MiniLang value; equal values give equal bytes."""
    return canonical_text(value).encode("utf-8")


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# data


@dataclass
class InputVector:
    args: list[Any]
    globals_init: dict[str, Any] | None = None

    def to_json(self) -> dict:
        d: dict[str, Any] = {"args": _plain(self.args)}
        if self.globals_init:
            d["globals"] = _plain(self.globals_init)
        return d

    @classmethod
    def from_json(cls, d: dict) -> InputVector:
        return cls(list(d.get("args", [])), d.get("globals"))

    def key(self) -> str:
        return canonical_json(self.to_json())


def _plain(v):
    if isinstance(v, list):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


@dataclass
class StateSnapshot:
    pp_index: int
    bindings: dict[str, str]

    def to_json(self) -> dict:
        return {"ppIndex": self.pp_index, "bindings": self.bindings}

    @classmethod
    def from_json(cls, d: dict) -> StateSnapshot:
        return cls(int(d["ppIndex"]), dict(d["bindings"]))


@dataclass
class ExecutionOutcome:
    trace: list[StateSnapshot] = field(default_factory=list)
    ext: str = ""
    out: list[str] = field(default_factory=list)
    coverage: set[int] = field(default_factory=set)
    status: str = "normal"  # "normal" or "error:<kind>"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "normal"

    def to_json(self) -> dict:
        return {
            "trace": [s.to_json() for s in self.trace],
            "ext": self.ext,
            "out": self.out,
            "coverage": sorted(self.coverage),
            "status": self.status,
            "message": self.message,
        }

    @classmethod
    def from_json(cls, d: dict) -> ExecutionOutcome:
        return cls(
            [StateSnapshot.from_json(s) for s in d.get("trace", [])],
            d.get("ext", ""),
            list(d.get("out", [])),
            set(d.get("coverage", [])),
            d.get("status", "normal"),
            d.get("message", ""),
        )


# ---------------------------------------------------------------------------
# interpreter


class _Abort(Exception):
    def __init__(self, kind: str, message: str = ""):
        super().__init__(kind)
        self.kind = kind
        self.message = message


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class _Invocation:
    __slots__ = ("trace", "args", "outcome")

    def __init__(self, args):
        self.trace: list[StateSnapshot] = []
        self.args = args
        self.outcome: ExecutionOutcome | None = None


class _Frame:
    __slots__ = ("locals", "inv")

    def __init__(self, local_vars: dict, inv: _Invocation | None):
        self.locals = local_vars
        self.inv = inv


def _check_value(value, ty: TypeTag, what: str):
    if ty == TypeTag.INT:
        ok = isinstance(value, int) and not isinstance(value, bool) and -_SIGN <= value < _SIGN
    elif ty == TypeTag.BOOL:
        ok = isinstance(value, bool)
    elif ty == TypeTag.INT_ARRAY:
        ok = isinstance(value, list) and all(
            isinstance(v, int) and not isinstance(v, bool) and -_SIGN <= v < _SIGN for v in value
        )
    else:
        ok = False
    if not ok:
        raise InvalidInput(f"{what} must be {ty.value}, got {value!r}")
    return list(value) if isinstance(value, list) else value


# ---------------------------------------------------------------------------
# compilation to closures
#
# Statements compile to ``run(rt, fr)`` and expressions to ``ev(rt, fr)``
# where ``rt`` is the Interpreter and ``fr`` the current _Frame. Validation
# forbids shadowing, so a name is global exactly when no parameter or local
# of the function declares it, and one flat dict per frame holds the locals.
# Names declared in a block are dropped when the block finishes so that
# snapshots only see variables in scope.


def _out_of_bounds(idx: int, n: int) -> _Abort:
    return _Abort("index_out_of_bounds", f"index {idx} out of bounds for length {n}")


def _budget(rt) -> _Abort:
    return _Abort("step_budget", f"exceeded {rt.step_budget} steps")


class _Compiler:
    def __init__(self, unit: SourceUnit):
        self.global_names = {g.name for g in unit.globals}

    def is_global(self, name: str) -> bool:
        return name in self.global_names

    # -- expressions -----------------------------------------------------------
    def expr(self, node: AstNode):
        kind = node.kind
        if kind == A.LITERAL:
            tok = node.token
            if isinstance(tok, tuple):
                return lambda rt, fr: list(tok)
            return lambda rt, fr: tok
        if kind == A.VAR_REF:
            name = node.token
            if self.is_global(name):
                return lambda rt, fr: rt.globals[name]
            return lambda rt, fr: fr.locals[name]
        if kind == A.UN_OP:
            inner = self.expr(node.children[0])
            if node.token == "!":
                return lambda rt, fr: not inner(rt, fr)

            def neg(rt, fr):
                v = -inner(rt, fr)
                return v if v < _SIGN else wrap(v)

            return neg
        if kind == A.BIN_OP:
            return self.binop(node.token, self.expr(node.children[0]), self.expr(node.children[1]))
        if kind == A.INDEX:
            arr_ev, idx_ev = self.expr(node.children[0]), self.expr(node.children[1])

            def index(rt, fr):
                arr = arr_ev(rt, fr)
                idx = idx_ev(rt, fr)
                if 0 <= idx < len(arr):
                    return arr[idx]
                raise _out_of_bounds(idx, len(arr))

            return index
        if kind == A.CALL:
            return self.call(node)
        raise AssertionError(f"unexpected expression {kind}")

    def binop(self, op: str, a, b):
        if op == "&&":
            return lambda rt, fr: a(rt, fr) and b(rt, fr)
        if op == "||":
            return lambda rt, fr: a(rt, fr) or b(rt, fr)
        if op in _FAST:
            f = _FAST[op]
            return lambda rt, fr: f(a(rt, fr), b(rt, fr))
        if op in _WRAPPING:
            f = _WRAPPING[op]

            def arith(rt, fr):
                v = f(a(rt, fr), b(rt, fr))
                return v if -_SIGN <= v < _SIGN else wrap(v)

            return arith
        f = _binop_fn(op)
        return lambda rt, fr: f(a(rt, fr), b(rt, fr))

    def call(self, node: AstNode):
        name = node.token
        args = [self.expr(c) for c in node.children]
        if name == "len":
            (arr,) = args
            return lambda rt, fr: len(arr(rt, fr))
        if name == "array":
            (size,) = args

            def make(rt, fr):
                n = size(rt, fr)
                if n < 0:
                    raise _Abort("negative_array_size", f"array size {n}")
                if n > MAX_ARRAY_LEN:
                    raise _Abort("array_too_large", f"array size {n}")
                return [0] * n

            return make
        return lambda rt, fr: rt.call(name, [a(rt, fr) for a in args])

    # -- statements ------------------------------------------------------------
    def block(self, node: AstNode):
        stmts = [(self.stmt(s), s.node_id) for s in node.children]
        runs = [s for s, _ in stmts]
        declared = tuple(s.token[0] for s in node.children if s.kind == A.VAR_DECL)

        def run_block(rt, fr):
            points = rt.points if fr.inv is not None else None
            if points:
                for st, nid in stmts:
                    st(rt, fr)
                    if nid in points:
                        rt.snapshot(fr, points[nid])
            else:
                for st in runs:
                    st(rt, fr)
            if declared:
                loc = fr.locals
                for name in declared:
                    del loc[name]

        return run_block

    def stmt(self, node: AstNode):
        kind = node.kind
        line = node.span[0]
        if kind == A.ASSIGN:
            target, value = node.children
            val = self.expr(value)
            if target.kind == A.VAR_REF:
                name = target.token
                if self.is_global(name):

                    def assign_global(rt, fr):
                        rt.steps += 1
                        if rt.steps > rt.step_budget:
                            raise _budget(rt)
                        rt.coverage.add(line)
                        rt.globals[name] = val(rt, fr)

                    return assign_global

                def assign_local(rt, fr):
                    rt.steps += 1
                    if rt.steps > rt.step_budget:
                        raise _budget(rt)
                    rt.coverage.add(line)
                    fr.locals[name] = val(rt, fr)

                return assign_local
            arr_ev, idx_ev = self.expr(target.children[0]), self.expr(target.children[1])

            def assign_index(rt, fr):
                rt.steps += 1
                if rt.steps > rt.step_budget:
                    raise _budget(rt)
                rt.coverage.add(line)
                v = val(rt, fr)
                arr = arr_ev(rt, fr)
                idx = idx_ev(rt, fr)
                if not 0 <= idx < len(arr):
                    raise _out_of_bounds(idx, len(arr))
                arr[idx] = v

            return assign_index
        if kind == A.VAR_DECL:
            name = node.token[0]
            init = self.expr(node.children[0])

            def declare(rt, fr):
                rt.steps += 1
                if rt.steps > rt.step_budget:
                    raise _budget(rt)
                rt.coverage.add(line)
                fr.locals[name] = init(rt, fr)

            return declare
        if kind == A.IF:
            cond = self.expr(node.children[0])
            then = self.block(node.children[1])
            other = self.block(node.children[2]) if len(node.children) == 3 else None

            def if_stmt(rt, fr):
                rt.steps += 1
                if rt.steps > rt.step_budget:
                    raise _budget(rt)
                rt.coverage.add(line)
                if cond(rt, fr):
                    then(rt, fr)
                elif other is not None:
                    other(rt, fr)

            return if_stmt
        if kind == A.WHILE:
            cond = self.expr(node.children[0])
            body = self.block(node.children[1])

            def while_stmt(rt, fr):
                rt.steps += 1
                if rt.steps > rt.step_budget:
                    raise _budget(rt)
                rt.coverage.add(line)
                while cond(rt, fr):
                    body(rt, fr)
                    rt.steps += 1
                    if rt.steps > rt.step_budget:
                        raise _budget(rt)

            return while_stmt
        if kind == A.FOR:
            init_node, cond_node, update_node, body_node = node.children
            init, update = self.stmt(init_node), self.stmt(update_node)
            cond, body = self.expr(cond_node), self.block(body_node)
            declared = init_node.token[0] if init_node.kind == A.VAR_DECL else None

            def for_stmt(rt, fr):
                rt.steps += 1
                if rt.steps > rt.step_budget:
                    raise _budget(rt)
                rt.coverage.add(line)
                init(rt, fr)
                while cond(rt, fr):
                    body(rt, fr)
                    update(rt, fr)
                if declared is not None:
                    del fr.locals[declared]

            return for_stmt
        if kind == A.RETURN:
            val = self.expr(node.children[0]) if node.children else None

            def return_stmt(rt, fr):
                rt.steps += 1
                if rt.steps > rt.step_budget:
                    raise _budget(rt)
                rt.coverage.add(line)
                raise _Return(val(rt, fr) if val is not None else None)

            return return_stmt
        if kind == A.THROW:
            message = node.token

            def throw_stmt(rt, fr):
                rt.steps += 1
                if rt.steps > rt.step_budget:
                    raise _budget(rt)
                rt.coverage.add(line)
                raise _Abort("throw", message)

            return throw_stmt
        if kind in (A.OUTPUT, A.EXPR_STMT):
            val = self.expr(node.children[0])
            is_output = kind == A.OUTPUT

            def expr_stmt(rt, fr):
                rt.steps += 1
                if rt.steps > rt.step_budget:
                    raise _budget(rt)
                rt.coverage.add(line)
                v = val(rt, fr)
                if is_output:
                    rt.out.append(canonical_text(v))

            return expr_stmt
        raise AssertionError(f"unexpected statement {kind}")


def _binop_fn(op: str):
    def div(a, b):
        if b == 0:
            raise _Abort("division_by_zero", "division by zero")
        q = abs(a) // abs(b)
        return wrap(q if (a >= 0) == (b >= 0) else -q)

    def mod(a, b):
        if b == 0:
            raise _Abort("division_by_zero", "modulo by zero")
        r = abs(a) % abs(b)
        return r if a >= 0 else -r

    if op == "/":
        return div
    if op == "%":
        return mod
    raise AssertionError(f"unknown operator {op}")


_WRAPPING = {"+": operator.add, "-": operator.sub, "*": operator.mul}
_FAST = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "==": operator.eq,
    "!=": operator.ne,
}


def _binop(op: str, a, b):
    if op in _WRAPPING:
        return wrap(_WRAPPING[op](a, b))
    if op in _FAST:
        return _FAST[op](a, b)
    return _binop_fn(op)(a, b)


class _Program:
    """Compiled function bodies of one unit."""

    def __init__(self, unit: SourceUnit):
        compiler = _Compiler(unit)
        self.bodies = {fn.name: compiler.block(fn.body) for fn in unit.functions}


def _compiled(unit: SourceUnit) -> _Program:
    # cached on the unit; the id check keeps deep copies from reusing it
    cached = unit.__dict__.get("_compiled")
    if cached is not None and cached[0] == id(unit):
        return cached[1]
    program = _Program(unit)
    unit.__dict__["_compiled"] = (id(unit), program)
    return program


class Interpreter:
    """Executes one call at a time; never shared between threads."""

    def __init__(
        self,
        unit: SourceUnit,
        step_budget: int = DEFAULT_STEP_BUDGET,
        max_depth: int = DEFAULT_MAX_DEPTH,
    ):
        self.unit = unit
        self.step_budget = step_budget
        self.max_depth = max_depth
        self.functions = {fn.name: fn for fn in unit.functions}
        self.program = _compiled(unit)

    # -- public entry point ----------------------------------------------------
    def run(
        self,
        fn_name: str,
        inp: InputVector,
        points: Iterable[ProgramPoint] = (),
        trace_fn: str | None = None,
        every_invocation: bool = False,
    ) -> tuple[ExecutionOutcome, list[ExecutionOutcome]]:
        """Run ``fn_name`` on ``inp``.

        Returns the outcome of the call itself plus one outcome per traced
        invocation of ``trace_fn`` (only the top-level call unless
        ``every_invocation``).
        """
        if fn_name not in self.functions:
            raise InvalidInput(f"no function named {fn_name!r}")
        fn = self.functions[fn_name]
        if len(inp.args) != len(fn.params):
            raise InvalidInput(f"{fn_name} expects {len(fn.params)} argument(s), got {len(inp.args)}")
        args = [_check_value(v, t, f"argument {n!r}") for v, (n, t) in zip(inp.args, fn.params)]
        self.globals = {}
        for g in self.unit.globals:
            init = g.init
            if inp.globals_init and g.name in inp.globals_init:
                init = _check_value(inp.globals_init[g.name], g.type, f"global {g.name!r}")
            self.globals[g.name] = list(init) if isinstance(init, list) else init
        if inp.globals_init:
            unknown = set(inp.globals_init) - set(self.globals)
            if unknown:
                raise InvalidInput(f"unknown globals in input: {sorted(unknown)}")

        self.steps = 0
        self.depth = 0
        self.out: list[str] = []
        self.coverage: set[int] = set()
        self.points = {p.anchor: p.pp_index for p in points if p.anchor is not None}
        self.trace_fn = trace_fn
        self.every_invocation = every_invocation
        self.invocations: list[_Invocation] = []
        self.active: list[_Invocation] = []

        outcome = ExecutionOutcome()
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 40 * self.max_depth + 1000))
        try:
            ret = self.call(fn_name, args, top=True)
            outcome.ext = self._ext("normal", ret, args)
        except _Abort as abort:
            outcome.status = f"error:{abort.kind}"
            outcome.message = abort.message
            outcome.ext = self._ext(abort.kind, None, args)
            for inv in self.active:
                inv.outcome = ExecutionOutcome(
                    inv.trace, self._ext(abort.kind, None, inv.args), [], set(), outcome.status, abort.message
                )
        finally:
            sys.setrecursionlimit(limit)
        outcome.out = self.out
        outcome.coverage = self.coverage
        invs = [inv.outcome for inv in self.invocations]
        return outcome, invs

    def _ext(self, status: str, ret, args) -> str:
        return canonical_json(
            {
                "status": status,
                "ret": None if ret is None else canonical_text(ret),
                "globals": {k: canonical_text(v) for k, v in self.globals.items()},
                "args": [canonical_text(a) for a in args],
            }
        )

    def call(self, name: str, args: list, top: bool = False):
        if self.depth >= self.max_depth:
            raise _Abort("stack_overflow", f"call depth exceeded {self.max_depth}")
        fn = self.functions[name]
        inv = None
        if name == self.trace_fn and (top or self.every_invocation):
            inv = _Invocation(args)
            self.invocations.append(inv)
            self.active.append(inv)
        frame = _Frame({pname: val for (pname, _), val in zip(fn.params, args)}, inv)
        self.depth += 1
        if inv is not None:
            self.snapshot(frame, 0)
        try:
            self.program.bodies[name](self, frame)
            ret = None
        except _Return as r:
            ret = r.value
        finally:
            self.depth -= 1
        if inv is not None:
            self.active.pop()
            inv.outcome = ExecutionOutcome(inv.trace, self._ext("normal", ret, args), [], set(), "normal")
        return ret

    def snapshot(self, frame: _Frame, pp_index: int) -> None:
        bindings = {k: canonical_text(v) for k, v in self.globals.items()}
        for k, v in frame.locals.items():
            bindings[k] = canonical_text(v)
        frame.inv.trace.append(StateSnapshot(pp_index, bindings))


# ---------------------------------------------------------------------------
# module-level API


def execute_unit(
    unit: SourceUnit,
    fn_name: str,
    inp: InputVector,
    points: Iterable[ProgramPoint] = (),
    step_budget: int = DEFAULT_STEP_BUDGET,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> ExecutionOutcome:
    """Call ``fn_name`` directly, snapshotting at ``points`` of that call."""
    interp = Interpreter(unit, step_budget, max_depth)
    outcome, invs = interp.run(fn_name, inp, points, trace_fn=fn_name)
    inv = invs[0]
    outcome.trace = inv.trace
    outcome.out = []
    return outcome


def execute_system(
    unit: SourceUnit,
    inp: InputVector,
    target_fn: str,
    points: Iterable[ProgramPoint] = (),
    step_budget: int = DEFAULT_STEP_BUDGET,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> tuple[ExecutionOutcome, list[ExecutionOutcome]]:
    """Run the unit's entry function; trace every call of ``target_fn``."""
    if unit.entry is None:
        raise InvalidInput("program has no entry function")
    if not unit.has_function(target_fn):
        raise InvalidInput(f"no function named {target_fn!r}")
    interp = Interpreter(unit, step_budget, max_depth)
    return interp.run(unit.entry, inp, points, trace_fn=target_fn, every_invocation=True)


def system_observation(outcome: ExecutionOutcome) -> list[str]:
    """What a system-level oracle sees: the output stream plus how it ended."""
    return list(outcome.out) + ["!" + outcome.status]
