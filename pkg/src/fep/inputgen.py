"""Coverage-directed random input generation."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Any

from .errors import EmptyPool, InvalidInput, PreconditionError
from .lang import ast as A
from .lang.ast import FunctionDef, SourceUnit, TypeTag
from .tracer import DEFAULT_STEP_BUDGET, InputVector, execute_system, execute_unit


def derive_goals_multiply(target_executions: int, line_list) -> int:
    if not line_list:
        raise PreconditionError("line list is empty")
    # round half to even would turn 2.5 into 2; round half up instead
    return max(1, int(target_executions / len(line_list) + 0.5))


@dataclass
class GeneratorConfig:
    line_list: list[int]
    goals_multiply: int | None = None
    target_executions: int = 1000
    budget_seconds: float = 600.0
    seed: int = 42
    int_range: tuple[int, int] = (-100, 100)
    max_array_len: int = 8
    max_samples: int | None = None
    stagnation_limit: int = 2000
    step_budget: int = DEFAULT_STEP_BUDGET

    def goal(self) -> int:
        if self.goals_multiply is not None:
            if self.goals_multiply < 1:
                raise PreconditionError("goals_multiply must be positive")
            return self.goals_multiply
        return derive_goals_multiply(self.target_executions, self.line_list)

    def sample_cap(self) -> int:
        if self.max_samples is not None:
            return self.max_samples
        return max(20_000, 20 * self.target_executions)


@dataclass
class InputPool:
    inputs: list[tuple[str, InputVector]] = field(default_factory=list)
    coverage_count: dict[int, int] = field(default_factory=dict)
    generator_log: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "inputs": [{"inputId": i, **v.to_json()} for i, v in self.inputs],
            "coverageCount": {str(k): v for k, v in sorted(self.coverage_count.items())},
            "generatorLog": self.generator_log,
        }

    @classmethod
    def from_json(cls, d: dict) -> InputPool:
        return cls(
            [(e["inputId"], InputVector.from_json(e)) for e in d["inputs"]],
            {int(k): v for k, v in d.get("coverageCount", {}).items()},
            dict(d.get("generatorLog", {})),
        )


class ValueSampler:
    def __init__(self, rng: random.Random, int_range: tuple[int, int], max_array_len: int):
        self.rng = rng
        self.lo, self.hi = int_range
        self.max_array_len = max_array_len

    def sample(self, ty: TypeTag):
        if ty == TypeTag.INT:
            return self.rng.randint(self.lo, self.hi)
        if ty == TypeTag.BOOL:
            return self.rng.random() < 0.5
        if ty == TypeTag.INT_ARRAY:
            n = self.rng.randint(0, self.max_array_len)
            return [self.rng.randint(self.lo, self.hi) for _ in range(n)]
        raise InvalidInput(f"cannot sample values of type {ty.value}")


def statement_lines(fn: FunctionDef) -> set[int]:
    return {n.span[0] for n in fn.body.preorder() if n.kind in A.STATEMENT_KINDS}


def generate_pool(
    unit: SourceUnit,
    fn_name: str,
    config: GeneratorConfig,
    system: bool = False,
) -> InputPool:
    """Sample inputs until every target line is covered ``goal`` times.

    An input is kept when it covers some target line whose count is still
    short of the goal. With ``system`` the entry function is sampled and run,
    otherwise ``fn_name`` is called directly.
    """
    if not unit.has_function(fn_name):
        raise InvalidInput(f"no function named {fn_name!r}")
    if not config.line_list:
        raise PreconditionError("line list is empty")
    fn = unit.function(fn_name)
    missing = set(config.line_list) - statement_lines(fn)
    if missing:
        raise PreconditionError(f"lines {sorted(missing)} hold no statement of {fn_name}")
    entry = fn
    if system:
        if unit.entry is None:
            raise InvalidInput("program has no entry function")
        entry = unit.function(unit.entry)

    goal = config.goal()
    targets = sorted(set(config.line_list))
    counts = {line: 0 for line in targets}
    rng = random.Random(config.seed)
    sampler = ValueSampler(rng, config.int_range, config.max_array_len)
    seen: set[str] = set()
    pool = InputPool(coverage_count=counts)
    log = {"sampled": 0, "accepted": 0, "duplicates": 0, "rejected": 0, "stop": ""}
    cap = config.sample_cap()
    stale = 0
    start = time.monotonic()

    while True:
        if all(c >= goal for c in counts.values()):
            log["stop"] = "goals met"
            break
        if log["sampled"] >= cap:
            log["stop"] = "sample cap"
            break
        if stale >= config.stagnation_limit:
            log["stop"] = "stagnation"
            break
        if time.monotonic() - start > config.budget_seconds:
            log["stop"] = "time budget"
            break
        log["sampled"] += 1
        inp = InputVector([sampler.sample(t) for _, t in entry.params])
        key = inp.key()
        if key in seen:
            log["duplicates"] += 1
            stale += 1
            continue
        seen.add(key)
        if system:
            outcome, _ = execute_system(unit, inp, fn_name, step_budget=config.step_budget)
        else:
            outcome = execute_unit(unit, fn_name, inp, step_budget=config.step_budget)
        hit = [line for line in targets if line in outcome.coverage]
        if any(counts[line] < goal for line in hit):
            for line in hit:
                counts[line] += 1
            pool.inputs.append((f"i{len(pool.inputs):05d}", inp))
            log["accepted"] += 1
            stale = 0
        else:
            log["rejected"] += 1
            stale += 1

    pool.generator_log = log
    if not pool.inputs:
        raise EmptyPool(f"no sampled input covered lines {targets} of {fn_name}")
    return pool
