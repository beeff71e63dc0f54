"""Random paired executions for property tests of the classifier."""

from __future__ import annotations

import random

from fep.classifier import SYS, UNIT, PairedExecution
from fep.instrument import AlignedInstrumentation, ProgramPoint
from fep.tracer import ExecutionOutcome, StateSnapshot


def _alignment(rng: random.Random) -> AlignedInstrumentation:
    nb, nf = rng.randint(1, 5), rng.randint(1, 5)
    corr = {0: 0}
    j = 0
    for i in range(1, nb):
        if j + 1 < nf and rng.random() < 0.7:
            j = rng.randint(j + 1, nf - 1)
            corr[i] = j
    return AlignedInstrumentation(
        [ProgramPoint(i, None if i == 0 else i, "buggy") for i in range(nb)],
        [ProgramPoint(i, None if i == 0 else i, "fixed") for i in range(nf)],
        corr,
    )


def _outcome(rng: random.Random, n_points: int) -> ExecutionOutcome:
    visits = [0] + sorted(rng.sample(range(1, n_points), rng.randint(0, n_points - 1))) if n_points > 1 else [0]
    trace = [StateSnapshot(p, {"x": str(rng.randint(0, 1))}) for p in visits]
    return ExecutionOutcome(trace=trace, ext=str(rng.randint(0, 1)), status=rng.choice(["normal", "normal", "error:throw"]))


def random_paired(rng: random.Random) -> PairedExecution:
    al = _alignment(rng)
    nb, nf = len(al.buggy_points), len(al.fixed_points)
    if rng.random() < 0.5:
        return PairedExecution(_outcome(rng, nb), _outcome(rng, nf), al, UNIT)
    k_b, k_f = rng.randint(0, 3), rng.randint(0, 3)
    if rng.random() < 0.7:
        k_f = k_b
    out = [str(rng.randint(0, 1)) for _ in range(2)]
    out_f = out if rng.random() < 0.7 else [str(rng.randint(0, 1)) for _ in range(2)]
    return PairedExecution(
        ExecutionOutcome(out=out),
        ExecutionOutcome(out=out_f),
        al,
        SYS,
        buggy_invocations=[_outcome(rng, nb) for _ in range(k_b)],
        fixed_invocations=[_outcome(rng, nf) for _ in range(k_f)],
    )
