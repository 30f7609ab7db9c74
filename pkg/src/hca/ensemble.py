"""Random integer Hamiltonians and the long exact runs built on them."""

from __future__ import annotations

import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .conservation import check_theorem_a_stream, generate_commutant
from .dynamics import CaState, Lapse, iterate
from .exact import HamiltonianSpec, build_hamiltonian


def random_spec(rng: random.Random, dim: int, bound: int) -> HamiltonianSpec:
    """Symmetric ``S`` and antisymmetric ``A`` with entries uniform in ``[-bound, bound]``."""
    S = [[0] * dim for _ in range(dim)]
    A = [[0] * dim for _ in range(dim)]
    for i in range(dim):
        for j in range(i, dim):
            S[i][j] = S[j][i] = rng.randint(-bound, bound)
            if i != j:
                a = rng.randint(-bound, bound)
                A[i][j], A[j][i] = a, -a
    return build_hamiltonian(S, A)


def random_pair(rng: random.Random, dim: int, bound: int) -> tuple[CaState, CaState]:
    def vec():
        return tuple(rng.randint(-bound, bound) for _ in range(dim))

    return (CaState(0, vec(), vec(), rng.randint(-bound, bound), rng.randint(-bound, bound)),
            CaState(1, vec(), vec(), rng.randint(-bound, bound), rng.randint(-bound, bound)))


def random_ensemble(seed: int, trials: int, dims, bound: int):
    """Deterministic list of ``(spec, pair)`` with dimensions cycled through ``dims``."""
    rng = random.Random(seed)
    dims = list(dims)
    out = []
    for k in range(trials):
        dim = dims[k % len(dims)]
        out.append((random_spec(rng, dim, bound), random_pair(rng, dim, bound)))
    return out


@dataclass(frozen=True)
class LongRunResult:
    dim: int
    steps: int
    max_violation: dict[str, int]
    reversible: bool
    max_bits: int
    seconds: float
    forward_seconds: float

    @property
    def conserved(self) -> bool:
        return not any(self.max_violation.values())


def long_run(spec: HamiltonianSpec, pair: tuple[CaState, CaState], steps: int,
             lapse: Lapse = Lapse(), degree: int = 1, reverse: bool = True) -> LongRunResult:
    """Evolve ``steps`` forward checking every commutant invariant, then run back.

    Nothing but the two newest states is kept, so memory stays flat even
    when the coordinates grow to tens of thousands of bits.
    """
    start = time.perf_counter()
    tail: list[CaState] = []

    def keep_tail(states):
        for s in states:
            tail.append(s)
            if len(tail) > 2:
                tail.pop(0)
            yield s

    generators = generate_commutant(spec, degree).labelled()
    forward = keep_tail(iterate(spec, pair[0], pair[1], lapse, steps, fast=True))
    reports = check_theorem_a_stream(spec, forward, generators)
    forward_seconds = time.perf_counter() - start
    last, final = tail
    max_bits = max(int(abs(v)).bit_length() for v in final.x + final.p)
    reversible = True
    if reverse:
        back = list(iterate(spec, final, last, lapse, steps, backward=True, fast=True))
        reversible = back[-1] == pair[0] and back[-2] == pair[1]
    return LongRunResult(spec.dim, steps, {k: r.max_violation for k, r in reports.items()},
                         reversible, max_bits, time.perf_counter() - start, forward_seconds)


def _long_run_job(args):
    spec, pair, steps, lapse, degree = args
    return long_run(spec, pair, steps, lapse, degree)


def run_ensemble(members, steps: int, lapse: Lapse = Lapse(), degree: int = 1,
                 workers: int | None = 1) -> list[LongRunResult]:
    """:func:`long_run` over every ``(spec, pair)``; ``workers=None`` uses all cores."""
    jobs = [(spec, pair, steps, lapse, degree) for spec, pair in members]
    workers = os.cpu_count() if workers is None else workers
    if workers <= 1:
        return [_long_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_long_run_job, jobs))
