"""Exact leapfrog evolution of Hamiltonian cellular automata.

The update rules are second order in the automaton time ``n``::

    x[n+1]   = x[n-1]   + c[n] (S p[n] + A x[n])
    p[n+1]   = p[n-1]   - c[n] (S x[n] - A p[n])
    tau[n+1] = tau[n-1] + c[n]
    pi[n+1]  = pi[n-1]  + H[n+1] - H[n-1]

so a trajectory is seeded by a *pair* of consecutive states.  All
arithmetic is exact; ``pi`` is a :class:`~fractions.Fraction` because
``H`` may be a half-integer.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from .errors import BoundarySite, DimensionMismatch, NonConsecutiveStates, TooShort, ZeroVariation
from .exact import (GaussInt, HamiltonianSpec, IntVector, bigint, dot, format_exact, h_value_psi,
                    h_value_xp, matvec, pack_psi, parse_exact, twice_h)


@dataclass(frozen=True)
class Lapse:
    """Integer lapse ``c[n]``: a constant default plus optional per-step overrides."""

    default: int = 2
    overrides: Mapping[int, int] = field(default_factory=dict)

    def __call__(self, n: int) -> int:
        return self.overrides.get(n, self.default)

    @property
    def is_constant(self) -> bool:
        return all(v == self.default for v in self.overrides.values())


@dataclass(frozen=True)
class CaState:
    """One time slice ``n`` of the automaton."""

    n: int
    x: IntVector
    p: IntVector
    tau: int = 0
    pi: Fraction = Fraction(0)

    def __post_init__(self):
        if len(self.x) != len(self.p):
            raise DimensionMismatch(f"x has length {len(self.x)}, p has length {len(self.p)}")
        if not isinstance(self.pi, Fraction):
            object.__setattr__(self, "pi", Fraction(self.pi))

    @property
    def psi(self) -> tuple[GaussInt, ...]:
        return pack_psi(self.x, self.p)

    @classmethod
    def from_psi(cls, n: int, psi: Sequence[GaussInt], tau: int = 0, pi=0) -> CaState:
        return cls(n, tuple(z.re for z in psi), tuple(z.im for z in psi), tau, Fraction(pi))


@dataclass(frozen=True)
class Trajectory:
    spec: HamiltonianSpec
    lapse: Lapse
    states: tuple[CaState, ...]

    def __post_init__(self):
        if len(self.states) < 2:
            raise TooShort("a trajectory needs at least two states")
        n0 = self.states[0].n
        for k, s in enumerate(self.states):
            if s.n != n0 + k:
                raise NonConsecutiveStates(f"state {k} has index {s.n}, expected {n0 + k}")
            if len(s.x) != self.spec.dim:
                raise DimensionMismatch(f"state {s.n} has dimension {len(s.x)}, spec has {self.spec.dim}")

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    @property
    def n0(self) -> int:
        return self.states[0].n

    @property
    def n1(self) -> int:
        return self.states[-1].n

    def at(self, n: int) -> CaState:
        k = n - self.n0
        if not 0 <= k < len(self.states):
            raise IndexError(f"step {n} outside [{self.n0}, {self.n1}]")
        return self.states[k]


# -- stepping --------------------------------------------------------------


def _check_pair(spec: HamiltonianSpec, a: CaState, b: CaState, gap: int):
    if b.n - a.n != gap:
        raise NonConsecutiveStates(f"states {a.n} and {b.n} are not consecutive")
    for s in (a, b):
        if len(s.x) != spec.dim:
            raise DimensionMismatch(f"state {s.n} has dimension {len(s.x)}, spec has {spec.dim}")


def _increments(spec: HamiltonianSpec, x, p):
    """``(S p + A x, S x - A p)``: the x and (negated) p velocities."""
    sx, sp = matvec(spec.S, x), matvec(spec.S, p)
    ax, ap = matvec(spec.A, x), matvec(spec.A, p)
    return [a + b for a, b in zip(sp, ax)], [a - b for a, b in zip(sx, ap)]


def step_forward(prev: CaState, curr: CaState, spec: HamiltonianSpec, lapse: Lapse = Lapse()) -> CaState:
    """State ``n+1`` from states ``n-1`` and ``n``."""
    _check_pair(spec, prev, curr, 1)
    c = lapse(curr.n)
    w, u = _increments(spec, curr.x, curr.p)
    x = tuple(a + c * b for a, b in zip(prev.x, w))
    p = tuple(a - c * b for a, b in zip(prev.p, u))
    pi = prev.pi + h_value_xp(spec, x, p) - h_value_xp(spec, prev.x, prev.p)
    return CaState(curr.n + 1, x, p, prev.tau + c, pi)


def step_backward(nxt: CaState, curr: CaState, spec: HamiltonianSpec, lapse: Lapse = Lapse()) -> CaState:
    """State ``n-1`` from states ``n+1`` and ``n``; exact inverse of :func:`step_forward`."""
    _check_pair(spec, curr, nxt, 1)
    c = lapse(curr.n)
    w, u = _increments(spec, curr.x, curr.p)
    x = tuple(a - c * b for a, b in zip(nxt.x, w))
    p = tuple(a + c * b for a, b in zip(nxt.p, u))
    pi = nxt.pi - h_value_xp(spec, nxt.x, nxt.p) + h_value_xp(spec, x, p)
    return CaState(curr.n - 1, x, p, nxt.tau - c, pi)


def _twice(value: Fraction, conv):
    doubled = 2 * value
    return conv(doubled.numerator) if doubled.denominator == 1 else doubled


def iterate(spec: HamiltonianSpec, first: CaState, second: CaState, lapse: Lapse = Lapse(),
            steps: int = 0, *, backward: bool = False, fast: bool = False) -> Iterator[CaState]:
    """Stream the states of a trajectory without storing them.

    Forward mode takes the pair ``(n-1, n)`` and yields ``n-1, n, ..., n+steps``.
    With ``backward=True`` the pair is ``(n+1, n)`` and indices decrease.
    ``fast=True`` carries the coordinates as GMP integers, which pays off
    once entries grow to thousands of bits; they still compare and hash
    equal to the corresponding ``int``.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    sign = -1 if backward else 1
    _check_pair(spec, first if not backward else second, second if not backward else first, 1)
    conv = bigint if fast else int
    x0, p0 = [conv(v) for v in first.x], [conv(v) for v in first.p]
    x1, p1 = [conv(v) for v in second.x], [conv(v) for v in second.p]
    tau0, tau1 = first.tau, second.tau
    # twice pi and twice H keep the bookkeeping in integers
    pi0, pi1 = _twice(first.pi, conv), _twice(second.pi, conv)
    h0 = twice_h(spec, x0, p0)
    h1 = twice_h(spec, x1, p1)
    yield first
    yield second
    n = second.n
    for _ in range(steps):
        c = lapse(n) * sign
        w, u = _increments(spec, x1, p1)
        x2 = [a + c * b for a, b in zip(x0, w)]
        p2 = [a - c * b for a, b in zip(p0, u)]
        h2 = twice_h(spec, x2, p2)
        pi2 = pi0 + (h2 - h0)
        tau2 = tau0 + c
        n += sign
        yield CaState(n, tuple(x2), tuple(p2), tau2, Fraction(pi2, 2))
        x0, p0, x1, p1 = x1, p1, x2, p2
        h0, h1 = h1, h2
        pi0, pi1 = pi1, pi2
        tau0, tau1 = tau1, tau2


def evolve(initial_pair: tuple[CaState, CaState], spec: HamiltonianSpec, lapse: Lapse = Lapse(),
           steps: int = 0) -> Trajectory:
    """Trajectory of ``steps + 2`` states grown forward from ``initial_pair``."""
    first, second = initial_pair
    return Trajectory(spec, lapse, tuple(iterate(spec, first, second, lapse, steps)))


def evolve_backward(final_pair: tuple[CaState, CaState], spec: HamiltonianSpec, lapse: Lapse = Lapse(),
                    steps: int = 0) -> Trajectory:
    """Trajectory ending in ``final_pair = (state n, state n+1)``, grown backwards."""
    curr, nxt = final_pair
    states = list(iterate(spec, nxt, curr, lapse, steps, backward=True))
    return Trajectory(spec, lapse, tuple(reversed(states)))


def initial_pair_from_psi(psi0: Sequence[GaussInt], psi1: Sequence[GaussInt], n0: int = 0,
                          tau: tuple[int, int] = (0, 0), pi: tuple = (0, 0)) -> tuple[CaState, CaState]:
    """Seed pair at indices ``n0, n0 + 1`` from two Gaussian-integer vectors."""
    return (CaState.from_psi(n0, psi0, tau[0], pi[0]),
            CaState.from_psi(n0 + 1, psi1, tau[1], pi[1]))


def satisfies_equations_of_motion(traj: Trajectory) -> list[int]:
    """Interior indices ``n`` whose triple violates the update rules (empty when exact)."""
    bad = []
    for k in range(1, len(traj) - 1):
        prev, curr, nxt = traj.states[k - 1], traj.states[k], traj.states[k + 1]
        expected = step_forward(prev, curr, traj.spec, traj.lapse)
        if expected != nxt:
            bad.append(curr.n)
    return bad


# -- action ---------------------------------------------------------------

ACTION_FORMS = ("xp", "psi")


def _hamiltonian(spec: HamiltonianSpec, state: CaState, form: str) -> Fraction:
    if form == "psi":
        return h_value_psi(spec, state.psi)
    return h_value_xp(spec, state.x, state.p)


def _kinetic(prev: CaState, curr: CaState, form: str):
    if form == "psi":
        # Im(psi_n^* psi_{n-1}) summed over components
        total = GaussInt(0)
        for a, b in zip(curr.psi, prev.psi):
            total = total + a.conjugate() * b
        return total.im
    dx = [a - b for a, b in zip(curr.x, prev.x)]
    return dot([a + b for a, b in zip(curr.p, prev.p)], dx)


def _term(prev: CaState, curr: CaState, c: int, h_prev: Fraction, h_curr: Fraction, form: str) -> Fraction:
    dtau = curr.tau - prev.tau
    return (_kinetic(prev, curr, form) + (curr.pi + prev.pi) * dtau
            - (dtau * (h_curr + h_prev) + c * curr.pi))


def _action(traj: Trajectory, form: str) -> Fraction:
    spec, lapse = traj.spec, traj.lapse
    hs = [_hamiltonian(spec, s, form) for s in traj.states]
    total = Fraction(0)
    for k in range(1, len(traj)):
        prev, curr = traj.states[k - 1], traj.states[k]
        total += _term(prev, curr, lapse(curr.n), hs[k - 1], hs[k], form)
    return total


def discrete_action(traj: Trajectory) -> Fraction:
    """Sum of ``(p_n + p_{n-1}).dx_n + (pi_n + pi_{n-1}) dtau_n - A_n`` over the trajectory."""
    return _action(traj, "xp")


def psi_action(traj: Trajectory) -> Fraction:
    """Same action with the kinetic term written as ``Im(psi_n^* psi_{n-1})``.

    Differs from :func:`discrete_action` by ``p.x`` at the first state minus
    ``p.x`` at the last one.
    """
    return _action(traj, "psi")


def variables(dim: int) -> list[str]:
    """Names of the dynamical variables at one site: ``x0.., p0.., tau, pi``."""
    return [f"x{a}" for a in range(dim)] + [f"p{a}" for a in range(dim)] + ["tau", "pi"]


def _shift(state: CaState, variable: str, delta: int) -> CaState:
    if variable == "tau":
        return CaState(state.n, state.x, state.p, state.tau + delta, state.pi)
    if variable == "pi":
        return CaState(state.n, state.x, state.p, state.tau, state.pi + delta)
    kind, alpha = variable[0], int(variable[1:])
    if kind not in "xp" or not 0 <= alpha < len(state.x):
        raise ValueError(f"unknown variable {variable!r}")
    vec = list(state.x if kind == "x" else state.p)
    vec[alpha] += delta
    if kind == "x":
        return CaState(state.n, tuple(vec), state.p, state.tau, state.pi)
    return CaState(state.n, state.x, tuple(vec), state.tau, state.pi)


def _local_variation(traj: Trajectory, k: int, variable: str, delta: int, form: str, hs=None) -> Fraction:
    spec, lapse = traj.spec, traj.lapse
    prev, mid, nxt = traj.states[k - 1], traj.states[k], traj.states[k + 1]
    if hs is None:
        h_prev, h_next = _hamiltonian(spec, prev, form), _hamiltonian(spec, nxt, form)
    else:
        h_prev, h_next = hs[k - 1], hs[k + 1]
    c_mid, c_next = lapse(mid.n), lapse(nxt.n)

    def local(state: CaState) -> Fraction:
        h_mid = _hamiltonian(spec, state, form)
        return (_term(prev, state, c_mid, h_prev, h_mid, form)
                + _term(state, nxt, c_next, h_mid, h_next, form))

    return (local(_shift(mid, variable, delta)) - local(_shift(mid, variable, -delta))) / 2


def vary_action(traj: Trajectory, n: int, variable: str, delta: int = 1, form: str = "xp") -> Fraction:
    """Symmetric variation ``[S(f + delta) - S(f - delta)] / 2`` at interior site ``n``.

    Only the two action terms that contain site ``n`` are evaluated; every
    other term cancels exactly in the difference.
    """
    if form not in ACTION_FORMS:
        raise ValueError(f"form must be one of {ACTION_FORMS}")
    if delta == 0:
        raise ZeroVariation("variation must be nonzero")
    if not traj.n0 < n < traj.n1:
        raise BoundarySite(f"site {n} is not interior to [{traj.n0}, {traj.n1}]")
    return _local_variation(traj, n - traj.n0, variable, delta, form)


@dataclass(frozen=True)
class StationarityReport:
    flagged: tuple[tuple[int, str, Fraction], ...]

    @property
    def stationary(self) -> bool:
        return not self.flagged

    @property
    def sites(self) -> set[int]:
        return {n for n, _, _ in self.flagged}


def stationarity_report(traj: Trajectory, form: str = "xp") -> StationarityReport:
    """Every interior (site, variable) whose unit symmetric variation is nonzero."""
    if len(traj) < 3:
        raise TooShort("stationarity needs at least one interior site")
    hs = [_hamiltonian(traj.spec, s, form) for s in traj.states]
    names = variables(traj.spec.dim)
    flagged = []
    for k in range(1, len(traj) - 1):
        for var in names:
            value = _local_variation(traj, k, var, 1, form, hs)
            if value:
                flagged.append((traj.states[k].n, var, value))
    return StationarityReport(tuple(flagged))


def is_integer_valued(traj: Trajectory) -> bool:
    """True when every ``H_n``, every ``pi_n`` and the action are integers."""
    spec = traj.spec
    if any(h_value_xp(spec, s.x, s.p).denominator != 1 or s.pi.denominator != 1 for s in traj.states):
        return False
    return discrete_action(traj).denominator == 1


# -- CSV ------------------------------------------------------------------


def trajectory_header(dim: int) -> list[str]:
    return ["n"] + [f"x_{a}" for a in range(dim)] + [f"p_{a}" for a in range(dim)] + ["tau", "pi"]


def write_trajectory_csv(traj: Trajectory, target) -> None:
    """Write ``n, x_0.., p_0.., tau, pi`` rows with exact decimal strings."""
    own = isinstance(target, (str, Path))
    fh = open(target, "w", newline="") if own else target
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(trajectory_header(traj.spec.dim))
        for s in traj.states:
            writer.writerow([s.n, *map(str, s.x), *map(str, s.p), s.tau, format_exact(s.pi)])
    finally:
        if own:
            fh.close()


def trajectory_to_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    write_trajectory_csv(traj, buf)
    return buf.getvalue()


def read_trajectory_csv(source, spec: HamiltonianSpec, lapse: Lapse = Lapse()) -> Trajectory:
    own = isinstance(source, (str, Path))
    fh = open(source, newline="") if own else source
    try:
        rows = list(csv.reader(fh))
    finally:
        if own:
            fh.close()
    header, body = rows[0], [r for r in rows[1:] if r]
    dim = spec.dim
    if header != trajectory_header(dim):
        raise DimensionMismatch(f"trajectory header {header} does not match dimension {dim}")
    states = []
    for row in body:
        states.append(CaState(int(row[0]),
                              tuple(int(v) for v in row[1:1 + dim]),
                              tuple(int(v) for v in row[1 + dim:1 + 2 * dim]),
                              int(row[1 + 2 * dim]),
                              parse_exact(row[2 + 2 * dim])))
    return Trajectory(spec, lapse, tuple(states))
