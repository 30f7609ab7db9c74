"""Exact checks of the discrete conservation laws.

For any self-adjoint ``G`` commuting with ``H`` the staggered quantity

    Q_G(n) = psi_n^dagger G psi_{n+1} + psi_{n+1}^dagger G psi_n

is the same integer at every step of a trajectory obeying the leapfrog
rules.  Its step-to-step difference is exactly the discrete conservation
law, so constancy of ``Q_G`` is checked with integer equality.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .dynamics import CaState, Trajectory
from .errors import (DimensionMismatch, DimensionTooLarge, NotCommuting, NotSelfAdjoint, OutOfRange,
                     TooShort)
from .exact import GaussMatrix, HamiltonianSpec, commutator, dot, format_exact


def _require_self_adjoint(g: GaussMatrix, dim: int):
    if g.dim != dim:
        raise DimensionMismatch(f"G is {g.dim}x{g.dim}, states have dimension {dim}")
    if not g.is_self_adjoint():
        raise NotSelfAdjoint("G must be self-adjoint")


def _inner(g: GaussMatrix, a: CaState, b: CaState) -> tuple[int, int]:
    """``psi_a^dagger G psi_b`` as ``(re, im)``."""
    u, w = g.apply(b.x, b.p)
    return dot(a.x, u) + dot(a.p, w), dot(a.x, w) - dot(a.p, u)


def _q_fast(g: GaussMatrix, x0, p0, x1, p1):
    # 2 Re(psi_0^dagger G psi_1); valid because G is self-adjoint
    u, w = g.apply(x1, p1)
    return 2 * (dot(x0, u) + dot(p0, w))


def _index(traj: Trajectory, n: int) -> CaState:
    if not traj.n0 <= n <= traj.n1:
        raise OutOfRange(f"step {n} outside [{traj.n0}, {traj.n1}]")
    return traj.at(n)


def staggered_invariant(traj: Trajectory, g: GaussMatrix, n: int) -> int:
    """``Q_G(n)`` evaluated in Gaussian-integer arithmetic."""
    _require_self_adjoint(g, traj.spec.dim)
    if not traj.n0 <= n < traj.n1:
        raise OutOfRange(f"Q({n}) needs steps {n} and {n + 1} inside [{traj.n0}, {traj.n1}]")
    a, b = traj.at(n), traj.at(n + 1)
    re1, im1 = _inner(g, a, b)
    re2, im2 = _inner(g, b, a)
    assert im1 + im2 == 0
    return re1 + re2


@dataclass(frozen=True)
class ConservedReport:
    G: GaussMatrix
    label: str
    values: dict[int, int]
    max_violation: int

    @property
    def conserved(self) -> bool:
        return self.max_violation == 0

    @property
    def violating_steps(self) -> list[int]:
        """Steps ``n`` with ``Q(n) != Q(n-1)``."""
        keys = sorted(self.values)
        return [n for prev, n in zip(keys, keys[1:]) if self.values[n] != self.values[prev]]

    def to_json(self) -> dict:
        return {"G_label": self.label,
                "values": [[n, format_exact(v)] for n, v in sorted(self.values.items())],
                "max_violation": format_exact(self.max_violation)}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _max_violation(values: Mapping[int, int]) -> int:
    keys = sorted(values)
    return max((abs(values[b] - values[a]) for a, b in zip(keys, keys[1:])), default=0)


def _require_theorem_a(spec: HamiltonianSpec, g: GaussMatrix):
    _require_self_adjoint(g, spec.dim)
    if not commutator(g, spec.H).is_zero():
        raise NotCommuting("[G, H] != 0: the conservation theorem does not apply")


def check_theorem_a(traj: Trajectory, g: GaussMatrix, label: str = "G") -> ConservedReport:
    """``Q_G(n)`` at every admissible ``n`` plus the largest step-to-step jump."""
    _require_theorem_a(traj.spec, g)
    values = {n: staggered_invariant(traj, g, n) for n in range(traj.n0, traj.n1)}
    return ConservedReport(g, label, values, _max_violation(values))


def invariant_series(traj: Trajectory, g: GaussMatrix, label: str = "G") -> ConservedReport:
    """Like :func:`check_theorem_a` without the commutator precondition.

    Used to exhibit non-conservation when ``[G, H] != 0``.
    """
    _require_self_adjoint(g, traj.spec.dim)
    values = {n: staggered_invariant(traj, g, n) for n in range(traj.n0, traj.n1)}
    return ConservedReport(g, label, values, _max_violation(values))


def check_theorem_a_stream(spec: HamiltonianSpec, states: Iterable[CaState],
                           generators: Mapping[str, GaussMatrix],
                           keep_values: bool = False) -> dict[str, ConservedReport]:
    """Streaming version of :func:`check_theorem_a` for very long trajectories.

    Consumes ``states`` once, holding two slices at a time.  Without
    ``keep_values`` only the first value and the values at steps where
    ``Q`` jumps are recorded.
    """
    for g in generators.values():
        _require_theorem_a(spec, g)
    values: dict[str, dict[int, int]] = {label: {} for label in generators}
    last = dict.fromkeys(generators)
    worst = dict.fromkeys(generators, 0)
    prev = None
    for state in states:
        if prev is not None:
            for label, g in generators.items():
                q = _q_fast(g, prev.x, prev.p, state.x, state.p)
                if last[label] is None or keep_values or q != last[label]:
                    values[label][prev.n] = q
                if last[label] is not None:
                    worst[label] = max(worst[label], abs(q - last[label]))
                last[label] = q
        prev = state
    if prev is None:
        raise TooShort("no states to check")
    return {label: ConservedReport(g, label, values[label], worst[label])
            for label, g in generators.items()}


@dataclass(frozen=True)
class CommutantFamily:
    spec: HamiltonianSpec
    members: tuple[GaussMatrix, ...]
    labels: tuple[str, ...]

    def labelled(self) -> dict[str, GaussMatrix]:
        return dict(zip(self.labels, self.members))


def generate_commutant(spec: HamiltonianSpec, degree: int) -> CommutantFamily:
    """``{I, H, H^2, ..., H^degree}`` with repeated matrices removed."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    members: list[GaussMatrix] = []
    labels: list[str] = []
    power = GaussMatrix.identity(spec.dim)
    for k in range(degree + 1):
        if power not in members:
            members.append(power)
            labels.append("I" if k == 0 else "H" if k == 1 else f"H^{k}")
        power = power @ spec.H
    return CommutantFamily(spec, tuple(members), tuple(labels))


def leibniz_identity_check(o: Sequence[int], o2: Sequence[int]) -> bool:
    """Check ``O O'|_{n+1} - O O'|_{n-1} = (dO (O'_+ + O'_-) + (O_+ + O_-) dO') / 2``.

    ``dO`` is the centred difference ``O[n+1] - O[n-1]``.  Both sides are
    compared after multiplying by 2, so no rounding is involved.
    """
    if len(o) != len(o2):
        raise DimensionMismatch("sequences must have equal length")
    if len(o) < 3:
        raise TooShort("need at least three terms")

    def dot_(seq, n):
        return seq[n + 1] - seq[n - 1]

    for n in range(1, len(o) - 1):
        lhs = o[n + 1] * o2[n + 1] - o[n - 1] * o2[n - 1]
        rhs = dot_(o, n) * (o2[n + 1] + o2[n - 1]) + (o[n + 1] + o[n - 1]) * dot_(o2, n)
        if 2 * lhs != rhs:
            return False
    return True


def two_time_discrete(traj: Trajectory, g: GaussMatrix, n1: int, n2: int) -> int:
    """``C_G(n1, n2) = Re(psi_{n1}^dagger G psi_{n2})``."""
    _require_self_adjoint(g, traj.spec.dim)
    a, b = _index(traj, n1), _index(traj, n2)
    re1, _ = _inner(g, a, b)
    re2, _ = _inner(g, b, a)
    assert re1 == re2
    return re1


def equal_time_norms(traj: Trajectory) -> list[int]:
    """``psi_n^dagger psi_n`` along the trajectory."""
    return [dot(s.x, s.x) + dot(s.p, s.p) for s in traj.states]


# -- admissible unitaries --------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityVerdict:
    unitary: bool
    commutes: bool
    gaussian_integer: bool = True

    @property
    def admissible(self) -> bool:
        return self.unitary and self.commutes and self.gaussian_integer


def admissible_unitary_check(u: GaussMatrix, spec: HamiltonianSpec) -> AdmissibilityVerdict:
    if u.dim != spec.dim:
        raise DimensionMismatch(f"U is {u.dim}x{u.dim}, H is {spec.dim}x{spec.dim}")
    unitary = u.adjoint() @ u == GaussMatrix.identity(u.dim)
    commutes = commutator(u, spec.H).is_zero()
    return AdmissibilityVerdict(unitary, commutes)


PHASES = ((1, 0), (0, 1), (-1, 0), (0, -1))


def _signed_phase_matrix(perm: Sequence[int], phases: Sequence[tuple[int, int]]) -> GaussMatrix:
    n = len(perm)
    re = [[0] * n for _ in range(n)]
    im = [[0] * n for _ in range(n)]
    for i, (j, (a, b)) in enumerate(zip(perm, phases)):
        re[i][j], im[i][j] = a, b
    return GaussMatrix(tuple(map(tuple, re)), tuple(map(tuple, im)))


def enumerate_admissible_unitaries(spec: HamiltonianSpec, max_dim: int = 6) -> list[GaussMatrix]:
    """All signed-phase permutation matrices that commute with ``H``.

    ``U[i, perm[i]] = phase[i]``.  The commutation condition reads
    ``phase[i] H[perm[i], j] == H[i, k] phase[k]`` with ``perm[k] = j``, so
    phases are assigned row by row and a branch is cut as soon as a
    condition between two assigned rows fails.
    """
    n = spec.dim
    if n > max_dim:
        raise DimensionTooLarge(f"dimension {n} exceeds the enumeration bound {max_dim}")
    h = spec.H
    entries = [[complex(h[i, j]) for j in range(n)] for i in range(n)]
    phase_values = [complex(a, b) for a, b in PHASES]
    found = []
    for perm in itertools.permutations(range(n)):
        inv = [0] * n
        for i, j in enumerate(perm):
            inv[j] = i
        chosen: list[int] = []

        def consistent(i: int) -> bool:
            # all conditions touching row i and rows already fixed
            for a in range(i + 1):
                for j in range(n):
                    k = inv[j]
                    if k > i or (a != i and k != i):
                        continue
                    lhs = phase_values[chosen[a]] * entries[perm[a]][j]
                    rhs = entries[a][k] * phase_values[chosen[k]]
                    if lhs != rhs:
                        return False
            return True

        def search(i: int):
            if i == n:
                found.append(_signed_phase_matrix(perm, [PHASES[c] for c in chosen]))
                return
            for c in range(4):
                chosen.append(c)
                if consistent(i):
                    search(i + 1)
                chosen.pop()

        search(0)
    return found
