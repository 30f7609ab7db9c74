"""Exact integer and Gaussian-integer linear algebra.

Everything here works on plain Python ``int`` (arbitrary precision), so
nothing overflows and nothing rounds.  Matrices are tuples of row tuples;
Gaussian-integer matrices are stored as a pair of integer matrices
``(re, im)``, which keeps the hot loops free of per-entry objects.

Hamiltonian values carry a factor 1/2 and are returned as
:class:`fractions.Fraction` with denominator 1 or 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, NotAntisymmetric, NotSymmetric

try:  # GMP multiplication is several times faster on very large integers
    from gmpy2 import mpz as _mpz
except ImportError:  # pragma: no cover
    _mpz = int

IntVector = tuple[int, ...]
IntMatrix = tuple[tuple[int, ...], ...]


def bigint(value):
    """Return ``value`` as the fastest available exact integer type."""
    return _mpz(value)


# -- scalars -------------------------------------------------------------


@dataclass(frozen=True)
class GaussInt:
    """A Gaussian integer ``re + i*im``."""

    re: int
    im: int = 0

    def __add__(self, other):
        other = _as_gauss(other)
        return GaussInt(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_gauss(other)
        return GaussInt(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return _as_gauss(other) - self

    def __mul__(self, other):
        other = _as_gauss(other)
        return GaussInt(self.re * other.re - self.im * other.im,
                        self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __neg__(self):
        return GaussInt(-self.re, -self.im)

    def conjugate(self) -> GaussInt:
        return GaussInt(self.re, -self.im)

    def norm(self) -> int:
        """Squared modulus ``re**2 + im**2``."""
        return self.re * self.re + self.im * self.im

    def __complex__(self):
        return complex(self.re, self.im)

    def __bool__(self):
        return bool(self.re or self.im)

    def __repr__(self):
        return f"GaussInt({self.re}, {self.im})"


I_UNIT = GaussInt(0, 1)


def _as_gauss(value) -> GaussInt:
    if isinstance(value, GaussInt):
        return value
    if isinstance(value, int) or hasattr(value, "__index__"):
        return GaussInt(int(value), 0)
    if isinstance(value, complex) and value.real.is_integer() and value.imag.is_integer():
        return GaussInt(int(value.real), int(value.imag))
    raise TypeError(f"cannot interpret {value!r} as a Gaussian integer")


# -- integer vectors and matrices -----------------------------------------


def parse_int(value) -> int:
    """Parse a decimal-string or integral literal into an ``int``.

    Floats are refused, even integral ones, because they may already have
    lost precision on the way in.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not integers here")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        return int(value.strip(), 10)
    if hasattr(value, "__index__"):
        return int(value)
    raise TypeError(f"expected a decimal integer string, got {value!r}")


def int_vector(values: Iterable) -> IntVector:
    return tuple(parse_int(v) for v in values)


def int_matrix(rows: Iterable[Iterable]) -> IntMatrix:
    """Validate and normalize a square integer matrix literal."""
    matrix = tuple(tuple(parse_int(v) for v in row) for row in rows)
    n = len(matrix)
    if n == 0:
        raise DimensionMismatch("matrices of dimension 0 are not supported")
    for row in matrix:
        if len(row) != n:
            raise DimensionMismatch(f"matrix is not square: row of length {len(row)} in {n}x{n}")
    return matrix


def transpose(m: IntMatrix) -> IntMatrix:
    return tuple(zip(*m))


def matvec(m: Sequence[Sequence[int]], v: Sequence[int]) -> list:
    return [sum(a * b for a, b in zip(row, v) if a) for row in m]


def dot(u: Sequence[int], v: Sequence[int]):
    return sum(a * b for a, b in zip(u, v))


def zero_matrix(n: int) -> IntMatrix:
    return tuple((0,) * n for _ in range(n))


def identity_matrix(n: int) -> IntMatrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def _matmul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    cols = transpose(b)
    return tuple(tuple(dot(row, col) for col in cols) for row in a)


def _combine(a: IntMatrix, b: IntMatrix, sign: int) -> IntMatrix:
    return tuple(tuple(x + sign * y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


# -- Gaussian-integer matrices ------------------------------------------


@dataclass(frozen=True)
class GaussMatrix:
    """Square matrix with Gaussian-integer entries, stored as ``re + i*im``."""

    re: IntMatrix
    im: IntMatrix

    def __post_init__(self):
        if len(self.re) != len(self.im) or any(len(r) != len(self.re) for r in self.re + self.im):
            raise DimensionMismatch("real and imaginary parts must be square and of equal size")

    @classmethod
    def from_int(cls, m: IntMatrix) -> GaussMatrix:
        return cls(m, zero_matrix(len(m)))

    @classmethod
    def identity(cls, n: int) -> GaussMatrix:
        return cls.from_int(identity_matrix(n))

    @classmethod
    def zero(cls, n: int) -> GaussMatrix:
        return cls.from_int(zero_matrix(n))

    @classmethod
    def from_entries(cls, rows: Sequence[Sequence]) -> GaussMatrix:
        """Build from rows of :class:`GaussInt`, ints, or ``[re, im]`` literals."""
        entries = [[_entry(v) for v in row] for row in rows]
        n = len(entries)
        if n == 0 or any(len(row) != n for row in entries):
            raise DimensionMismatch("Gaussian-integer matrix must be square and nonempty")
        return cls(tuple(tuple(z.re for z in row) for row in entries),
                   tuple(tuple(z.im for z in row) for row in entries))

    @property
    def dim(self) -> int:
        return len(self.re)

    def __getitem__(self, index) -> GaussInt:
        i, j = index
        return GaussInt(self.re[i][j], self.im[i][j])

    def rows(self) -> list[list[GaussInt]]:
        return [[self[i, j] for j in range(self.dim)] for i in range(self.dim)]

    def _check(self, other: GaussMatrix):
        if not isinstance(other, GaussMatrix):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionMismatch(f"dimension {self.dim} vs {other.dim}")
        return None

    def __add__(self, other: GaussMatrix) -> GaussMatrix:
        if self._check(other) is NotImplemented:
            return NotImplemented
        return GaussMatrix(_combine(self.re, other.re, 1), _combine(self.im, other.im, 1))

    def __sub__(self, other: GaussMatrix) -> GaussMatrix:
        if self._check(other) is NotImplemented:
            return NotImplemented
        return GaussMatrix(_combine(self.re, other.re, -1), _combine(self.im, other.im, -1))

    def __neg__(self) -> GaussMatrix:
        return GaussMatrix(_combine(zero_matrix(self.dim), self.re, -1),
                           _combine(zero_matrix(self.dim), self.im, -1))

    def __matmul__(self, other: GaussMatrix) -> GaussMatrix:
        if self._check(other) is NotImplemented:
            return NotImplemented
        rr, ii = _matmul(self.re, other.re), _matmul(self.im, other.im)
        ri, ir = _matmul(self.re, other.im), _matmul(self.im, other.re)
        return GaussMatrix(_combine(rr, ii, -1), _combine(ri, ir, 1))

    def scale(self, z) -> GaussMatrix:
        z = _as_gauss(z)
        re = tuple(tuple(z.re * a - z.im * b for a, b in zip(ra, rb)) for ra, rb in zip(self.re, self.im))
        im = tuple(tuple(z.re * b + z.im * a for a, b in zip(ra, rb)) for ra, rb in zip(self.re, self.im))
        return GaussMatrix(re, im)

    def adjoint(self) -> GaussMatrix:
        neg_im = tuple(tuple(-v for v in row) for row in transpose(self.im))
        return GaussMatrix(transpose(self.re), neg_im)

    def is_zero(self) -> bool:
        return not any(any(row) for row in self.re + self.im)

    def is_self_adjoint(self) -> bool:
        return self == self.adjoint()

    def apply(self, x: Sequence[int], p: Sequence[int]) -> tuple[list, list]:
        """Real and imaginary parts of ``G (x + i p)``."""
        return ([a - b for a, b in zip(matvec(self.re, x), matvec(self.im, p))],
                [a + b for a, b in zip(matvec(self.re, p), matvec(self.im, x))])

    def to_complex(self) -> np.ndarray:
        return np.array(self.re, dtype=float) + 1j * np.array(self.im, dtype=float)

    def to_literal(self) -> list[list[list[str]]]:
        return [[[str(z.re), str(z.im)] for z in row] for row in self.rows()]

    def __repr__(self):
        body = ", ".join("[" + ", ".join(_fmt_gauss(z) for z in row) + "]" for row in self.rows())
        return f"GaussMatrix([{body}])"


def _fmt_gauss(z: GaussInt) -> str:
    if not z.im:
        return str(z.re)
    return f"{z.re}{'+' if z.im >= 0 else '-'}{abs(z.im)}i"


def _entry(value) -> GaussInt:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex literal must be [re, im], got {value!r}")
        return GaussInt(parse_int(value[0]), parse_int(value[1]))
    if isinstance(value, (str, int)) and not isinstance(value, bool):
        return GaussInt(parse_int(value), 0)
    return _as_gauss(value)


def commutator(g: GaussMatrix, h: GaussMatrix) -> GaussMatrix:
    """Exact ``GH - HG``."""
    if g.dim != h.dim:
        raise DimensionMismatch(f"cannot commute {g.dim}x{g.dim} with {h.dim}x{h.dim}")
    return g @ h - h @ g


# -- Hamiltonian ---------------------------------------------------------


@dataclass(frozen=True)
class HamiltonianSpec:
    """Integer symmetric ``S`` and antisymmetric ``A``; ``H = S + iA``.

    Use :func:`build_hamiltonian` to construct a validated instance.
    """

    S: IntMatrix
    A: IntMatrix

    @property
    def dim(self) -> int:
        return len(self.S)

    @cached_property
    def H(self) -> GaussMatrix:
        return GaussMatrix(self.S, self.A)

    def to_complex(self) -> np.ndarray:
        return self.H.to_complex()

    def to_literal(self) -> dict:
        return {"S": [[str(v) for v in row] for row in self.S],
                "A": [[str(v) for v in row] for row in self.A]}


def build_hamiltonian(S, A) -> HamiltonianSpec:
    S, A = int_matrix(S), int_matrix(A)
    if len(S) != len(A):
        raise DimensionMismatch(f"S is {len(S)}x{len(S)} but A is {len(A)}x{len(A)}")
    if S != transpose(S):
        raise NotSymmetric("S must equal its transpose")
    n = len(A)
    if any(A[i][j] != -A[j][i] for i in range(n) for j in range(n)):
        raise NotAntisymmetric("A must equal minus its transpose")
    return HamiltonianSpec(S, A)


def _check_dim(spec: HamiltonianSpec, *vectors):
    for v in vectors:
        if len(v) != spec.dim:
            raise DimensionMismatch(f"vector of length {len(v)} for a {spec.dim}-dimensional Hamiltonian")


def twice_h(spec: HamiltonianSpec, x: Sequence[int], p: Sequence[int]):
    """``2 H_n`` as an integer: ``x.(Sx - Ap) + p.(Sp + Ax)``."""
    sx, sp = matvec(spec.S, x), matvec(spec.S, p)
    ax, ap = matvec(spec.A, x), matvec(spec.A, p)
    return (sum(a * (b - c) for a, b, c in zip(x, sx, ap))
            + sum(a * (b + c) for a, b, c in zip(p, sp, ax)))


def h_value_xp(spec: HamiltonianSpec, x: Sequence[int], p: Sequence[int]) -> Fraction:
    """``1/2 (x.Sx + p.Sp) + p.Ax``, exactly."""
    _check_dim(spec, x, p)
    quadratic = dot(x, matvec(spec.S, x)) + dot(p, matvec(spec.S, p))
    return Fraction(quadratic, 2) + dot(p, matvec(spec.A, x))


def h_value_psi(spec: HamiltonianSpec, psi: Sequence[GaussInt]) -> Fraction:
    """``1/2 psi^dagger H psi`` evaluated in Gaussian-integer arithmetic."""
    _check_dim(spec, psi)
    h = spec.H
    total = GaussInt(0)
    for a, za in enumerate(psi):
        za_conj = _as_gauss(za).conjugate()
        for b, zb in enumerate(psi):
            hab = h[a, b]
            if hab:
                total = total + za_conj * hab * _as_gauss(zb)
    assert total.im == 0, "psi^dagger H psi must be real for self-adjoint H"
    return Fraction(total.re, 2)


def pack_psi(x: Sequence[int], p: Sequence[int]) -> tuple[GaussInt, ...]:
    if len(x) != len(p):
        raise DimensionMismatch(f"x has length {len(x)}, p has length {len(p)}")
    return tuple(GaussInt(int(a), int(b)) for a, b in zip(x, p))


def unpack_psi(psi: Sequence[GaussInt]) -> tuple[IntVector, IntVector]:
    psi = [_as_gauss(z) for z in psi]
    return tuple(z.re for z in psi), tuple(z.im for z in psi)


# -- exact value formatting ----------------------------------------------


def format_exact(value) -> str:
    """Decimal string for an integer, ``"k/2"`` style for a fraction."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    return str(int(value))


def parse_exact(text: str) -> Fraction:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(int(text))
