"""Independent reference implementations used only by the tests.

Nothing here imports the package internals: every oracle works from the
raw integer matrices and plain tuples so that a bug in the library cannot
hide in both places.
"""

import itertools
from fractions import Fraction

import numpy as np


def gmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def gadd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def leapfrog_oracle(S, A, c, psi0, psi1, steps):
    """psi_{n+1} = psi_{n-1} - i c H psi_n with H = S + iA, Gaussian integers as tuples."""
    n = len(S)
    H = [[(S[i][j], A[i][j]) for j in range(n)] for i in range(n)]
    out = [list(psi0), list(psi1)]
    for _ in range(steps):
        prev, cur = out[-2], out[-1]
        nxt = []
        for i in range(n):
            acc = (0, 0)
            for j in range(n):
                acc = gadd(acc, gmul(H[i][j], cur[j]))
            # -i c acc
            step = (c * acc[1], -c * acc[0])
            nxt.append(gadd(prev[i], step))
        out.append(nxt)
    return out


def h_oracle(S, A, x, p):
    n = len(S)
    quad = sum(S[a][b] * (p[a] * p[b] + x[a] * x[b]) for a in range(n) for b in range(n))
    lin = sum(A[a][b] * p[a] * x[b] for a in range(n) for b in range(n))
    return Fraction(quad, 2) + lin


def action_oracle(S, A, c, states):
    """Direct summation of the action over ``states`` given as (x, p, tau, pi) tuples."""
    total = Fraction(0)
    for k in range(1, len(states)):
        x1, p1, t1, q1 = states[k]
        x0, p0, t0, q0 = states[k - 1]
        dtau = t1 - t0
        kinetic = sum((p1[a] + p0[a]) * (x1[a] - x0[a]) for a in range(len(x1)))
        cal_a = dtau * (h_oracle(S, A, x1, p1) + h_oracle(S, A, x0, p0)) + c * Fraction(q1)
        total += kinetic + (Fraction(q1) + Fraction(q0)) * dtau - cal_a
    return total


def signed_phase_bruteforce(h: np.ndarray):
    """Every matrix with entries in {0, +-1, +-i} that is unitary and commutes with ``h``.

    Exhaustive over all 5**(N*N) candidates, done in vectorized chunks.
    """
    n = h.shape[0]
    values = np.array([0, 1, -1, 1j, -1j])
    total = 5 ** (n * n)
    found = []
    ident = np.eye(n)
    chunk = 200_000
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        digits = (idx[:, None] // 5 ** np.arange(n * n)[None, :]) % 5
        u = values[digits].reshape(-1, n, n)
        uu = np.conj(np.transpose(u, (0, 2, 1))) @ u
        unitary = np.all(np.abs(uu - ident) < 1e-9, axis=(1, 2))
        comm = np.all(np.abs(u @ h - h @ u) < 1e-9, axis=(1, 2))
        found.extend(u[unitary & comm])
    return found


def signed_phase_all(n):
    """All 4**n n! signed-phase permutation matrices, built directly."""
    out = []
    for perm in itertools.permutations(range(n)):
        for phases in itertools.product([1, 1j, -1, -1j], repeat=n):
            m = np.zeros((n, n), dtype=complex)
            for i, (j, ph) in enumerate(zip(perm, phases)):
                m[i, j] = ph
            out.append(m)
    return out


def single_mode_phase_error(eps_phys, l, T):
    """Sup over [0, T] of |exp(-i E t) - exp(-i eps t)| for one mode, E = arcsin(l eps) / l."""
    E = np.arcsin(l * eps_phys) / l
    return 2.0 * abs(np.sin((E - eps_phys) * T / 2.0))


def arcsin_tail(eps, terms=80):
    """Sum of the arcsin Maclaurin series from the eps**5 term onwards."""
    from math import comb
    return sum(comb(2 * k, k) / (4 ** k * (2 * k + 1)) * eps ** (2 * k + 1) for k in range(2, terms))
