"""Eigenanalysis, deformed dispersion and spectral propagation.

The leapfrog recurrence ``psi[n+1] = psi[n-1] - i c H psi[n]`` has, for
each eigenvalue ``eps`` of ``H``, the characteristic equation

    lam**2 + i c eps lam - 1 = 0.

The principal root ``lam_+ = exp(-i E l)`` defines the deformed energy
``E = arcsin(c eps / 2) / l``; the other root is the doubler.
"""

from __future__ import annotations

import cmath
import csv
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (NoConvergence, NotHermitian, OutOfValidatedRange, StabilityViolated, TooFewScales,
                     UnstableSpectrum)

HERMITIAN_TOL = 1e-12
BAND_TOL = 1e-12


def _as_hermitian(h) -> np.ndarray:
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] == 0:
        raise NotHermitian(f"expected a nonempty square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.abs(h).max()))
    if np.abs(h - h.conj().T).max() > HERMITIAN_TOL * scale:
        raise NotHermitian("matrix is not Hermitian to 1e-12")
    return h


def real_embedding(h: np.ndarray) -> np.ndarray:
    """``[[Re H, -Im H], [Im H, Re H]]``, real symmetric for Hermitian ``H``."""
    s, a = h.real, h.imag
    return np.block([[s, -a], [a, s]])


def jacobi_eigh(m: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100, scale: float | None = None):
    """Cyclic Jacobi diagonalization of a real symmetric matrix.

    Sweeps until the off-diagonal Frobenius norm drops to ``tol * scale``
    (``scale`` defaults to the Frobenius norm of ``m``).  Returns ascending
    eigenvalues and the matrix of eigenvectors as columns.
    """
    a = np.array(m, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    if scale is None:
        scale = float(np.linalg.norm(a))
    threshold = tol * scale

    def off_norm():
        return float(np.linalg.norm(a - np.diag(np.diag(a))))

    for _ in range(max_sweeps):
        if off_norm() <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(diff) + 100.0 * abs(apq) == abs(diff):
                    # apq is below diff's precision; theta would overflow, t ~ 1 / (2 theta)
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = 1.0 / (theta + math.copysign(math.hypot(theta, 1.0), theta))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * ap - s * aq, s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :], a[q, :] = c * ap - s * aq, s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
    if off_norm() > threshold:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _pair_embedding(h: np.ndarray, w: np.ndarray, vecs: np.ndarray):
    """Collapse the doubled spectrum of the real embedding to ``N`` complex pairs."""
    n = h.shape[0]
    scale = max(1.0, float(np.abs(h).max()))
    cluster_tol = 1e-8 * scale
    candidates = vecs[:n, :] + 1j * vecs[n:, :]
    chosen = []
    start = 0
    while start < 2 * n:
        stop = start + 1
        while stop < 2 * n and w[stop] - w[stop - 1] <= cluster_tol:
            stop += 1
        want = (stop - start + 1) // 2
        pool = [candidates[:, j] for j in range(start, stop)]
        for _ in range(want):
            best, best_norm = None, -1.0
            for z in pool:
                r = z.copy()
                for y in chosen:
                    r -= (y.conj() @ r) * y
                norm = float(np.linalg.norm(r))
                if norm > best_norm:
                    best, best_norm = r, norm
            chosen.append(best / best_norm)
        start = stop
    vectors = np.column_stack(chosen[:n])
    eps = np.real(np.einsum("ij,ik,kj->j", vectors.conj(), h, vectors))
    order = np.argsort(eps, kind="stable")
    return eps[order], vectors[:, order]


@dataclass(frozen=True)
class SpectralData:
    """Eigenpairs of ``H`` with the deformed dispersion for lattice step ``l`` and lapse ``c``."""

    eps: np.ndarray
    vectors: np.ndarray
    l: float = 1.0
    c: int = 2

    @property
    def scaled(self) -> np.ndarray:
        """``c * eps / 2``; stable modes lie in ``[-1, 1]``."""
        return self.c * self.eps / 2.0

    @cached_property
    def stable(self) -> np.ndarray:
        return np.abs(self.scaled) <= 1.0 + BAND_TOL

    @cached_property
    def marginal(self) -> np.ndarray:
        """Modes sitting on the band edge, where the two roots coincide."""
        return np.abs(np.abs(self.scaled) - 1.0) <= BAND_TOL

    @cached_property
    def E(self) -> np.ndarray:
        out = np.full(self.eps.shape, np.nan)
        s = self.stable
        out[s] = np.arcsin(np.clip(self.scaled[s], -1.0, 1.0)) / self.l
        return out

    @cached_property
    def roots(self) -> list[tuple[complex, complex]]:
        return [mode_roots(e, self.c) for e in self.eps]

    def to_json(self) -> dict:
        return {"eps": [float(e) for e in self.eps],
                "E": [None if math.isnan(e) else float(e) for e in self.E],
                "stable": [bool(s) for s in self.stable],
                "l": float(self.l), "c": int(self.c)}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def eigensolve_hermitian(h, l: float = 1.0, c: int = 2) -> SpectralData:
    """Eigenpairs of a Hermitian matrix via Jacobi on its real embedding."""
    h = _as_hermitian(h)
    m = real_embedding(h)
    w, vecs = jacobi_eigh(m, scale=float(np.linalg.norm(h)))
    eps, vectors = _pair_embedding(h, w, vecs)
    return SpectralData(eps, vectors, l, c)


def dispersion_E(eps: float, l: float, c: int = 2) -> float | None:
    """Principal deformed energy ``arcsin(c eps / 2) / l``; ``None`` outside the band."""
    if l <= 0:
        raise ValueError("l must be positive")
    a = c * eps / 2.0
    if abs(a) > 1.0 + BAND_TOL:
        return None
    return math.asin(max(-1.0, min(1.0, a))) / l


def dispersion_series_check(eps: float, l: float) -> float:
    """Gap between ``arcsin(eps)/l`` and its two-term Taylor series."""
    if abs(eps) > 0.5:
        raise OutOfValidatedRange("series check is validated for |eps| <= 0.5")
    if l <= 0:
        raise ValueError("l must be positive")
    return abs(math.asin(eps) / l - (eps / l) * (1.0 + eps * eps / 6.0))


def series_remainder_bound(eps: float, l: float) -> float:
    """Next Taylor term of arcsin, ``(3/40) |eps|^5 / l``, with 10% headroom."""
    return 1.1 * (3.0 / 40.0) * abs(eps) ** 5 / l


def mode_roots(eps: float, c: int = 2) -> tuple[complex, complex]:
    """Roots ``(lam_+, lam_-)`` of ``lam**2 + i c eps lam - 1 = 0``."""
    a = c * eps / 2.0
    disc = cmath.sqrt(1.0 - a * a)
    return -1j * a + disc, -1j * a - disc


def _require_stable(data: SpectralData):
    if not np.all(data.stable):
        bad = data.eps[~data.stable]
        raise UnstableSpectrum(f"modes with |c eps / 2| > 1: {bad.tolist()}")


def _coefficients(data: SpectralData, psi0) -> np.ndarray:
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (data.vectors.shape[0],):
        raise ValueError(f"psi0 has shape {psi0.shape}, expected ({data.vectors.shape[0]},)")
    return data.vectors.conj().T @ psi0


def principal_pair(h, psi0, l: float, c: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Second seed ``psi1`` that excites only principal-branch modes."""
    data = eigensolve_hermitian(h, l, c)
    _require_stable(data)
    coeff = _coefficients(data, psi0)
    psi1 = data.vectors @ (np.exp(-1j * data.E * l) * coeff)
    return np.asarray(psi0, dtype=complex), psi1


def doubler_content(h, psi0, psi1, c: int = 2) -> np.ndarray:
    """Per-mode amplitude of the doubler root in the seed pair ``(psi0, psi1)``.

    Entries are NaN for band-edge modes, where the two roots coincide.
    """
    data = eigensolve_hermitian(h, 1.0, c)
    a0, a1 = _coefficients(data, psi0), _coefficients(data, psi1)
    out = np.full(a0.shape, np.nan)
    for k, (lp, lm) in enumerate(data.roots):
        if abs(lm - lp) > 1e-12:
            out[k] = abs((a1[k] - lp * a0[k]) / (lm - lp))
    return out


def leapfrog_float(h, psi0, psi1, steps: int, c: float = 2) -> np.ndarray:
    """Floating-point leapfrog, rows ``psi_0 .. psi_{steps+1}``."""
    h = np.asarray(h, dtype=complex)
    out = np.empty((steps + 2, h.shape[0]), dtype=complex)
    out[0], out[1] = psi0, psi1
    for n in range(1, steps + 1):
        out[n + 1] = out[n - 1] - 1j * c * (h @ out[n])
    return out


def evolve_bandlimited_exact(h, psi0, l: float, times: Sequence[float], c: int = 2) -> np.ndarray:
    """``sum_a exp(-i E_a t) <v_a, psi0> v_a`` with the deformed energies."""
    data = eigensolve_hermitian(h, l, c)
    _require_stable(data)
    coeff = _coefficients(data, psi0)
    t = np.asarray(times, dtype=float)
    phases = np.exp(-1j * np.outer(t, data.E))
    return (phases * coeff) @ data.vectors.T


def evolve_standard_qm(h_phys, psi0, times: Sequence[float]) -> np.ndarray:
    """Undeformed Schrodinger evolution ``exp(-i H t) psi0``."""
    data = eigensolve_hermitian(h_phys)
    coeff = _coefficients(data, psi0)
    t = np.asarray(times, dtype=float)
    phases = np.exp(-1j * np.outer(t, data.eps))
    return (phases * coeff) @ data.vectors.T


@dataclass(frozen=True)
class PropagationResult:
    times: np.ndarray
    psi_bandlimited: np.ndarray
    psi_standard: np.ndarray

    @property
    def pointwise_error(self) -> np.ndarray:
        return np.abs(self.psi_bandlimited - self.psi_standard).max(axis=1)

    @property
    def sup_error(self) -> float:
        return float(self.pointwise_error.max())

    def write_csv(self, target) -> None:
        n = self.psi_standard.shape[1]
        header = (["t"] + [f"bl_{part}_{a}" for a in range(n) for part in ("re", "im")]
                  + [f"std_{part}_{a}" for a in range(n) for part in ("re", "im")] + ["error"])
        own = isinstance(target, (str, Path))
        fh = open(target, "w", newline="") if own else target
        try:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for t, bl, st, err in zip(self.times, self.psi_bandlimited, self.psi_standard, self.pointwise_error):
                row = [repr(float(t))]
                row += [repr(float(v)) for z in bl for v in (z.real, z.imag)]
                row += [repr(float(v)) for z in st for v in (z.real, z.imag)]
                writer.writerow(row + [repr(float(err))])
        finally:
            if own:
                fh.close()


def _spectral_radius(h) -> float:
    return float(np.abs(eigensolve_hermitian(h).eps).max())


def propagate_compare(h_phys, psi0, l: float, T: float, samples: int = 401) -> PropagationResult:
    """Bandlimited (lattice step ``l``) versus standard evolution on ``[0, T]``."""
    h_phys = _as_hermitian(h_phys)
    if l * _spectral_radius(h_phys) >= 1.0:
        raise StabilityViolated(f"l * spectral radius must be < 1 (l={l})")
    times = np.linspace(0.0, T, samples)
    bl = evolve_bandlimited_exact(l * h_phys, psi0, l, times, c=2)
    st = evolve_standard_qm(h_phys, psi0, times)
    return PropagationResult(times, bl, st)


def deformation_error(h_phys, psi0, l: float, T: float, samples: int = 401) -> float:
    """Sup-norm gap between the deformed and the standard evolution on ``[0, T]``."""
    return propagate_compare(h_phys, psi0, l, T, samples).sup_error


def convergence_order(h_phys, psi0, l_list: Sequence[float], T: float, samples: int = 401) -> float:
    """Least-squares slope of ``log(deformation_error)`` against ``log(l)``."""
    l_list = [float(l) for l in l_list]
    if len(l_list) < 3:
        raise TooFewScales("need at least three lattice steps")
    if any(b >= a for a, b in zip(l_list, l_list[1:])):
        raise ValueError("l_list must be strictly decreasing")
    errors = [deformation_error(h_phys, psi0, l, T, samples) for l in l_list]
    slope, _ = np.polyfit(np.log(l_list), np.log(errors), 1)
    return float(slope)
