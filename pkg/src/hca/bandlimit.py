"""Sinc reconstruction of automaton trajectories and continuum-side checks.

Grid samples ``psi_n`` at ``t_n = n l`` are interpolated with the
band-limited kernel ``sin(w (t - t_n)) / (w (t - t_n))``, ``w = pi / l``.
Trajectories are bounded at best and never square integrable, so the sum
runs over the stored window only.  Evaluations are restricted to points at
least ``margin`` grid steps from either edge, and every tolerance here is
a function of that distance: the truncated kernel tail falls off like
``1 / distance``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dynamics import Trajectory
from .errors import (EmptyWindow, NonFiniteTime, NotCommuting, OutsideTrustedRegion, PrecisionLoss,
                     UnstableSpectrum)
from .spectral import eigensolve_hermitian

FLOAT_EXACT_LIMIT = 2 ** 53
COMMUTE_TOL = 1e-12


@dataclass(frozen=True)
class SampledWave:
    """Complex samples ``samples[k, alpha]`` of ``psi^alpha`` at ``t = (n0 + k) l``."""

    l: float
    n0: int
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim == 1:
            samples = samples.reshape(-1, 1)
        object.__setattr__(self, "samples", samples)
        if not self.l > 0:
            raise ValueError("l must be positive")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")

    @property
    def omega_max(self) -> float:
        return math.pi / self.l

    @property
    def n1(self) -> int:
        return self.n0 + self.samples.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n0, self.n1 + 1)

    @property
    def times(self) -> np.ndarray:
        return self.indices * self.l

    def scaled(self, factor: complex) -> SampledWave:
        return SampledWave(self.l, self.n0, self.samples * factor)

    def write_csv(self, target) -> None:
        """Header line ``# l=.. n0=.. n1=..`` then ``n, t, re_0, im_0, ...`` rows."""
        own = isinstance(target, (str, Path))
        fh = open(target, "w", newline="") if own else target
        try:
            fh.write(f"# l={self.l!r} n0={self.n0} n1={self.n1}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["n", "t"] + [f"{part}_{a}" for a in range(self.dim) for part in ("re", "im")])
            for n, t, row in zip(self.indices, self.times, self.samples):
                writer.writerow([int(n), repr(float(t))] + [repr(float(v)) for z in row for v in (z.real, z.imag)])
        finally:
            if own:
                fh.close()


def read_samples_csv(source) -> SampledWave:
    own = isinstance(source, (str, Path))
    fh = open(source, newline="") if own else source
    try:
        meta = dict(item.split("=", 1) for item in fh.readline().lstrip("#").split())
        rows = [r for r in csv.reader(fh)][1:]
    finally:
        if own:
            fh.close()
    values = np.array([[float(v) for v in r[2:]] for r in rows if r])
    samples = values[:, 0::2] + 1j * values[:, 1::2]
    wave = SampledWave(float(meta["l"]), int(meta["n0"]), samples)
    if wave.n1 != int(meta["n1"]):
        raise ValueError("sample count does not match the window recorded in the header")
    return wave


def _to_float(value: int) -> float:
    if abs(value) > FLOAT_EXACT_LIMIT:
        raise PrecisionLoss(f"integer {value} exceeds 2**53 and cannot enter the float layer exactly")
    return float(value)


def wave_from_trajectory(traj: Trajectory, l: float) -> SampledWave:
    """Float samples of ``psi_n = x_n + i p_n``.

    Rejects non-constant lapses and Hamiltonians with modes outside the
    stable band, whose trajectories grow exponentially.
    """
    if not traj.lapse.is_constant:
        raise ValueError("the sampling bridge requires a constant lapse")
    data = eigensolve_hermitian(traj.spec.to_complex(), l, traj.lapse.default)
    if not np.all(data.stable):
        raise UnstableSpectrum("trajectory has modes with |c eps / 2| > 1; it cannot be band-limited")
    samples = np.array([[complex(_to_float(a), _to_float(b)) for a, b in zip(s.x, s.p)]
                        for s in traj.states])
    return SampledWave(l, traj.n0, samples)


def _kernel(wave: SampledWave, t: float) -> np.ndarray:
    # np.sinc(u) = sin(pi u) / (pi u), and omega_max (t - t_n) = pi (t / l - n)
    return np.sinc(t / wave.l - wave.indices)


def sinc_reconstruct(wave: SampledWave, t: float) -> np.ndarray:
    """Band-limited interpolant of the stored window, evaluated at ``t``."""
    if wave.samples.shape[0] == 0:
        raise EmptyWindow("no samples to reconstruct from")
    if not math.isfinite(t):
        raise NonFiniteTime(f"t={t!r}")
    return _kernel(wave, t) @ wave.samples


def reconstruct_many(wave: SampledWave, times: Sequence[float]) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if wave.samples.shape[0] == 0:
        raise EmptyWindow("no samples to reconstruct from")
    if not np.all(np.isfinite(times)):
        raise NonFiniteTime("non-finite query time")
    return np.sinc(times[:, None] / wave.l - wave.indices[None, :]) @ wave.samples


def _require_trusted(wave: SampledWave, t: float, margin: int):
    if margin < 1:
        raise ValueError("margin must be >= 1")
    if not math.isfinite(t):
        raise NonFiniteTime(f"t={t!r}")
    u = t / wave.l
    if u < wave.n0 + margin or u > wave.n1 - margin:
        raise OutsideTrustedRegion(
            f"t/l={u:.3f} is closer than {margin} steps to the window [{wave.n0}, {wave.n1}]")


def _effective_h(h, c: float) -> np.ndarray:
    return (c / 2.0) * np.asarray(h, dtype=complex)


def mod_schrodinger_residual(wave: SampledWave, h, t: float, c: float = 2, margin: int = 1) -> float:
    """``max |(psi(t+l) - psi(t-l)) / 2 + i (c/2) H psi(t)|`` on the reconstruction."""
    _require_trusted(wave, t, margin)
    plus, mid, minus = reconstruct_many(wave, [t + wave.l, t, t - wave.l])
    r = (plus - minus) / 2.0 + 1j * (_effective_h(h, c) @ mid)
    return float(np.abs(r).max())


def residual_tail_bound(wave: SampledWave, h, t: float, c: float = 2) -> float:
    """Bound on the residual left by truncating the kernel at the window edges.

    For samples that obey the leapfrog rule every interior contribution to
    the residual cancels; what remains are four edge terms, each a sample
    times one kernel value, and ``|sinc(u)| <= 1 / (pi |u|)``.
    """
    s = float(np.abs(wave.samples).max())
    hn = float(np.abs(_effective_h(h, c)).sum(axis=1).max())
    u = t / wave.l

    def k(n):
        d = abs(u - n)
        return 1.0 if d < 1.0 else 1.0 / (math.pi * d)

    n0, n1 = wave.n0, wave.n1
    return s * (0.5 * k(n0 - 1) + (0.5 + hn) * k(n0) + (0.5 + hn) * k(n1) + 0.5 * k(n1 + 1))


def _require_commuting(g, h):
    g, h = np.asarray(g, dtype=complex), np.asarray(h, dtype=complex)
    scale = max(1.0, float(np.abs(g).max()) * float(np.abs(h).max()))
    if np.abs(g @ h - h @ g).max() > COMMUTE_TOL * scale:
        raise NotCommuting("[G, H] != 0 within 1e-12")
    return g


def continuum_conservation_check(wave: SampledWave, g, h, t: float, margin: int = 1) -> float:
    """``|psi^dagger G D psi + (D psi)^dagger G psi|`` at ``t``.

    ``D psi = (psi(t+l) - psi(t-l)) / 2`` is the continuum stand-in for the
    centred lattice difference, i.e. ``-i sin(i l d/dt)`` acting on a
    band-limited function.
    """
    g = _require_commuting(g, h)
    _require_trusted(wave, t, margin)
    plus, mid, minus = reconstruct_many(wave, [t + wave.l, t, t - wave.l])
    d = (plus - minus) / 2.0
    value = mid.conj() @ g @ d + d.conj() @ g @ mid
    return float(abs(value))


def two_time_continuum(wave: SampledWave, g, t1: float, t2: float, margin: int = 1) -> float:
    """``C_G(t1, t2) = Re(psi(t1)^dagger G psi(t2))``."""
    _require_trusted(wave, t1, margin)
    _require_trusted(wave, t2, margin)
    a, b = reconstruct_many(wave, [t1, t2])
    return float(np.real(a.conj() @ np.asarray(g, dtype=complex) @ b))


def coincidence_norm(wave: SampledWave, t: float, offsets: Sequence[float] | None = None,
                     margin: int = 1) -> float:
    """Limit of ``C_1(t, t + h)`` as ``h -> 0``.

    ``C_1`` is sampled at the decreasing offsets (default ``l / 2**k``,
    ``k = 8..13``) and a cubic fit is extrapolated to ``h = 0``.  Offsets
    must be small against ``l``: content near the band edge oscillates at
    ``pi / l`` and spoils extrapolation from ``h ~ l``.
    """
    if offsets is None:
        offsets = [wave.l / 2 ** k for k in range(8, 14)]
    offsets = np.asarray(offsets, dtype=float)
    ident = np.eye(wave.dim)
    values = [two_time_continuum(wave, ident, t, t + h, margin) for h in offsets]
    coeffs = np.polyfit(offsets, values, min(3, len(offsets) - 1))
    return float(np.polyval(coeffs, 0.0))
