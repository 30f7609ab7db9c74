import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import spec_and_pair
from hca.dynamics import Lapse, evolve
from hca.errors import (NoConvergence, NotHermitian, OutOfValidatedRange, StabilityViolated, TooFewScales,
                        UnstableSpectrum)
from hca.spectral import (convergence_order, deformation_error, dispersion_E, dispersion_series_check,
                          doubler_content, eigensolve_hermitian, evolve_bandlimited_exact,
                          evolve_standard_qm, jacobi_eigh, leapfrog_float, mode_roots, principal_pair,
                          propagate_compare, real_embedding, series_remainder_bound)
from oracles import arcsin_tail, single_mode_phase_error

SX = np.array([[0, 1], [1, 0]], dtype=complex)


def random_hermitian(rng, n, scale=1.0):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (m + m.conj().T) / 2


def same_up_to_phase(u, v, tol=1e-10):
    overlap = np.vdot(u, v)
    return abs(abs(overlap) - np.linalg.norm(u) * np.linalg.norm(v)) <= tol


hermitians = st.integers(1, 6).flatmap(
    lambda n: st.integers(0, 2 ** 32 - 1).map(lambda seed: random_hermitian(np.random.default_rng(seed), n)))


class TestEigensolve:
    def test_sigma_x(self):
        data = eigensolve_hermitian(SX)
        assert np.allclose(data.eps, [-1, 1], atol=1e-14)
        assert same_up_to_phase(data.vectors[:, 0], np.array([1, -1]) / math.sqrt(2))
        assert same_up_to_phase(data.vectors[:, 1], np.array([1, 1]) / math.sqrt(2))

    def test_zero(self):
        assert np.all(eigensolve_hermitian(np.zeros((3, 3))).eps == 0)

    def test_diagonal(self):
        data = eigensolve_hermitian(np.diag([1.0, 2.0, 3.0]))
        assert np.allclose(data.eps, [1, 2, 3], atol=1e-14)
        for k in range(3):
            assert same_up_to_phase(data.vectors[:, k], np.eye(3)[k])

    @settings(max_examples=200)
    @given(hermitians)
    def test_against_numpy(self, h):
        data = eigensolve_hermitian(h)
        ref = np.linalg.eigvalsh(h)
        assert np.allclose(data.eps, ref, atol=1e-10 * max(1.0, np.linalg.norm(h)))
        v = data.vectors
        norm = max(1.0, np.linalg.norm(h))
        assert np.abs(h @ v - v * data.eps).max() <= 1e-10 * norm
        assert np.abs(v.conj().T @ v - np.eye(h.shape[0])).max() <= 1e-10

    @pytest.mark.parametrize("h", [
        np.eye(4), np.diag([1.0, 1.0, -2.0, -2.0]),
        np.kron(SX, np.eye(2)),
        np.array([[2, 1j, 0], [-1j, 2, 0], [0, 0, 1]]),
    ])
    def test_degenerate(self, h):
        data = eigensolve_hermitian(h)
        v = data.vectors
        assert np.allclose(data.eps, np.linalg.eigvalsh(h), atol=1e-12)
        assert np.abs(h @ v - v * data.eps).max() <= 1e-10
        assert np.abs(v.conj().T @ v - np.eye(h.shape[0])).max() <= 1e-10

    @given(hermitians)
    def test_real_embedding_pairs(self, h):
        m = real_embedding(h)
        w, vecs = jacobi_eigh(m)
        n = h.shape[0]
        assert np.allclose(w[0::2], w[1::2], atol=1e-10 * max(1.0, np.linalg.norm(h)))
        assert np.allclose(w[0::2], np.linalg.eigvalsh(h), atol=1e-10 * max(1.0, np.linalg.norm(h)))
        J = np.block([[np.zeros((n, n)), -np.eye(n)], [np.eye(n), np.zeros((n, n))]])
        for k in range(2 * n):
            u = J @ vecs[:, k]
            assert np.linalg.norm(m @ u - w[k] * u) <= 1e-10 * max(1.0, np.linalg.norm(h))

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            eigensolve_hermitian(np.array([[0, 1], [0, 0]]))
        with pytest.raises(NotHermitian):
            eigensolve_hermitian(np.zeros((2, 3)))

    def test_sweep_cap(self):
        with pytest.raises(NoConvergence):
            jacobi_eigh(np.array([[1.0, 2.0], [2.0, 3.0]]), max_sweeps=0)

    def test_json(self):
        data = eigensolve_hermitian(np.diag([0.5, 3.0]))
        out = json.loads(data.dumps())
        assert out["stable"] == [True, False] and out["E"][1] is None
        assert out["E"][0] == pytest.approx(math.asin(0.5))


class TestDispersion:
    def test_band_edge(self):
        assert dispersion_E(1.0, 1.0) == pytest.approx(math.pi / 2, abs=1e-15)
        assert dispersion_E(-1.0, 0.25) == pytest.approx(-2 * math.pi, abs=1e-12)

    def test_zero(self):
        assert dispersion_E(0.0, 1.0) == 0.0

    def test_half(self):
        assert dispersion_E(0.5, 1.0) == pytest.approx(0.523598776, abs=1e-9)

    def test_unstable(self):
        assert dispersion_E(1.5, 1.0) is None
        assert dispersion_E(0.6, 1.0, c=4) is None

    def test_bad_l(self):
        with pytest.raises(ValueError):
            dispersion_E(0.1, 0.0)

    @given(st.floats(-1, 1), st.floats(0.01, 10))
    def test_sine_identity(self, eps, l):
        assert math.sin(dispersion_E(eps, l) * l) == pytest.approx(eps, abs=1e-12)

    @given(st.floats(1e-6, 0.999), st.floats(0.01, 1.0))
    def test_deformation_sign(self, x, l):
        eps_phys = x / l
        assert dispersion_E(l * eps_phys, l) > eps_phys

    def test_series_examples(self):
        assert dispersion_series_check(0.0, 1.0) == 0.0
        assert dispersion_series_check(0.1, 1.0) <= 8.3e-7

    @given(st.floats(-0.5, 0.5), st.floats(0.05, 5))
    def test_series_matches_tail_oracle(self, eps, l):
        assert dispersion_series_check(eps, l) == pytest.approx(abs(arcsin_tail(eps)) / l, rel=1e-6, abs=1e-16)

    @given(st.floats(-0.38, 0.38), st.floats(0.05, 5))
    def test_series_within_stated_bound(self, eps, l):
        # the check subtracts nearly equal doubles; allow a few ulps of eps / l
        rounding = 4 * np.finfo(float).eps * abs(eps) / l
        assert dispersion_series_check(eps, l) <= series_remainder_bound(eps, l) + rounding

    def test_stated_bound_too_tight_at_half(self):
        # higher-order terms push the true remainder past the 10% headroom
        value = dispersion_series_check(0.5, 1.0)
        assert value == pytest.approx(arcsin_tail(0.5), rel=1e-9)
        assert value == pytest.approx(2.7654e-3, abs=1e-7)
        assert value > series_remainder_bound(0.5, 1.0)

    def test_series_range(self):
        with pytest.raises(OutOfValidatedRange):
            dispersion_series_check(0.6, 1.0)


class TestRoots:
    def test_zero(self):
        lp, lm = mode_roots(0.0)
        assert (lp, lm) == (1, -1)

    def test_band_edge(self):
        lp, lm = mode_roots(1.0)
        assert abs(lp + 1j) <= 1e-12 and abs(lm + 1j) <= 1e-12

    def test_unstable(self):
        lp, lm = mode_roots(2.0)
        assert abs(lm) == pytest.approx(2 + math.sqrt(3), abs=1e-12)
        assert abs(lp) == pytest.approx(2 - math.sqrt(3), abs=1e-12)

    @given(st.floats(-5, 5), st.sampled_from([1, 2, 3]))
    def test_structure(self, eps, c):
        lp, lm = mode_roots(eps, c)
        assert abs(lp * lm + 1) <= 1e-12 * max(1.0, abs(lp), abs(lm))
        for lam in (lp, lm):
            assert abs(lam * lam + 1j * c * eps * lam - 1) <= 1e-10 * max(1.0, abs(lam)) ** 2
        on_circle = abs(abs(lp) - 1) <= 1e-12 and abs(abs(lm) - 1) <= 1e-12
        assert on_circle == (abs(c * eps / 2) <= 1)

    @given(st.floats(-0.999, 0.999), st.floats(0.1, 2))
    def test_principal_root_is_phase(self, eps, l):
        lp, _ = mode_roots(eps)
        assert abs(lp - np.exp(-1j * dispersion_E(eps, l) * l)) <= 1e-12


class TestPropagation:
    def test_principal_pair_free(self):
        psi0 = np.array([1.0, 2j])
        _, psi1 = principal_pair(np.zeros((2, 2)), psi0, 0.5)
        assert np.allclose(psi1, psi0, atol=1e-14)

    def test_principal_pair_sigma_x(self):
        psi0 = np.array([1, 1]) / math.sqrt(2)
        _, psi1 = principal_pair(SX, psi0, 1.0)
        assert np.allclose(psi1, -1j * psi0, atol=1e-12)

    @given(hermitians, st.data())
    def test_principal_pair_eigenvector(self, h, data):
        h = h / (2 * max(1.0, np.abs(np.linalg.eigvalsh(h)).max()))
        spec = eigensolve_hermitian(h, 0.7)
        k = data.draw(st.integers(0, h.shape[0] - 1))
        v = spec.vectors[:, k]
        _, psi1 = principal_pair(h, v, 0.7)
        assert np.allclose(psi1, np.exp(-1j * spec.E[k] * 0.7) * v, atol=1e-12)

    def test_principal_pair_unstable(self):
        with pytest.raises(UnstableSpectrum):
            principal_pair(np.diag([0.2, 2.0]), np.array([1.0, 0.0]), 1.0)

    def test_doubler_content(self):
        h = np.array([[0.3, 0.1j], [-0.1j, -0.4]])
        psi0 = np.array([1.0, 0.5])
        _, psi1 = principal_pair(h, psi0, 1.0)
        assert np.abs(doubler_content(h, psi0, psi1)).max() <= 1e-12
        data = eigensolve_hermitian(h)
        lm = np.array([r[1] for r in data.roots])
        coeff = data.vectors.conj().T @ psi0
        pure_doubler = data.vectors @ (lm * coeff)
        assert np.allclose(doubler_content(h, psi0, pure_doubler), np.abs(coeff), atol=1e-12)

    def test_exact_t0_and_period(self):
        psi0 = np.array([1, 1]) / math.sqrt(2)
        out = evolve_bandlimited_exact(SX, psi0, 1.0, [0.0, 4.0])
        assert np.allclose(out[0], psi0, atol=1e-14)
        assert np.allclose(out[1], psi0, atol=1e-12)

    def test_grid_agrees_with_float_leapfrog(self):
        rng = np.random.default_rng(7)
        h = random_hermitian(rng, 4)
        h = 0.8 * h / np.abs(np.linalg.eigvalsh(h)).max()
        psi0 = rng.normal(size=4) + 1j * rng.normal(size=4)
        _, psi1 = principal_pair(h, psi0, 1.0)
        steps = 1000
        lf = leapfrog_float(h, psi0, psi1, steps - 1)
        exact = evolve_bandlimited_exact(h, psi0, 1.0, np.arange(steps + 1))
        assert np.abs(lf - exact).max() <= 1e-9
        # and the exact samples satisfy the recurrence step by step
        resid = exact[2:] - exact[:-2] + 2j * (exact[1:-1] @ h.T)
        assert np.abs(resid).max() <= 1e-9

    @given(spec_and_pair(max_dim=3), st.integers(1, 3))
    def test_float_leapfrog_matches_integer_ca(self, sp, c):
        spec, pair = sp
        traj = evolve(pair, spec, Lapse(c), 25)
        psi = [np.array([complex(a, b) for a, b in zip(s.x, s.p)]) for s in traj.states]
        if max(np.abs(np.concatenate(psi))) >= 2 ** 53 / (8 * c * spec.dim):
            return
        lf = leapfrog_float(spec.to_complex(), psi[0], psi[1], 25, c)
        assert np.array_equal(lf, np.array(psi))

    def test_standard_qm(self):
        out = evolve_standard_qm(SX, np.array([1.0, 0.0]), [0.0, math.pi / 2])
        assert np.allclose(out[0], [1, 0], atol=1e-15)
        assert np.allclose(out[1], [0, -1j], atol=1e-12)

    @given(hermitians, st.floats(0, 50))
    def test_standard_qm_unitary(self, h, t):
        psi0 = np.ones(h.shape[0]) / math.sqrt(h.shape[0])
        out = evolve_standard_qm(h, psi0, [t])
        assert abs(np.linalg.norm(out[0]) - 1) <= 1e-12

    def test_single_mode_against_closed_form(self):
        err = deformation_error(np.array([[1.0]]), np.array([1.0]), 0.1, 10.0)
        oracle = single_mode_phase_error(1.0, 0.1, 10.0)
        assert err == pytest.approx(oracle, rel=1e-2)
        assert err == pytest.approx(0.01667, rel=1e-2)

    def test_halving_l_quarters_error(self):
        h, psi0 = np.array([[1.0]]), np.array([1.0])
        ratio = deformation_error(h, psi0, 0.1, 10.0) / deformation_error(h, psi0, 0.05, 10.0)
        assert ratio == pytest.approx(4.0, rel=0.02)

    def test_convergence_order_single_mode(self):
        order = convergence_order(np.array([[1.0]]), np.array([1.0]), [0.1, 0.05, 0.025], 10.0)
        assert 1.8 <= order <= 2.2

    def test_convergence_order_generic(self):
        rng = np.random.default_rng(3)
        h = random_hermitian(rng, 4)
        psi0 = rng.normal(size=4) + 1j * rng.normal(size=4)
        psi0 /= np.linalg.norm(psi0)
        order = convergence_order(h, psi0, [0.1, 0.05, 0.025], 10.0)
        assert 1.8 <= order <= 2.2

    def test_stability_violated(self):
        with pytest.raises(StabilityViolated):
            propagate_compare(np.diag([1.0, 20.0]), np.array([1.0, 0.0]), 0.1, 1.0)

    def test_too_few_scales(self):
        with pytest.raises(TooFewScales):
            convergence_order(np.array([[1.0]]), np.array([1.0]), [0.1, 0.05], 1.0)
        with pytest.raises(ValueError):
            convergence_order(np.array([[1.0]]), np.array([1.0]), [0.05, 0.1, 0.2], 1.0)

    def test_csv(self, tmp_path):
        res = propagate_compare(np.array([[1.0]]), np.array([1.0]), 0.1, 1.0, samples=5)
        path = tmp_path / "p.csv"
        res.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,bl_re_0,bl_im_0,std_re_0,std_im_0,error"
        assert len(lines) == 6
