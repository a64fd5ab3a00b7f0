import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qep.diverge import d1_umegaki, wgkl
from qep.errors import NonCommutingSupports, SupportViolation
from qep.modular import (
    araki_d1,
    connes_cocycle,
    modular_flow,
    petz_limit_d1,
    relative_modular,
    unvec,
    vec,
)
from qep.sampling import random_full_rank_state, random_state, seed_for

from conftest import PLUS

seeds = st.integers(0, 2**32 - 1)


def faithful(seed, d, n=2):
    rng = np.random.default_rng(seed)
    return [random_full_rank_state(d, rng, 0.01) for _ in range(n)]


def test_vec_convention(rng):
    A, X, B = (rng.normal(size=(3, 3)) for _ in range(3))
    assert np.allclose(vec(A @ X @ B), np.kron(B.T, A) @ vec(X))
    assert np.allclose(unvec(vec(X), 3), X)


class TestRelativeModular:
    def test_identity(self):
        D = relative_modular(np.eye(3) / 3, np.eye(3) / 3)
        assert np.allclose(D.matrix, np.eye(9))

    def test_diagonal_ratios(self):
        a, b = 0.3, 0.6
        D = relative_modular(np.diag([a, 1 - a]), np.diag([b, 1 - b]))
        assert np.allclose(D.matrix, np.diag(np.diag(D.matrix)))
        expect = sorted([a / b, a / (1 - b), (1 - a) / b, (1 - a) / (1 - b)])
        assert np.allclose(sorted(D.spectrum()), expect)

    def test_kernel_of_right_multiplication(self):
        D = relative_modular(np.eye(2) / 2, np.diag([1.0, 0.0]))
        X = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.allclose(D(X), 0.5 * X @ np.diag([1.0, 0.0]))

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_spectrum_is_ratio_multiset(self, d):
        for k in range(5):
            phi, omega = faithful(seed_for(3, d, k), d)
            lp, lw = np.linalg.eigvalsh(phi.matrix), np.linalg.eigvalsh(omega.matrix)
            ratios = np.sort((lp[:, None] / lw[None, :]).ravel())
            assert np.max(np.abs(np.sort(relative_modular(phi, omega).spectrum()) - ratios)) <= 1e-9


class TestArakiD1:
    def test_examples(self):
        rho = random_full_rank_state(3, np.random.default_rng(0), 0.01)
        assert araki_d1(rho, rho) == pytest.approx(0.0, abs=1e-12)
        assert araki_d1(np.diag([1.0, 0.0]), np.eye(2) / 2) == pytest.approx(math.log(2), abs=1e-12)
        assert araki_d1(np.eye(2) / 2, np.diag([1.0, 0.0])) == math.inf

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_agrees_with_trace_formula(self, d):
        worst = 0.0
        for k in range(100):
            omega, phi = faithful(seed_for(4, d, k), d)
            worst = max(worst, abs(araki_d1(omega, phi) - d1_umegaki(omega, phi)))
        assert worst <= 1e-9

    def test_rank_deficient_omega(self):
        rng = np.random.default_rng(7)
        omega = random_state(3, rng, rank=2)
        phi = random_full_rank_state(3, rng, 0.01)
        assert araki_d1(omega, phi) == pytest.approx(d1_umegaki(omega, phi), abs=1e-9)


class TestCocycle:
    def test_equal_faithful_states(self):
        rho = faithful(1, 3, 1)[0]
        for t in (-1.0, 0.0, 0.3, 5.0):
            assert np.allclose(connes_cocycle(rho, rho, t), np.eye(3))

    def test_time_zero(self):
        phi, omega = faithful(2, 3)
        assert np.allclose(connes_cocycle(phi, omega, 0.0), np.eye(3))

    def test_diagonal_imaginary_powers(self):
        a, b, t = 0.2, 0.7, 1.3
        u = connes_cocycle(np.diag([a, 1 - a]), np.diag([b, 1 - b]), t)
        expect = np.diag([(a / b) ** (1j * t), ((1 - a) / (1 - b)) ** (1j * t)])
        assert np.allclose(u, expect)

    def test_noncommuting_supports_rejected(self):
        with pytest.raises(NonCommutingSupports):
            connes_cocycle(np.diag([1.0, 0.0]), PLUS, 0.5)

    @given(seed=seeds, t=st.floats(-5, 5))
    def test_chain_rule(self, seed, t):
        phi, psi, omega = faithful(seed, 3, 3)
        lhs = connes_cocycle(phi, psi, t) @ connes_cocycle(psi, omega, t)
        assert np.max(np.abs(lhs - connes_cocycle(phi, omega, t))) <= 1e-9

    def test_modular_flow_fixes_commutant(self):
        omega = np.diag([0.2, 0.3, 0.5])
        x = np.diag([1.0, 2.0, 3.0])
        assert np.allclose(modular_flow(omega, 0.7, x), x)


class TestPetz:
    def test_equal_states(self):
        rho = faithful(3, 2, 1)[0]
        est = petz_limit_d1(rho, rho)
        # u_t - I is pure roundoff here, amplified by 1/t at the finest grid point
        assert abs(est.value) <= 1e-10
        assert all(abs(s) <= 1e-10 for s in est.samples)

    def test_diagonal_qubit(self):
        omega, phi = np.diag([0.8, 0.2]), np.diag([0.35, 0.65])
        assert petz_limit_d1(omega, phi).value == pytest.approx(wgkl([0.8, 0.2], [0.35, 0.65]), abs=1e-6)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_qubit(self, seed):
        omega, phi = faithful(seed, 2)
        est = petz_limit_d1(omega, phi)
        assert abs(est.value - d1_umegaki(omega, phi)) <= 1e-6
        assert est.order >= 1.0
        assert est.error <= 1e-6

    def test_support_violation(self):
        with pytest.raises(SupportViolation):
            petz_limit_d1(np.eye(2) / 2, np.diag([1.0, 0.0]))

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            petz_limit_d1(np.eye(2) / 2, np.eye(2) / 2, t_grid=(1e-2, 1e-3))
