import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qep.diverge import DivergenceKind, l1_jmgk
from qep.errors import (
    Infeasible,
    InfiniteDivergence,
    MaxIterExceeded,
    UnknownTheorem,
    ZeroProbability,
)
from qep.project import (
    SolverConfig,
    commutant_of,
    entropic_project,
    intersect,
    mre_joint,
    mre_posterior,
    regularized_d0P,
    sampling_oracle,
    sequential_projection,
    total_variation,
    triangle_residual,
    verify,
)
from qep.rules import JointTable, Sharp, Soft, jeffrey_joint, strong_lueders, weak_lueders
from qep.sampling import (
    haar_unitary,
    random_block_state,
    random_full_rank_state,
    random_pure,
    random_resolution,
    random_state,
    random_weights,
    seed_for,
)
from qep.states import (
    CommutantQL,
    FaceQsL,
    Projector,
    SupportBlock,
    TracePinnedQqJ,
    computational_resolution,
    in_constraint,
    resolution_from_groups,
)

from conftest import PLUS, trace_distance

D0 = DivergenceKind.D0
QL2 = CommutantQL(computational_resolution(2))


def rank_projector(d, r, rng):
    U = haar_unitary(d, rng)
    return Projector(U[:, :r] @ U[:, :r].conj().T)


class TestSolverExamples:
    def test_commuting_input_is_fixed_point(self):
        psi = np.diag([0.2, 0.8])
        res = entropic_project(D0, psi, QL2)
        assert np.allclose(res.minimizer.matrix, psi) and res.objective == pytest.approx(0.0, abs=1e-12)

    def test_plus_to_maximally_mixed(self):
        res = entropic_project(D0, PLUS, QL2)
        assert trace_distance(res.minimizer, np.eye(2) / 2) <= 1e-7 and res.converged

    def test_trace_pinned(self):
        res = entropic_project(D0, PLUS, TracePinnedQqJ(computational_resolution(2), (0.3, 0.7)))
        assert trace_distance(res.minimizer, np.diag([0.3, 0.7])) <= 1e-7

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(grad_tol=0.0)
        with pytest.raises(ValueError):
            SolverConfig(restarts=0)
        with pytest.raises(ValueError):
            SolverConfig(armijo_shrink=1.0)

    def test_budget_exhaustion(self):
        rng = np.random.default_rng(3)
        psi, R = random_full_rank_state(4, rng, 0.01), random_resolution(4, rng, 2)
        res = entropic_project(D0, psi, CommutantQL(R), SolverConfig(max_iter=1))
        assert not res.converged and res.iterations == 1
        with pytest.raises(MaxIterExceeded):
            entropic_project(D0, psi, CommutantQL(R), SolverConfig(max_iter=1), strict=True)

    def test_trace_norm_needs_oracle(self):
        with pytest.raises(ValueError):
            entropic_project(DivergenceKind.L1_JMGK, PLUS, QL2)

    def test_d0_face_without_regularization_is_infeasible(self):
        with pytest.raises(Infeasible):
            entropic_project(D0, np.eye(3) / 3, FaceQsL(Projector(np.diag([1.0, 1.0, 0.0]))))

    def test_pinned_weight_on_unsupported_block(self):
        with pytest.raises(ZeroProbability):
            entropic_project(D0, np.diag([1.0, 0.0]), TracePinnedQqJ(computational_resolution(2), (0.5, 0.5)))
        with pytest.raises(Infeasible):
            entropic_project(D0, np.eye(2) / 2, TracePinnedQqJ(computational_resolution(2), (1.0, 0.0)))

    def test_result_serialises(self):
        doc = entropic_project(D0, PLUS, QL2).to_dict()
        assert json.loads(json.dumps(doc))["converged"] is True


class TestSolverProperties:
    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 5))
    @settings(max_examples=15)
    def test_objective_monotone(self, seed, d):
        rng = np.random.default_rng(seed)
        psi, R = random_full_rank_state(d, rng, 0.01), random_resolution(d, rng)
        hist = entropic_project(D0, psi, CommutantQL(R), SolverConfig(random_init=True, seed=seed)).history
        slack = 64 * np.finfo(float).eps * max(1.0, abs(hist[0]))
        assert all(b <= a + slack for a, b in zip(hist, hist[1:]))

    @pytest.mark.parametrize("kind", [D0, DivergenceKind.D1_UMEGAKI, DivergenceKind.L2_HS_STATES,
                                      DivergenceKind.D_HALF, DivergenceKind.BURES])
    def test_uniqueness_probe(self, kind):
        for k in range(4):
            rng = np.random.default_rng(seed_for(20, k))
            psi, R = random_full_rank_state(3, rng, 0.01), random_resolution(3, rng)
            a = entropic_project(kind, psi, CommutantQL(R), SolverConfig(random_init=True, seed=1))
            b = entropic_project(kind, psi, CommutantQL(R), SolverConfig(random_init=True, seed=2))
            assert a.converged and b.converged
            assert trace_distance(a.minimizer, b.minimizer) <= 1e-6

    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 5))
    @settings(max_examples=15)
    def test_converged_results_are_feasible(self, seed, d):
        rng = np.random.default_rng(seed)
        psi, R = random_state(d, rng), random_resolution(d, rng)
        lam = random_weights(len(R), rng, 0.05)
        K = TracePinnedQqJ(R, lam)
        res = entropic_project(D0, psi, K)
        assert res.converged
        assert res.grad_residual <= 1e-10 and res.feas_residual <= 1e-9
        assert in_constraint(res.minimizer, K)[0]

    def test_rank_deficient_psi(self):
        for k in range(5):
            rng = np.random.default_rng(seed_for(21, k))
            psi, R = random_state(4, rng, rank=2), random_resolution(4, rng)
            res = entropic_project(D0, psi, CommutantQL(R))
            assert res.converged
            assert trace_distance(res.minimizer, weak_lueders(psi, R)) <= 1e-6

    def test_wgkl_on_diagonal_states(self):
        psi = np.diag([0.1, 0.2, 0.3, 0.4])
        K = TracePinnedQqJ(computational_resolution(4, [[0, 1], [2, 3]]), (0.5, 0.5))
        res = entropic_project(DivergenceKind.WGKL, psi, K)
        assert np.allclose(np.diag(res.minimizer.matrix).real, [0.5 / 3, 1 / 3, 0.5 * 3 / 7, 0.5 * 4 / 7])

    def test_support_block_constraint(self, rng):
        psi = random_full_rank_state(3, rng, 0.01)
        P = rank_projector(3, 2, rng)
        res = entropic_project(D0, psi, SupportBlock(P), regularize=True)
        assert trace_distance(res.minimizer, strong_lueders(psi, P)) <= 1e-7


class TestRegularizedD0:
    def test_zero_on_diagonal(self):
        P = Projector(np.diag([1.0, 1.0, 0.0]))
        psi = np.diag([0.3, 0.7, 0.0])
        assert regularized_d0P(psi, psi, P) == pytest.approx(0.0, abs=1e-12)

    def test_single_point_face(self):
        P = Projector(np.diag([1.0, 0.0]))
        res = entropic_project(D0, PLUS, FaceQsL(P), regularize=True)
        assert np.allclose(res.minimizer.matrix, np.diag([1.0, 0.0]))

    @pytest.mark.parametrize("seed", range(5))
    def test_qutrit_face(self, seed):
        rng = np.random.default_rng(seed)
        psi = random_full_rank_state(3, rng, 0.01)
        P = rank_projector(3, 2, rng)
        res = entropic_project(D0, psi, FaceQsL(P), regularize=True)
        assert trace_distance(res.minimizer, strong_lueders(psi, P)) <= 1e-7
        assert res.objective == pytest.approx(regularized_d0P(res.minimizer, psi, P))

    def test_zero_probability(self):
        with pytest.raises(ZeroProbability):
            regularized_d0P(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), np.diag([1.0, 0.0]))


class TestTriangle:
    def test_trivial(self, rng):
        psi, rho = random_full_rank_state(3, rng, 0.01), random_full_rank_state(3, rng, 0.01)
        assert triangle_residual(D0, rho, rho, psi) == pytest.approx(0.0, abs=1e-12)
        assert triangle_residual(D0, psi, psi, psi) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_pythagorean(self, seed):
        rng = np.random.default_rng(seed)
        psi = random_full_rank_state(3, rng, 0.01)
        R = resolution_from_groups(haar_unitary(3, rng), [[0, 1], [2]])
        rho = weak_lueders(psi, R)
        worst = max(triangle_residual(D0, random_block_state(R, rng), rho, psi) for _ in range(20))
        assert worst <= 1e-9

    def test_non_projection_violates(self, rng):
        psi = random_full_rank_state(3, rng, 0.01)
        R = computational_resolution(3)
        rho = random_block_state(R, rng)
        assert triangle_residual(D0, random_block_state(R, rng), rho, psi) > 1e-6

    def test_infinite(self):
        with pytest.raises(InfiniteDivergence):
            triangle_residual(D0, np.diag([1.0, 0.0]), np.diag([1.0, 0.0]), np.eye(2) / 2)


class TestSequential:
    def _constraints(self, rng):
        U = haar_unitary(3, rng)
        A = CommutantQL(resolution_from_groups(U, [[0, 1], [2]]))
        B = CommutantQL(resolution_from_groups(U, [[0], [1, 2]]))
        return A, B

    def test_single_constraint(self, rng):
        psi = random_full_rank_state(3, rng, 0.01)
        K = CommutantQL(random_resolution(3, rng))
        assert np.allclose(sequential_projection(psi, [K]).matrix, entropic_project(D0, psi, K).minimizer.matrix)

    @pytest.mark.parametrize("seed", range(4))
    def test_iterated_equals_joint_and_commutes(self, seed):
        rng = np.random.default_rng(seed)
        psi = random_full_rank_state(3, rng, 0.01)
        A, B = self._constraints(rng)
        ab = sequential_projection(psi, [A, B])
        ba = sequential_projection(psi, [B, A])
        joint = entropic_project(D0, psi, intersect([A, B])).minimizer
        assert trace_distance(ab, joint) <= 1e-7
        assert trace_distance(ab, ba) <= 1e-7

    def test_commutant_of(self):
        K = commutant_of(np.diag([1.0, 0.0, 0.0]))
        assert len(K.resolution) == 2
        assert len(commutant_of(np.eye(2)).resolution) == 1


class TestOracle:
    @pytest.mark.parametrize("seed", range(2))
    def test_agrees_with_solver_on_qubit(self, seed):
        rng = np.random.default_rng(seed)
        psi, R = random_full_rank_state(2, rng, 0.01), random_resolution(2, rng, 2)
        a = entropic_project(D0, psi, CommutantQL(R))
        b = sampling_oracle(D0, psi, CommutantQL(R), budget=20000, seed=seed)
        assert abs(a.objective - b.objective) <= 1e-3

    def test_trace_norm_pure_face(self):
        rng = np.random.default_rng(5)
        v = random_pure(2, rng)
        psi = np.outer(v, v.conj())
        P = rank_projector(2, 1, rng)
        b = sampling_oracle(DivergenceKind.L1_JMGK, psi, FaceQsL(P), budget=20000, seed=0)
        assert abs(b.objective - l1_jmgk(strong_lueders(psi, P), psi)) <= 1e-3

    def test_single_point_exact(self):
        K = TracePinnedQqJ(computational_resolution(3), (0.2, 0.3, 0.5))
        b = sampling_oracle(D0, random_full_rank_state(3, np.random.default_rng(0), 0.01), K, budget=50)
        assert np.max(np.abs(b.minimizer.matrix - np.diag([0.2, 0.3, 0.5]))) <= 1e-15
        assert b.iterations == 1 and b.converged

    @pytest.mark.parametrize("kind", [D0, DivergenceKind.D1_UMEGAKI, DivergenceKind.L2_HS_STATES,
                                      DivergenceKind.D_HALF, DivergenceKind.BURES])
    def test_never_beats_solver(self, kind):
        for k in range(2):
            rng = np.random.default_rng(seed_for(22, k))
            d = 2 + k
            psi, R = random_full_rank_state(d, rng, 0.01), random_resolution(d, rng)
            a = entropic_project(kind, psi, CommutantQL(R))
            b = sampling_oracle(kind, psi, CommutantQL(R), budget=4000, seed=k)
            assert b.objective >= a.objective - 1e-4

    def test_deterministic(self):
        psi = random_full_rank_state(2, np.random.default_rng(1), 0.01)
        a = sampling_oracle(D0, psi, QL2, budget=500, seed=3)
        b = sampling_oracle(D0, psi, QL2, budget=500, seed=3)
        assert np.array_equal(a.minimizer.matrix, b.minimizer.matrix)


class TestClassicalMRE:
    def test_hand_example(self):
        table = JointTable(np.array([[0.4, 0.2], [0.1, 0.3]]))
        assert np.max(np.abs(mre_posterior(table, Sharp(0)) - [2 / 3, 1 / 3])) <= 1e-12

    @pytest.mark.parametrize("seed", range(3))
    def test_soft_joint_matches_jeffrey(self, seed):
        rng = np.random.default_rng(seed)
        table = JointTable(rng.dirichlet(np.ones(12)).reshape(3, 4))
        f = Soft(random_weights(3, rng))
        q, res = mre_joint(table, f)
        assert res.converged
        assert np.max(np.abs(q - jeffrey_joint(table, f))) <= 1e-9

    def test_total_variation(self):
        assert total_variation([1, 0], [0, 1]) == 1.0


class TestHarness:
    def test_unknown_theorem(self):
        with pytest.raises(UnknownTheorem):
            verify("T12", [2], 1, 0)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            verify("T1", [1], 1, 0)
        with pytest.raises(ValueError):
            verify("T1", [2], 0, 0)

    def test_t3_monotone(self):
        report = verify("T3", [3], 2, 0)
        assert report.passed
        devs = [r.deviation for r in report.records if r.trial == 0]
        assert devs[0] > devs[1] > devs[2]

    def test_t11_is_exploratory(self):
        report = verify("T11", [3], 2, 0)
        rows = {r.case: r for r in report.records}
        assert rows["vs-pinching"].relation == "report"
        assert rows["vs-squared-root-pinching"].passed

    def test_reports_deterministic_and_parallel_safe(self):
        a = verify("T2", [2, 3], 3, 11)
        b = verify("T2", [2, 3], 3, 11)
        c = verify("T2", [2, 3], 3, 11, jobs=2)
        assert a.to_csv() == b.to_csv() == c.to_csv()
        assert a.to_json() == c.to_json()
        assert a.to_csv().splitlines()[0].startswith("theorem,case,dim,trial,seed,deviation")

    def test_json_tokens(self):
        doc = json.loads(verify("T8", [2], 1, 0).to_json())
        assert doc["theorem"] == "T8" and doc["passed"] is True
        assert {r["case"] for r in doc["records"]} == {"full-rank", "support-violation"}
