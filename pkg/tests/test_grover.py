import math

import numpy as np
import pytest

from qkinopt import qsim
from qkinopt.encoding import ParamGrid, ParamSpec, decode, encode
from qkinopt.grover import (
    GroverPlan,
    NoSolutionError,
    OracleSpec,
    SearchResult,
    adaptive_search,
    amplified_state,
    apply_diffusion,
    apply_oracle,
    count_solutions,
    grover_search,
    iteration_count,
    minimal_epsilon,
    search_with_state,
    shrink_schedule,
    success_probability_analytic,
    verify,
)
from qkinopt.kinematics import OneLink, PoseTarget, PoseWeights, fk_one

TWO_PI = 2 * math.pi


def flat_grid(n_total):
    """Single linear parameter spanning n_total qubits; index k decodes monotonically."""
    return ParamGrid((ParamSpec("x", 0.0, 1.0, n_total),))


def costs_with_marks(M, marked):
    costs = np.ones(M)
    costs[list(marked)] = 0.0
    return costs


class TestCountSolutions:
    def test_direct_count(self):
        assert count_solutions(np.array([0.5, 0.01, 0.7, 0.02]), 0.05) == 2

    def test_below_minimum(self):
        assert count_solutions(np.array([0.5, 0.01, 0.7, 0.02]), 0.001) == 0

    def test_at_or_above_maximum(self):
        assert count_solutions(np.array([0.5, 0.01, 0.7, 0.02]), 0.7) == 4

    def test_boundary_inclusive(self):
        assert count_solutions(np.array([0.3, 0.1]), 0.1) == 1


class TestIterationCount:
    def test_eight_one(self):
        assert iteration_count(8, 1) == 2

    def test_four_one(self):
        assert iteration_count(4, 1) == 1

    def test_all_marked_degenerate(self):
        assert iteration_count(8, 8) == 0

    def test_no_solutions(self):
        with pytest.raises(NoSolutionError):
            iteration_count(8, 0)

    def test_at_least_one_below_half(self):
        for M in (16, 64, 1024):
            for m in range(1, M // 2):
                assert iteration_count(M, m) >= 1

    def test_query_count_law(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            M = 1 << int(rng.integers(2, 12))
            m = int(rng.integers(1, M + 1))
            assert iteration_count(M, m) <= math.pi / 4 * math.sqrt(M / m) + 1


class TestSuccessProbability:
    def test_eight_one_two(self):
        assert success_probability_analytic(8, 1, 2) == pytest.approx(0.9453, abs=1e-4)

    def test_four_one_one_is_certain(self):
        assert success_probability_analytic(4, 1, 1) >= 1.0 - 1e-9

    def test_zero_iterations_is_uniform(self):
        assert success_probability_analytic(64, 3, 0) == pytest.approx(3 / 64)

    def test_matches_simulated_amplification(self):
        # independent check: simulate the amplified state and compare masses
        rng = np.random.default_rng(1)
        for _ in range(10):
            n = int(rng.integers(2, 7))
            M = 1 << n
            m = int(rng.integers(1, M // 2 + 1))
            K = int(rng.integers(0, 4))
            marked = np.zeros(M, dtype=bool)
            marked[rng.choice(M, m, replace=False)] = True
            state = amplified_state(n, marked, K)
            simulated = float(state.probabilities()[marked].sum())
            assert simulated == pytest.approx(
                success_probability_analytic(M, m, K), abs=1e-12
            )

    def test_empirical_probability_within_three_sigma(self):
        # shot-level check at the scheduled iteration count over sampled (M, m)
        rng = np.random.default_rng(13)
        shots = 10000
        for _ in range(8):
            n = int(rng.integers(3, 13))
            M = 1 << n
            m = int(rng.integers(1, max(2, M // 8)))
            costs = np.ones(M)
            costs[rng.choice(M, m, replace=False)] = 0.0
            grid = flat_grid(n)
            result = grover_search(grid, OracleSpec(costs, 0.5),
                                   GroverPlan(shots=shots, seed=77))
            p = success_probability_analytic(M, m, result.queries)
            sigma = math.sqrt(p * (1 - p) / shots)
            assert abs(result.marked_probability - p) <= 3 * sigma + 1e-12


class TestOracle:
    def test_sign_flip_on_marked(self):
        oracle = OracleSpec(costs_with_marks(4, [2]), 0.5)
        out = apply_oracle(qsim.uniform_superposition(2), oracle)
        np.testing.assert_allclose(out.amps, [0.5, 0.5, -0.5, 0.5], atol=1e-15)

    def test_nothing_marked_is_identity(self):
        oracle = OracleSpec(np.ones(4), 0.5)
        state = qsim.uniform_superposition(2)
        np.testing.assert_array_equal(apply_oracle(state, oracle).amps, state.amps)

    def test_involution(self):
        oracle = OracleSpec(costs_with_marks(8, [1, 5]), 0.5)
        state = qsim.uniform_superposition(3)
        out = apply_oracle(apply_oracle(state, oracle), oracle)
        np.testing.assert_allclose(out.amps, state.amps, atol=1e-12)
        assert abs(out.norm() - 1.0) <= 1e-12

    def test_shape_error(self):
        with pytest.raises(ValueError):
            apply_oracle(qsim.uniform_superposition(2), OracleSpec(np.ones(8), 0.5))

    def test_zero_epsilon_marks_exact_solutions(self):
        oracle = OracleSpec(costs_with_marks(4, [3]), 0.0)
        assert list(oracle.marked_mask) == [False, False, False, True]

    def test_negative_epsilon_rejected(self):
        with pytest.raises(ValueError):
            OracleSpec(np.ones(4), -0.1)


class TestDiffusion:
    def test_uniform_is_fixed_point(self):
        state = qsim.uniform_superposition(3)
        np.testing.assert_allclose(apply_diffusion(state).amps, state.amps, atol=1e-15)

    def test_single_round_on_four_states(self):
        # sin^2(3 arcsin(1/2)) = 1: one oracle+diffusion round is exact for M=4
        marked = np.array([False, False, True, False])
        state = amplified_state(2, marked, 1)
        assert qsim.marked_probability(state, {2}) == pytest.approx(1.0, abs=1e-12)

    def test_involution(self):
        rng = np.random.default_rng(2)
        amps = rng.normal(size=8) + 1j * rng.normal(size=8)
        amps /= np.linalg.norm(amps)
        state = qsim.StateVector(3, amps)
        out = apply_diffusion(apply_diffusion(state))
        np.testing.assert_allclose(out.amps, state.amps, atol=1e-12)
        assert abs(out.norm() - 1.0) <= 1e-12


class TestGroverSearch:
    def test_single_marked_in_sixteen(self):
        grid = flat_grid(4)
        oracle = OracleSpec(costs_with_marks(16, [11]), 0.5)
        result = grover_search(grid, oracle, GroverPlan(shots=10000, seed=5))
        assert result.queries == 3
        assert result.index == 11
        # analytic success is 0.9614; binomial noise at 1e4 shots stays inside 0.02
        assert abs(result.marked_probability - 0.961) <= 0.02

    def test_all_marked_samples_uniform(self):
        grid = flat_grid(3)
        result = grover_search(grid, OracleSpec(np.zeros(8), 0.5),
                               GroverPlan(shots=4096, seed=3))
        assert result.queries == 0
        assert result.marked_probability == 1.0

    def test_fixed_seed_reproducible(self):
        grid = flat_grid(4)
        oracle = OracleSpec(costs_with_marks(16, [7]), 0.5)
        plan = GroverPlan(shots=2000, seed=11)
        r1 = grover_search(grid, oracle, plan)
        r2 = grover_search(grid, oracle, plan)
        assert (r1.index, r1.bitstring, r1.queries, r1.marked_probability) == \
               (r2.index, r2.bitstring, r2.queries, r2.marked_probability)
        np.testing.assert_array_equal(r1.params, r2.params)

    def test_no_solutions_raises(self):
        grid = flat_grid(3)
        with pytest.raises(NoSolutionError):
            grover_search(grid, OracleSpec(np.ones(8), 0.5), GroverPlan())

    def test_majority_marked_short_circuits(self):
        grid = flat_grid(3)
        costs = np.zeros(8)
        costs[:3] = 1.0  # 5 of 8 marked
        result = grover_search(grid, OracleSpec(costs, 0.5), GroverPlan(seed=1))
        assert result.queries == 0

    def test_iteration_override(self):
        grid = flat_grid(4)
        oracle = OracleSpec(costs_with_marks(16, [2]), 0.5)
        result, state = search_with_state(grid, oracle, GroverPlan(shots=100, seed=0,
                                                                   iterations=1))
        assert result.queries == 1
        expected = success_probability_analytic(16, 1, 1)
        assert qsim.marked_probability(state, {2}) == pytest.approx(expected, abs=1e-12)

    def test_decoded_params_match_index(self):
        grid = ParamGrid((
            ParamSpec("l1", 0.1, 2.0, 2),
            ParamSpec("theta1", 0.0, TWO_PI, 2, angular=True),
        ))
        oracle = OracleSpec(costs_with_marks(16, [9]), 0.5)
        result = grover_search(grid, oracle, GroverPlan(shots=500, seed=2))
        np.testing.assert_array_equal(result.params, decode(grid, 9))


class TestAdaptiveSearch:
    def test_shrinks_to_final_level(self):
        grid = flat_grid(2)
        costs = np.array([0.5, 0.2, 0.05, 0.9])
        result = adaptive_search(grid, costs, epsilon0=0.6, shrink=0.5,
                                 plan=GroverPlan(shots=5000, seed=4))
        assert result.epsilon == 0.6 * 0.5 ** 3  # 0.075
        assert result.solutions == 1
        assert result.index == 2

    def test_tight_epsilon_no_shrinking(self):
        grid = flat_grid(2)
        costs = np.array([0.5, 0.2, 0.05, 0.9])
        result = adaptive_search(grid, costs, epsilon0=0.08, shrink=0.5,
                                 plan=GroverPlan(shots=5000, seed=4))
        assert result.epsilon == 0.08
        assert result.solutions == 1

    def test_final_epsilon_never_exceeds_initial(self):
        grid = flat_grid(3)
        rng = np.random.default_rng(6)
        for _ in range(10):
            costs = rng.uniform(0.0, 1.0, 8)
            eps0 = costs.min() + rng.uniform(0.01, 2.0)
            result = adaptive_search(grid, costs, eps0, 0.5, GroverPlan(shots=200, seed=0))
            assert result.epsilon <= eps0

    def test_epsilon0_below_floor_rejected(self):
        with pytest.raises(ValueError):
            shrink_schedule(np.array([0.5, 0.4]), 0.1, 0.5)

    def test_equal_costs_terminate(self):
        # all costs identical: the next shrink always empties the marked set
        levels = shrink_schedule(np.full(8, 0.3), 0.3, 0.5)
        assert levels == [0.3]


class TestMinimalEpsilon:
    def test_isolates_exact_minimum(self):
        costs = np.array([3.0, 1.0, 2.0, 1.0 + 1e-13])
        eps = minimal_epsilon(costs, 3.0)
        assert count_solutions(costs, eps) == 1
        assert costs[1] <= eps < 1.0 + 1e-13

    def test_keeps_bit_exact_ties(self):
        costs = np.array([0.7, 0.2, 0.9, 0.2])
        eps = minimal_epsilon(costs, 0.9)
        assert count_solutions(costs, eps) == 2

    def test_empty_start_rejected(self):
        with pytest.raises(NoSolutionError):
            minimal_epsilon(np.array([1.0, 2.0]), 0.5)


class TestVerify:
    def grid(self):
        return ParamGrid((
            ParamSpec("l1", 0.1, 2.0, 4),
            ParamSpec("theta1", 0.0, TWO_PI, 4, angular=True),
        ))

    def test_exact_hit_accepted(self):
        grid = self.grid()
        k = encode(grid, [1.0, 1.0])
        target = fk_one(*decode(grid, k))
        task = PoseTarget(tuple(target), tolerance=1e-9)
        e, accepted = verify(k, grid, OneLink(), task, PoseWeights(1.0, 0.0))
        assert e == pytest.approx(0.0, abs=1e-12)
        assert accepted

    def test_far_configuration_rejected(self):
        grid = self.grid()
        task = PoseTarget((2.0, 0.0), tolerance=0.05)
        k = encode(grid, [0.1, math.pi])  # points the wrong way
        e, accepted = verify(k, grid, OneLink(), task, PoseWeights(1.0, 0.0))
        assert e > 0.05
        assert not accepted

    def test_missing_tolerance_raises(self):
        grid = self.grid()
        with pytest.raises(ValueError):
            verify(0, grid, OneLink(), PoseTarget((0.5, 0.5)), PoseWeights(1.0, 0.0))

    def test_accepted_implies_error_within_tolerance(self):
        grid = self.grid()
        rng = np.random.default_rng(7)
        task = PoseTarget((0.8, 0.6), tolerance=0.2)
        for _ in range(30):
            k = int(rng.integers(0, grid.size))
            e, accepted = verify(k, grid, OneLink(), task, PoseWeights(1.0, 0.0))
            if accepted:
                assert e <= 0.2


class TestResultRecord:
    def test_verified_copy(self):
        r = SearchResult(3, "011", np.array([0.5]), 0.9, 2, 0.1, 1)
        v = r.verified(0.05, True)
        assert v.e_actual == 0.05 and v.accepted is True
        assert r.e_actual is None  # original untouched

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            GroverPlan(shots=0)
        with pytest.raises(ValueError):
            GroverPlan(iterations=-1)
