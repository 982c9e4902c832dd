import math

import numpy as np
import pytest

from qkinopt import qsim
from qkinopt.encoding import ParamGrid, ParamSpec, decode, decode_all
from qkinopt.kinematics import OneLink, PoseTarget, PoseWeights, TwoLink, fk_one, pose_cost
from qkinopt.qml import (
    TrainingSet,
    build_ansatz,
    build_cost_table,
    configuration_costs,
    encode_input,
    gradient,
    input_angles,
    load_surrogate,
    loss,
    make_surrogate,
    predict,
    save_surrogate,
    train,
    workspace_box,
)

TWO_PI = 2 * math.pi


def one_dof_grid(n=3):
    return ParamGrid((
        ParamSpec("l1", 0.1, 2.0, n),
        ParamSpec("theta1", 0.0, TWO_PI, n, angular=True),
    ))


def random_surrogate(rng, n_qubits=3, n_layers=1):
    grid = ParamGrid((
        ParamSpec("l1", 0.1, 2.0, 2),
        ParamSpec("theta1", 0.0, TWO_PI, 2, angular=True),
    ))
    s = make_surrogate(grid, OneLink(), n_layers=n_layers, n_qubits=n_qubits)
    return s.with_params(rng.uniform(-math.pi, math.pi, s.ansatz.parameter_count)), grid


class TestBuildAnsatz:
    def test_parameter_counts(self):
        assert build_ansatz(4, 2).parameter_count == 16
        assert build_ansatz(3, 1).parameter_count == 6

    def test_two_qubit_single_layer_structure(self):
        gates = build_ansatz(2, 1).gates([0.1, 0.2, 0.3, 0.4])
        assert gates == [
            qsim.RX(0, 0.1), qsim.RY(0, 0.2),
            qsim.RX(1, 0.3), qsim.RY(1, 0.4),
            qsim.CNOT(0, 1), qsim.CNOT(1, 0),
        ]

    def test_validation(self):
        with pytest.raises(ValueError):
            build_ansatz(1, 1)
        with pytest.raises(ValueError):
            build_ansatz(2, 0)
        with pytest.raises(ValueError):
            build_ansatz(2, 1).gates([0.0])


class TestEncodeInput:
    def test_midpoint_gives_identity_rotation(self):
        s = make_surrogate(one_dof_grid(), OneLink())
        circuit = encode_input(s, [1.05, math.pi])
        assert all(isinstance(g, qsim.RY) for g in circuit.gates)
        assert [g.angle for g in circuit.gates] == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_minimum_gives_minus_pi(self):
        s = make_surrogate(one_dof_grid(), OneLink())
        circuit = encode_input(s, [0.1, 0.0])
        assert [g.angle for g in circuit.gates] == pytest.approx([-math.pi, -math.pi])

    def test_injective_across_bins(self):
        grid = ParamGrid((ParamSpec("a", 0.0, 1.0, 1), ParamSpec("b", 2.0, 3.0, 1)))
        s = make_surrogate(grid, OneLink())  # box irrelevant for angles
        seen = set()
        for k in range(grid.size):
            angles = tuple(input_angles(s, decode(grid, k)))
            assert angles not in seen
            seen.add(angles)

    def test_dimension_mismatch(self):
        s = make_surrogate(one_dof_grid(), OneLink())
        with pytest.raises(ValueError):
            encode_input(s, [1.0])


class TestPredict:
    def test_zero_params_midpoint_hits_box_top(self):
        # all rotations are identity at theta = 0 and midpoint inputs, so the
        # state stays |0...0>, <Z> = +1, and each output sits at its upper endpoint
        s = make_surrogate(one_dof_grid(), OneLink(), n_layers=2)
        out = predict(s, [1.05, math.pi])
        np.testing.assert_allclose(out, [2.0, 2.0], atol=1e-12)

    def test_outputs_within_workspace_box(self):
        rng = np.random.default_rng(0)
        s, grid = random_surrogate(rng, n_qubits=4, n_layers=2)
        box = workspace_box(OneLink(), grid)
        for _ in range(25):
            z = [rng.uniform(0.1, 2.0), rng.uniform(0.0, TWO_PI)]
            out = predict(s, z)
            for v, (lo, hi) in zip(out, box):
                assert lo - 1e-12 <= v <= hi + 1e-12

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        s, _ = random_surrogate(rng)
        z = [0.7, 1.3]
        np.testing.assert_array_equal(predict(s, z), predict(s, z))


class TestLoss:
    def test_zero_when_labels_match_predictions(self):
        rng = np.random.default_rng(2)
        s, grid = random_surrogate(rng)
        Z = decode_all(grid)
        labels = np.stack([predict(s, z) for z in Z])
        assert loss(s, TrainingSet(Z, labels)) == 0.0

    def test_single_sample_error_vector(self):
        rng = np.random.default_rng(3)
        s, _ = random_surrogate(rng)
        z = np.array([[0.5, 1.0]])
        label = predict(s, z[0]) - np.array([0.3, 0.4])
        assert loss(s, TrainingSet(z, label[None, :])) == pytest.approx(0.25)

    def test_duplicating_samples_leaves_loss_unchanged(self):
        rng = np.random.default_rng(4)
        s, grid = random_surrogate(rng)
        Z = decode_all(grid)[:4]
        labels = np.tile([0.3, -0.2], (4, 1))
        single = loss(s, TrainingSet(Z, labels))
        doubled = loss(s, TrainingSet(np.vstack([Z, Z]), np.vstack([labels, labels])))
        assert doubled == pytest.approx(single, rel=1e-15)

    def test_empty_set_rejected(self):
        with pytest.raises(ValueError):
            TrainingSet(np.empty((0, 2)), np.empty((0, 2)))


class TestGradient:
    def test_shift_rule_single_qubit(self):
        # f(t) = <Z> after RX(t) is cos t; at t = pi/2 the derivative is -1
        def f(t):
            state = qsim.apply_gate(qsim.new_zero_state(1), qsim.RX(0, t))
            return qsim.expectation_diagonal(state, [1.0, -1.0])

        t = math.pi / 2
        shift = (f(t + math.pi / 2) - f(t - math.pi / 2)) / 2
        fd = (f(t + 1e-6) - f(t - 1e-6)) / 2e-6
        assert shift == pytest.approx(-1.0, abs=1e-12)
        assert shift == pytest.approx(fd, abs=1e-6)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        for trial in range(4):
            s, grid = random_surrogate(rng, n_qubits=3, n_layers=1 + trial % 2)
            Z = decode_all(grid)[:: 3]
            labels = rng.uniform(-1.5, 1.5, size=(Z.shape[0], 2))
            data = TrainingSet(Z, labels)
            g = gradient(s, data)
            h = 1e-6
            for j in range(s.ansatz.parameter_count):
                plus = s.params.copy()
                plus[j] += h
                minus = s.params.copy()
                minus[j] -= h
                fd = (loss(s, data, plus) - loss(s, data, minus)) / (2 * h)
                assert abs(g[j] - fd) <= 1e-6 * max(1.0, abs(fd))

    def test_zero_residual_gives_zero_gradient(self):
        rng = np.random.default_rng(6)
        s, grid = random_surrogate(rng)
        Z = decode_all(grid)
        labels = np.stack([predict(s, z) for z in Z])
        g = gradient(s, TrainingSet(Z, labels))
        assert np.all(np.abs(g) <= 1e-9)


class TestTrain:
    def make_data(self, grid):
        return TrainingSet.from_grid(grid, OneLink())

    def test_loss_decreases_on_small_grid(self):
        grid = one_dof_grid(3)
        s = make_surrogate(grid, OneLink(), n_layers=2, n_qubits=4)
        trained, trace = train(s, self.make_data(grid), epochs=40,
                               learning_rate=0.3, seed=1)
        assert trace[-1] < trace[0]
        assert trained.params.shape == (16,)

    def test_zero_learning_rate_constant_trace(self):
        grid = one_dof_grid(2)
        s = make_surrogate(grid, OneLink(), n_qubits=4)
        _, trace = train(s, self.make_data(grid), epochs=5, learning_rate=0.0, seed=2)
        assert np.all(trace == trace[0])

    def test_identical_seeds_identical_traces(self):
        grid = one_dof_grid(2)
        s = make_surrogate(grid, OneLink(), n_qubits=4)
        data = self.make_data(grid)
        _, t1 = train(s, data, epochs=8, learning_rate=0.2, seed=9)
        _, t2 = train(s, data, epochs=8, learning_rate=0.2, seed=9)
        np.testing.assert_array_equal(t1, t2)

    def test_validation(self):
        grid = one_dof_grid(2)
        s = make_surrogate(grid, OneLink(), n_qubits=4)
        with pytest.raises(ValueError):
            train(s, self.make_data(grid), epochs=0)
        with pytest.raises(ValueError):
            train(s, self.make_data(grid), learning_rate=-0.1)

    def test_from_grid_sampling_reproducible(self):
        grid = one_dof_grid(3)
        d1 = TrainingSet.from_grid(grid, OneLink(), sample=10, seed=3)
        d2 = TrainingSet.from_grid(grid, OneLink(), sample=10, seed=3)
        np.testing.assert_array_equal(d1.inputs, d2.inputs)
        assert d1.inputs.shape == (10, 2)


class TestCostTable:
    def test_target_at_config_zero_is_minimum(self):
        grid = one_dof_grid(3)
        target = fk_one(*decode(grid, 0))
        costs = build_cost_table(grid, OneLink(), PoseTarget(tuple(target)),
                                 PoseWeights(1.0, 0.0))
        assert costs[0] == 0.0
        assert costs.min() == 0.0

    def test_all_entries_non_negative(self):
        grid = one_dof_grid(3)
        costs = build_cost_table(grid, OneLink(), PoseTarget((0.4, 0.3)),
                                 PoseWeights(1.0, 0.0))
        assert np.all(costs >= 0.0)

    def test_matches_direct_cost_exhaustively(self):
        # definitional round trip at every index, against the scalar cost path
        grid = ParamGrid((
            ParamSpec("theta1", 0.0, TWO_PI, 3, angular=True),
            ParamSpec("theta2", 0.0, TWO_PI, 3, angular=True),
            ParamSpec("l1", 0.1, 2.0, 2),
            ParamSpec("l2", 0.1, 2.0, 2),
        ))
        task = PoseTarget((1.0, 1.0))
        weights = PoseWeights(1.0, 0.0)
        costs = build_cost_table(grid, TwoLink(), task, weights)
        from qkinopt.kinematics import fk_two

        for k in range(grid.size):
            t1, t2, l1, l2 = decode(grid, k)
            direct = pose_cost(fk_two(l1, l2, t1, t2), task.position, weights)
            assert costs[k] == pytest.approx(direct, rel=1e-12, abs=1e-15)

    def test_surrogate_table_runs(self):
        rng = np.random.default_rng(7)
        grid = one_dof_grid(2)
        s = make_surrogate(grid, OneLink(), n_qubits=4)
        s = s.with_params(rng.uniform(-1, 1, s.ansatz.parameter_count))
        costs = build_cost_table(grid, OneLink(), PoseTarget((0.5, 0.5)),
                                 PoseWeights(1.0, 0.0), "surrogate", s)
        assert costs.shape == (grid.size,)
        assert np.all(costs >= 0.0)

    def test_surrogate_requires_instance(self):
        grid = one_dof_grid(2)
        with pytest.raises(ValueError):
            build_cost_table(grid, OneLink(), PoseTarget((0.5, 0.5)),
                             PoseWeights(1.0, 0.0), "surrogate")

    def test_orientation_weighted_table(self):
        grid = one_dof_grid(3)
        costs = build_cost_table(grid, OneLink(), PoseTarget((0.5, 0.5), phi=0.7),
                                 PoseWeights(1.0, 0.5))
        z = decode(grid, 5)
        expected = pose_cost(fk_one(*z), (0.5, 0.5), PoseWeights(1.0, 0.5),
                             phi=z[1], phi_target=0.7)
        assert costs[5] == pytest.approx(expected, rel=1e-12)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(8)
        s, grid = random_surrogate(rng, n_qubits=4, n_layers=2)
        path = tmp_path / "surrogate.params"
        save_surrogate(s, path)
        loaded = load_surrogate(path)
        assert loaded.ansatz == s.ansatz
        assert loaded.input_map == s.input_map
        assert loaded.readout == s.readout
        np.testing.assert_array_equal(loaded.params, s.params)
        z = [0.9, 2.2]
        np.testing.assert_array_equal(predict(loaded, z), predict(s, z))

    def test_rejects_other_files(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("not a parameter file\n")
        with pytest.raises(ValueError):
            load_surrogate(path)


class TestWorkspaceBox:
    def test_one_link_box_from_grid(self):
        assert workspace_box(OneLink(), one_dof_grid()) == ((-2.0, 2.0), (-2.0, 2.0))

    def test_two_link_box(self):
        grid = ParamGrid((
            ParamSpec("theta1", 0.0, TWO_PI, 2, angular=True),
            ParamSpec("theta2", 0.0, TWO_PI, 2, angular=True),
            ParamSpec("l1", 0.1, 2.0, 2),
            ParamSpec("l2", 0.1, 1.5, 2),
        ))
        assert workspace_box(TwoLink(), grid) == ((-3.5, 3.5), (-3.5, 3.5))

    def test_configuration_costs_scalar_row(self):
        grid = one_dof_grid(2)
        z = np.array([1.0, 0.5])
        got = configuration_costs(OneLink(), grid.names(), z[None, :],
                                  PoseTarget((0.2, 0.1)), PoseWeights(1.0, 0.0))
        expected = pose_cost(fk_one(1.0, 0.5), (0.2, 0.1), PoseWeights(1.0, 0.0))
        assert got[0] == pytest.approx(expected, rel=1e-14)
