"""Parameterized-circuit surrogate of forward kinematics.

The surrogate uploads each physical parameter once as an RY rotation on its
assigned qubit (angle affine-mapped to [-pi, pi]), runs a layered
RX/RY + CNOT-ring ansatz, and reads one <Z> expectation per output
coordinate, affine-mapped onto the workspace interval.

Gradients use the parameter-shift rule (+-pi/2 shifts of each rotation
angle, combined through the chain rule of the squared loss); training is
plain full-batch gradient descent seeded for reproducibility.

This module also builds the diagonal cost table that the search oracle
consumes: one task cost per basis state, evaluated with either the trained
surrogate or the analytical kinematics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from . import qsim
from .encoding import ParamGrid, decode_all
from .kinematics import (
    DualArm,
    GraspTask,
    OneLink,
    PoseTarget,
    PoseWeights,
    TwoLink,
    fk_dual,
    fk_one,
    fk_two,
)

TWO_PI = 2.0 * math.pi


class TrainingError(RuntimeError):
    """Loss became non-finite during gradient descent."""


@dataclass(frozen=True)
class Ansatz:
    """Layered template: RX and RY on every qubit, then a CNOT ring i -> i+1."""

    n_qubits: int
    n_layers: int

    @property
    def parameter_count(self) -> int:
        return 2 * self.n_qubits * self.n_layers

    def gates(self, params: Sequence[float]) -> list:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.parameter_count,):
            raise ValueError(
                f"ansatz expects {self.parameter_count} parameters, got {params.shape}"
            )
        gates = []
        p = 0
        for _ in range(self.n_layers):
            for q in range(self.n_qubits):
                gates.append(qsim.RX(q, float(params[p])))
                gates.append(qsim.RY(q, float(params[p + 1])))
                p += 2
            for q in range(self.n_qubits):
                gates.append(qsim.CNOT(q, (q + 1) % self.n_qubits))
        return gates


def build_ansatz(n_qubits: int, n_layers: int) -> Ansatz:
    if n_qubits < 2:
        raise ValueError("ansatz needs at least 2 qubits")
    if n_layers < 1:
        raise ValueError("ansatz needs at least 1 layer")
    return Ansatz(n_qubits, n_layers)


@dataclass(frozen=True)
class Surrogate:
    """Ansatz + parameters + affine input/readout maps.

    input_map:  one (qubit, lo, hi) per physical parameter.
    readout:    one (qubit, lo, hi) per output coordinate; <Z> in [-1, 1]
                maps affinely onto [lo, hi].
    """

    ansatz: Ansatz
    params: np.ndarray
    input_map: Tuple[Tuple[int, float, float], ...]
    readout: Tuple[Tuple[int, float, float], ...]

    @property
    def n_inputs(self) -> int:
        return len(self.input_map)

    @property
    def n_outputs(self) -> int:
        return len(self.readout)

    def with_params(self, params: np.ndarray) -> "Surrogate":
        return replace(self, params=np.asarray(params, dtype=float))


def workspace_box(model, grid: ParamGrid) -> Tuple[Tuple[float, float], ...]:
    """Output intervals that bound every reachable tip position."""
    names = grid.names()

    def length_hi(name: str, default: float) -> float:
        return grid.specs[names.index(name)].hi if name in names else default

    if isinstance(model, OneLink):
        r = length_hi("l1", model.l1)
        return ((-r, r), (-r, r))
    if isinstance(model, TwoLink):
        r = length_hi("l1", model.l1) + length_hi("l2", model.l2)
        return ((-r, r), (-r, r))
    if isinstance(model, DualArm):
        out = []
        for base, links in ((model.base1, model.links1), (model.base2, model.links2)):
            r = links[0] + links[1]
            out.append((base[0] - r, base[0] + r))
            out.append((base[1] - r, base[1] + r))
        return tuple(out)
    raise TypeError(f"unknown robot model {model!r}")


def make_surrogate(grid: ParamGrid, model, n_layers: int = 2,
                   n_qubits: Optional[int] = None,
                   params: Optional[np.ndarray] = None) -> Surrogate:
    """Surrogate wired to a grid: input i on qubit i, readouts on the top qubits."""
    box = workspace_box(model, grid)
    d, out = grid.dimension, len(box)
    if n_qubits is None:
        n_qubits = max(d, out, 2)
    if n_qubits < max(d, out, 2):
        raise ValueError(f"need at least {max(d, out, 2)} qubits")
    ansatz = build_ansatz(n_qubits, n_layers)
    if params is None:
        params = np.zeros(ansatz.parameter_count)
    inputs = tuple((i, s.lo, s.hi) for i, s in enumerate(grid.specs))
    readout = tuple(
        (n_qubits - out + j, lo, hi) for j, (lo, hi) in enumerate(box)
    )
    return Surrogate(ansatz, np.asarray(params, dtype=float), inputs, readout)


# --- prediction ---------------------------------------------------------------

def input_angles(surrogate: Surrogate, z: np.ndarray) -> np.ndarray:
    """Affine map of physical values onto rotation angles in [-pi, pi]."""
    z = np.asarray(z, dtype=float)
    angles = np.empty_like(z)
    for i, (_, lo, hi) in enumerate(surrogate.input_map):
        angles[..., i] = -math.pi + (z[..., i] - lo) / (hi - lo) * TWO_PI
    return angles


def encode_input(surrogate: Surrogate, z: Sequence[float]) -> qsim.Circuit:
    """One RY per input parameter on its assigned qubit."""
    z = np.asarray(z, dtype=float)
    if z.shape != (surrogate.n_inputs,):
        raise ValueError(f"expected {surrogate.n_inputs} inputs, got {z.shape}")
    angles = input_angles(surrogate, z)
    circuit = qsim.Circuit(surrogate.ansatz.n_qubits)
    for (qubit, _, _), a in zip(surrogate.input_map, angles):
        circuit.add(qsim.RY(qubit, float(a)))
    return circuit


def _z_signs(n_qubits: int, qubit: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    return 1.0 - 2.0 * ((idx >> qubit) & 1)


def _predict_batch(surrogate: Surrogate, Z: np.ndarray,
                   params: Optional[np.ndarray] = None) -> np.ndarray:
    """Vectorised prediction over a (B, d) batch; returns (B, n_outputs)."""
    n = surrogate.ansatz.n_qubits
    theta = surrogate.params if params is None else params
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != surrogate.n_inputs:
        raise ValueError(f"expected {surrogate.n_inputs} inputs per row, got {Z.shape[1]}")
    B = Z.shape[0]
    angles = input_angles(surrogate, Z)

    amps = np.zeros((B, 1 << n), dtype=np.complex128)
    amps[:, 0] = 1.0
    # per-sample input rotations: RY with a batch-dependent angle
    for i, (qubit, _, _) in enumerate(surrogate.input_map):
        half = angles[:, i] / 2.0
        c = np.cos(half)[:, None, None]
        s = np.sin(half)[:, None, None]
        view = amps.reshape(B, 1 << (n - qubit - 1), 2, 1 << qubit)
        a0 = view[:, :, 0, :].copy()
        a1 = view[:, :, 1, :]
        view[:, :, 0, :] = c * a0 - s * a1
        view[:, :, 1, :] = s * a0 + c * a1
        amps = view.reshape(B, 1 << n)
    for gate in surrogate.ansatz.gates(theta):
        qsim._apply_gate_inplace(amps, gate, n)

    probs = np.abs(amps) ** 2
    out = np.empty((B, surrogate.n_outputs))
    for j, (qubit, lo, hi) in enumerate(surrogate.readout):
        # fixed-order pairwise row sum: batch rows reduce identically whether
        # predicted one at a time or all at once
        z_expect = (probs * _z_signs(n, qubit)).sum(axis=1)
        out[:, j] = lo + (z_expect + 1.0) / 2.0 * (hi - lo)
    return out


def predict(surrogate: Surrogate, z: Sequence[float]) -> np.ndarray:
    """Deterministic prediction for one configuration."""
    z = np.asarray(z, dtype=float)
    if z.shape != (surrogate.n_inputs,):
        raise ValueError(f"expected {surrogate.n_inputs} inputs, got {z.shape}")
    return _predict_batch(surrogate, z[None, :])[0]


# --- training ------------------------------------------------------------------

@dataclass(frozen=True)
class TrainingSet:
    """Configurations with labels from the analytical forward kinematics."""

    inputs: np.ndarray   # (B, d)
    labels: np.ndarray   # (B, n_outputs)

    def __post_init__(self):
        if self.inputs.shape[0] != self.labels.shape[0] or self.inputs.shape[0] == 0:
            raise ValueError("training set must be non-empty with matching shapes")

    @classmethod
    def from_grid(cls, grid: ParamGrid, model,
                  sample: Optional[int] = None, seed: int = 0) -> "TrainingSet":
        """Full-grid labels, or a seeded subsample of `sample` grid points."""
        Z = decode_all(grid)
        if sample is not None and sample < Z.shape[0]:
            pick = np.random.default_rng(seed).choice(Z.shape[0], sample, replace=False)
            Z = Z[np.sort(pick)]
        labels = configuration_positions(model, grid.names(), Z)
        return cls(Z, labels)


def loss(surrogate: Surrogate, data: TrainingSet,
         params: Optional[np.ndarray] = None) -> float:
    """Mean over samples of the squared prediction error (summed over coords)."""
    pred = _predict_batch(surrogate, data.inputs, params)
    return float(np.mean(np.sum((pred - data.labels) ** 2, axis=1)))


def gradient(surrogate: Surrogate, data: TrainingSet,
             params: Optional[np.ndarray] = None) -> np.ndarray:
    """d loss / d theta via the parameter-shift rule.

    For each rotation angle theta_j the prediction derivative is
    (pred(theta_j + pi/2) - pred(theta_j - pi/2)) / 2; the squared-loss chain
    rule contributes 2 * (pred - label).
    """
    theta = np.asarray(surrogate.params if params is None else params, dtype=float)
    resid = _predict_batch(surrogate, data.inputs, theta) - data.labels
    grad = np.empty(theta.size)
    for j in range(theta.size):
        plus = theta.copy()
        plus[j] += math.pi / 2
        minus = theta.copy()
        minus[j] -= math.pi / 2
        dpred = (_predict_batch(surrogate, data.inputs, plus)
                 - _predict_batch(surrogate, data.inputs, minus))
        grad[j] = float(np.mean(np.sum(resid * dpred, axis=1)))
    return grad


def train(surrogate: Surrogate, data: TrainingSet, epochs: int = 200,
          learning_rate: float = 0.1, seed: int = 0) -> Tuple[Surrogate, np.ndarray]:
    """Full-batch gradient descent from a seed-derived uniform [-pi, pi) init.

    Returns the trained surrogate and the loss trace (length epochs + 1,
    starting at the initial loss). Identical seeds reproduce identical traces.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if learning_rate < 0:
        raise ValueError("learning rate must be non-negative")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-math.pi, math.pi, size=surrogate.ansatz.parameter_count)
    trace = np.empty(epochs + 1)
    trace[0] = loss(surrogate, data, theta)
    for epoch in range(epochs):
        theta = theta - learning_rate * gradient(surrogate, data, theta)
        value = loss(surrogate, data, theta)
        if not math.isfinite(value):
            raise TrainingError(f"loss diverged at epoch {epoch + 1}")
        trace[epoch + 1] = value
    return surrogate.with_params(theta), trace


# --- serialization ----------------------------------------------------------------

def save_surrogate(surrogate: Surrogate, path) -> None:
    """Plain-text dump: ansatz metadata, affine maps, then one parameter per line."""
    lines = ["qkinopt-surrogate 1"]
    lines.append(f"qubits {surrogate.ansatz.n_qubits} layers {surrogate.ansatz.n_layers}")
    for qubit, lo, hi in surrogate.input_map:
        lines.append(f"input {qubit} {lo!r} {hi!r}")
    for qubit, lo, hi in surrogate.readout:
        lines.append(f"readout {qubit} {lo!r} {hi!r}")
    lines.append("params")
    lines.extend(repr(float(p)) for p in surrogate.params)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_surrogate(path) -> Surrogate:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0].split() != ["qkinopt-surrogate", "1"]:
        raise ValueError(f"{path}: not a surrogate parameter file")
    _, nq, _, nl = lines[1].split()
    inputs, readout, params = [], [], []
    section = "maps"
    for ln in lines[2:]:
        if ln == "params":
            section = "params"
            continue
        if section == "maps":
            kind, qubit, lo, hi = ln.split()
            dest = inputs if kind == "input" else readout
            dest.append((int(qubit), float(lo), float(hi)))
        else:
            params.append(float(ln))
    return Surrogate(
        build_ansatz(int(nq), int(nl)),
        np.asarray(params, dtype=float),
        tuple(inputs),
        tuple(readout),
    )


# --- cost tables -------------------------------------------------------------------

def configuration_positions(model, names: Tuple[str, ...], Z: np.ndarray) -> np.ndarray:
    """Analytic tip positions for a (B, d) batch of parameter vectors.

    Columns bind by spec name (l1, theta1, ... / theta11.. for dual arms);
    lengths missing from the grid fall back to the model's fixed values.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))

    def col(name: str, default: Optional[float] = None) -> np.ndarray:
        if name in names:
            return Z[:, names.index(name)]
        if default is not None:
            return np.full(Z.shape[0], default)
        raise ValueError(f"grid has no parameter named {name!r}")

    if isinstance(model, OneLink):
        return fk_one(col("l1", model.l1), col("theta1"))
    if isinstance(model, TwoLink):
        return fk_two(col("l1", model.l1), col("l2", model.l2),
                      col("theta1"), col("theta2"))
    if isinstance(model, DualArm):
        q1 = np.stack([col("theta11"), col("theta12")], axis=-1)
        q2 = np.stack([col("theta21"), col("theta22")], axis=-1)
        p1, p2 = fk_dual(model, q1, q2)
        return np.concatenate([p1, p2], axis=-1)
    raise TypeError(f"unknown robot model {model!r}")


def configuration_orientations(model, names: Tuple[str, ...],
                               Z: np.ndarray) -> np.ndarray:
    """Planar tip orientation (sum of joint angles) per configuration."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if isinstance(model, OneLink):
        return Z[:, names.index("theta1")]
    if isinstance(model, TwoLink):
        return Z[:, names.index("theta1")] + Z[:, names.index("theta2")]
    raise TypeError(f"orientation undefined for model {model!r}")


def _pose_costs(positions: np.ndarray, phis: Optional[np.ndarray],
                task: PoseTarget, weights: PoseWeights) -> np.ndarray:
    target = np.asarray(task.position, dtype=float)
    costs = weights.alpha_p * np.sum((positions - target) ** 2, axis=1)
    if weights.alpha_R > 0:
        if task.phi is None or phis is None:
            raise ValueError("orientation weight is positive but angles are missing")
        d = np.mod(phis - task.phi, TWO_PI)
        d = np.where(d > math.pi, d - TWO_PI, d)
        costs = costs + weights.alpha_R * d ** 2
    return costs


def _grasp_costs(tips: np.ndarray, task: GraspTask) -> np.ndarray:
    c1 = np.asarray(task.c_ideal1)
    c2 = np.asarray(task.c_ideal2)
    return (np.sum((tips[:, 0:2] - c1) ** 2, axis=1)
            + np.sum((tips[:, 2:4] - c2) ** 2, axis=1))


def configuration_costs(model, names: Tuple[str, ...], Z: np.ndarray,
                        task, weights: PoseWeights) -> np.ndarray:
    """Task cost for each row of Z using the analytical kinematics."""
    positions = configuration_positions(model, names, Z)
    if isinstance(task, GraspTask):
        return _grasp_costs(positions, task)
    if isinstance(task, PoseTarget):
        phis = None
        if weights.alpha_R > 0:
            phis = configuration_orientations(model, names, Z)
        return _pose_costs(positions, phis, task, weights)
    raise TypeError(f"unknown task {task!r}")


def build_cost_table(grid: ParamGrid, model, task, weights: PoseWeights,
                     predictor: str = "analytic",
                     surrogate: Optional[Surrogate] = None) -> np.ndarray:
    """Length-2^N diagonal of the cost observable.

    `analytic` evaluates the closed-form kinematics at every decoded
    configuration (the verification oracle); `surrogate` substitutes the
    trained circuit's predicted tip positions.
    """
    grid.check_capacity()
    Z = decode_all(grid)
    if predictor == "analytic":
        return configuration_costs(model, grid.names(), Z, task, weights)
    if predictor == "surrogate":
        if surrogate is None:
            raise ValueError("surrogate predictor requested but none supplied")
        if weights.alpha_R > 0:
            raise ValueError("surrogate predicts positions only")
        tips = _predict_batch(surrogate, Z)
        if isinstance(task, GraspTask):
            return _grasp_costs(tips, task)
        target = np.asarray(task.position, dtype=float)
        return weights.alpha_p * np.sum((tips - target) ** 2, axis=1)
    raise ValueError(f"unknown predictor {predictor!r}")
