"""Amplitude-amplification search over the discretized configuration space.

The oracle is a diagonal phase operator driven by the cost table: basis
states whose cost is within the threshold (boundary inclusive, so an exact
zero-cost solution is marked even at epsilon = 0) get their amplitude sign
flipped. Diffusion reflects amplitudes about their mean. The solution count
m is read exactly off the cost table rather than estimated by quantum
counting, and the iteration count follows K = floor(pi/4 * sqrt(M/m)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from . import qsim
from .encoding import ParamGrid, decode
from .kinematics import GraspTask, PoseTarget, PoseWeights, wrapped_angle_distance
from .qml import configuration_orientations, configuration_positions


class NoSolutionError(RuntimeError):
    """No basis state satisfies the threshold; raise epsilon and retry."""


@dataclass(frozen=True, eq=False)
class OracleSpec:
    """Cost table plus marking threshold; marked = {k : costs[k] <= epsilon}."""

    costs: np.ndarray
    epsilon: float

    def __post_init__(self):
        costs = np.asarray(self.costs, dtype=float)
        object.__setattr__(self, "costs", costs)
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")

    @property
    def marked_mask(self) -> np.ndarray:
        return self.costs <= self.epsilon


@dataclass(frozen=True)
class GroverPlan:
    """Shot/seed bookkeeping; iterations=None means use the K formula."""

    shots: int = 10000
    seed: int = 0
    iterations: Optional[int] = None

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.iterations is not None and self.iterations < 0:
            raise ValueError("iterations must be >= 0")


@dataclass(frozen=True)
class SearchResult:
    index: int
    bitstring: str
    params: Optional[np.ndarray]
    marked_probability: float
    queries: int
    epsilon: float
    solutions: int
    e_actual: Optional[float] = None
    accepted: Optional[bool] = None

    def verified(self, e_actual: float, accepted: bool) -> "SearchResult":
        return replace(self, e_actual=e_actual, accepted=accepted)


def count_solutions(costs: np.ndarray, epsilon: float) -> int:
    """Exact cardinality of {k : costs[k] <= epsilon}."""
    return int(np.count_nonzero(np.asarray(costs) <= epsilon))


def iteration_count(M: int, m: int) -> int:
    """K = floor(pi/4 * sqrt(M/m)), floored at 1 while m < M/2."""
    if m == 0:
        raise NoSolutionError("no marked states; raise epsilon")
    if not 1 <= m <= M:
        raise ValueError(f"need 1 <= m <= M, got m={m}, M={M}")
    k = math.floor(math.pi / 4 * math.sqrt(M / m))
    if k < 1 and m < M / 2:
        k = 1
    return k


def success_probability_analytic(M: int, m: int, K: int) -> float:
    """sin^2((2K + 1) * arcsin(sqrt(m / M)))."""
    if not 1 <= m <= M:
        raise ValueError(f"need 1 <= m <= M, got m={m}, M={M}")
    theta = math.asin(math.sqrt(m / M))
    return math.sin((2 * K + 1) * theta) ** 2


def oracle_signs(oracle: OracleSpec) -> np.ndarray:
    return np.where(oracle.marked_mask, -1.0, 1.0)


def apply_oracle(state: qsim.StateVector, oracle: OracleSpec) -> qsim.StateVector:
    """Flip the amplitude sign on marked indices (diagonal phase gate)."""
    if oracle.costs.shape != (state.dim,):
        raise ValueError(
            f"cost table of length {oracle.costs.shape} does not match state dim {state.dim}"
        )
    return qsim.apply_gate(state, qsim.DiagonalPhase(oracle_signs(oracle)))


def apply_diffusion(state: qsim.StateVector) -> qsim.StateVector:
    """Reflect amplitudes about their mean: a_k <- 2*mean(a) - a_k."""
    amps = state.amps
    return qsim.StateVector(state.n_qubits, 2.0 * amps.mean() - amps)


def amplified_state(n_qubits: int, marked: np.ndarray, iterations: int) -> qsim.StateVector:
    """Uniform superposition after `iterations` oracle+diffusion rounds."""
    amps = qsim.uniform_superposition(n_qubits).amps
    signs = np.where(marked, -1.0, 1.0)
    for _ in range(iterations):
        amps *= signs
        amps = 2.0 * amps.mean() - amps
    return qsim.StateVector(n_qubits, amps)


def _best_outcome(counts: dict) -> int:
    """Highest count, ties broken by lowest index."""
    return min(counts, key=lambda k: (-counts[k], k))


def search_with_state(grid: ParamGrid, oracle: OracleSpec,
                      plan: GroverPlan) -> Tuple[SearchResult, qsim.StateVector]:
    """grover_search plus the pre-measurement amplified state (for expectation
    traces)."""
    grid.check_capacity()
    N = grid.total_qubits
    M = grid.size
    if oracle.costs.shape != (M,):
        raise ValueError(f"cost table must have length {M}")
    marked = oracle.marked_mask
    m = int(np.count_nonzero(marked))
    if m == 0:
        raise NoSolutionError("no marked states at this epsilon")
    if plan.iterations is not None:
        K = plan.iterations
    elif m > M / 2:
        K = 0  # amplification degenerates; sample the uniform state directly
    else:
        K = iteration_count(M, m)
    state = amplified_state(N, marked, K)
    counts = qsim.measure(state, plan.shots, plan.seed)
    best = _best_outcome(counts)
    marked_hits = sum(c for k, c in counts.items() if marked[k])
    result = SearchResult(
        index=best,
        bitstring=format(best, f"0{N}b"),
        params=decode(grid, best),
        marked_probability=marked_hits / plan.shots,
        queries=K,
        epsilon=oracle.epsilon,
        solutions=m,
    )
    return result, state


def grover_search(grid: ParamGrid, oracle: OracleSpec, plan: GroverPlan) -> SearchResult:
    """Prepare uniform superposition, amplify, measure, report the modal outcome.

    When the marked set exceeds half the space, amplification degenerates and
    the search falls back to sampling the uniform state directly (K = 0).
    """
    return search_with_state(grid, oracle, plan)[0]


def shrink_schedule(costs: np.ndarray, epsilon0: float, shrink: float) -> list:
    """Geometric threshold ladder: shrink until the next step would mark nothing."""
    if not 0 < shrink < 1:
        raise ValueError("shrink factor must be in (0, 1)")
    costs = np.asarray(costs, dtype=float)
    if epsilon0 < costs.min():
        raise ValueError("epsilon0 must be at least the minimum cost")
    levels = [epsilon0]
    eps = epsilon0
    while True:
        nxt = eps * shrink
        if nxt == eps or count_solutions(costs, nxt) < 1:
            return levels
        levels.append(nxt)
        eps = nxt


def adaptive_search(grid: ParamGrid, costs: np.ndarray, epsilon0: float,
                    shrink: float, plan: GroverPlan) -> SearchResult:
    """Lower epsilon geometrically while solutions remain, then search once.

    The final threshold is the last value of the ladder epsilon0 * shrink^j
    that still marks at least one state.
    """
    levels = shrink_schedule(costs, epsilon0, shrink)
    return grover_search(grid, OracleSpec(costs, levels[-1]), plan)


def minimal_epsilon(costs: np.ndarray, epsilon_hi: float) -> float:
    """Bisect the threshold down to the smallest value still marking a state.

    Isolates the bit-exact minimum-cost set, refining beyond the geometric
    ladder; used to pin the search onto the global grid minimum.
    """
    costs = np.asarray(costs, dtype=float)
    if count_solutions(costs, epsilon_hi) < 1:
        raise NoSolutionError("refinement started from an empty threshold")
    lo = np.nextafter(costs.min(), -np.inf)  # strictly below the minimum
    hi = epsilon_hi
    while True:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            return hi
        if count_solutions(costs, mid) >= 1:
            hi = mid
        else:
            lo = mid


def actual_error(z: np.ndarray, model, names: Tuple[str, ...], task,
                 weights: PoseWeights) -> float:
    """Analytic verification error of a decoded configuration.

    Position tasks use the Euclidean tip error (plus the orientation geodesic
    in quadrature when an orientation target is set); grasp tasks use the
    summed squared contact deviation.
    """
    Z = np.asarray(z, dtype=float)[None, :]
    tips = configuration_positions(model, names, Z)[0]
    if isinstance(task, GraspTask):
        c1 = np.asarray(task.c_ideal1)
        c2 = np.asarray(task.c_ideal2)
        return float(np.sum((tips[0:2] - c1) ** 2) + np.sum((tips[2:4] - c2) ** 2))
    if isinstance(task, PoseTarget):
        err2 = float(np.sum((tips - np.asarray(task.position)) ** 2))
        if task.phi is not None and weights.alpha_R > 0:
            phi = float(configuration_orientations(model, names, Z)[0])
            err2 += wrapped_angle_distance(phi, task.phi) ** 2
        return math.sqrt(err2)
    raise TypeError(f"unknown task {task!r}")


def verify(index: int, grid: ParamGrid, model, task,
           weights: PoseWeights) -> Tuple[float, bool]:
    """Validate a measured bitstring against the analytical kinematics.

    Returns (e_actual, accepted); rejection is a result, not an error. The
    task must carry its verification tolerance.
    """
    if task.tolerance is None:
        raise ValueError("task has no verification tolerance set")
    z = decode(grid, index)
    in_bounds = all(
        s.lo - 1e-12 <= v <= s.hi + 1e-12 for s, v in zip(grid.specs, z)
    )
    e = actual_error(z, model, grid.names(), task, weights)
    return e, bool(in_bounds and e <= task.tolerance)
