"""Classical optimizers over the continuous objectives, instrumented with
exact evaluation counts for query-based comparison against the quantum search.

Box bounds are enforced inside the objective: angular coordinates are wrapped
modulo their period, the rest are clamped, and every call increments the
counter exactly once. Local methods (simplex, quasi-Newton) are meant to run
multi-start on the multimodal kinematic landscapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .encoding import ParamGrid, decode_all

TWO_PI = 2.0 * math.pi


class Objective:
    """Counting wrapper around a cost function on a box domain."""

    def __init__(self, bounds: Sequence[Tuple[float, float]],
                 fn: Callable[[np.ndarray], float],
                 angular: Optional[Sequence[bool]] = None):
        self.bounds = [(float(lo), float(hi)) for lo, hi in bounds]
        self.fn = fn
        self.angular = list(angular) if angular is not None else [False] * len(self.bounds)
        if len(self.angular) != len(self.bounds):
            raise ValueError("angular flags must match bounds")
        self.evaluations = 0

    @property
    def dimension(self) -> int:
        return len(self.bounds)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Wrap angular coordinates into one period, clamp the rest to the box."""
        out = np.array(x, dtype=float)
        for i, ((lo, hi), ang) in enumerate(zip(self.bounds, self.angular)):
            if ang:
                out[i] = lo + np.mod(out[i] - lo, TWO_PI)
            else:
                out[i] = min(max(out[i], lo), hi)
        return out

    def evaluate(self, x: np.ndarray) -> float:
        self.evaluations += 1
        return float(self.fn(self.project(x)))

    def random_start(self, rng: np.random.Generator) -> np.ndarray:
        return np.array([rng.uniform(lo, hi) for lo, hi in self.bounds])


@dataclass
class OptRun:
    method: str
    best_x: np.ndarray
    best_cost: float
    evaluations: int
    trace: List[float] = field(default_factory=list)
    converged: bool = False


def nelder_mead(obj: Objective, start: Sequence[float], max_evals: int = 2000,
                diameter_tol: float = 1e-8, spread_tol: float = 1e-10) -> OptRun:
    """Downhill simplex with reflection/expansion/contraction/shrink
    coefficients (1, 2, 0.5, 0.5).

    Stops once the simplex diameter and the cost spread are both below their
    tolerances (the spread alone can trigger ~1e-5 parameter error on flat
    quadratics), or when the evaluation budget runs out.
    """
    d = obj.dimension
    x0 = np.asarray(start, dtype=float)
    start_evals = obj.evaluations

    simplex = [x0]
    for i in range(d):
        step = 0.05 * (obj.bounds[i][1] - obj.bounds[i][0])
        vertex = x0.copy()
        vertex[i] += step if step > 0 else 0.05
        simplex.append(vertex)
    simplex = np.array(simplex)
    values = np.array([obj.evaluate(v) for v in simplex])

    trace = [float(values.min())]
    converged = False
    while obj.evaluations - start_evals < max_evals:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        diameter = max(np.linalg.norm(v - simplex[0]) for v in simplex[1:])
        if diameter < diameter_tol and values[-1] - values[0] < spread_tol:
            converged = True
            break

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        reflected = centroid + 1.0 * (centroid - worst)
        f_r = obj.evaluate(reflected)
        if f_r < values[0]:
            expanded = centroid + 2.0 * (centroid - worst)
            f_e = obj.evaluate(expanded)
            if f_e < f_r:
                simplex[-1], values[-1] = expanded, f_e
            else:
                simplex[-1], values[-1] = reflected, f_r
        elif f_r < values[-2]:
            simplex[-1], values[-1] = reflected, f_r
        else:
            contracted = centroid + 0.5 * (worst - centroid)
            f_c = obj.evaluate(contracted)
            if f_c < values[-1]:
                simplex[-1], values[-1] = contracted, f_c
            else:
                for i in range(1, d + 1):
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                    values[i] = obj.evaluate(simplex[i])
        trace.append(min(trace[-1], float(values.min())))

    best = int(np.argmin(values))
    return OptRun("nelder_mead", obj.project(simplex[best]), float(values[best]),
                  obj.evaluations - start_evals, trace, converged)


def _fd_gradient(obj: Objective, x: np.ndarray, step: float) -> np.ndarray:
    g = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (obj.evaluate(x + e) - obj.evaluate(x - e)) / (2 * step)
    return g


def quasi_newton(obj: Objective, start: Sequence[float], max_evals: int = 2000,
                 grad_tol: float = 1e-8, fd_step: float = 1e-6,
                 armijo_c: float = 1e-4) -> OptRun:
    """BFGS with central-finite-difference gradients and a backtracking
    (Armijo, step-halving) line search. Stops on gradient norm or budget."""
    x = np.asarray(start, dtype=float)
    d = x.size
    start_evals = obj.evaluations
    H = np.eye(d)
    f = obj.evaluate(x)
    g = _fd_gradient(obj, x, fd_step)
    trace = [f]
    converged = False
    while obj.evaluations - start_evals < max_evals:
        if np.linalg.norm(g) < grad_tol:
            converged = True
            break
        p = -H @ g
        slope = float(g @ p)
        if slope >= 0:  # stale curvature; reset to steepest descent
            H = np.eye(d)
            p = -g
            slope = float(g @ p)
        t = 1.0
        f_new, x_new = f, x
        for _ in range(40):
            x_new = x + t * p
            f_new = obj.evaluate(x_new)
            if f_new <= f + armijo_c * t * slope:
                break
            t *= 0.5
            if obj.evaluations - start_evals >= max_evals:
                break
        if f_new >= f:
            converged = np.linalg.norm(g) < 1e2 * grad_tol
            break
        g_new = _fd_gradient(obj, x_new, fd_step)
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12:
            rho = 1.0 / sy
            I = np.eye(d)
            H = (I - rho * np.outer(s, y)) @ H @ (I - rho * np.outer(y, s)) \
                + rho * np.outer(s, s)
        x, f, g = x_new, f_new, g_new
        trace.append(min(trace[-1], f))
    return OptRun("quasi_newton", obj.project(x), f,
                  obj.evaluations - start_evals, trace, converged)


def pso(obj: Objective, swarm_size: int = 30, inertia: float = 0.7,
        cognitive: float = 1.5, social: float = 1.5, iterations: int = 200,
        max_evals: Optional[int] = None, seed: int = 0) -> OptRun:
    """Particle swarm with positions clamped to the box; deterministic per seed."""
    if swarm_size < 2:
        raise ValueError("swarm must have at least 2 particles")
    rng = np.random.default_rng(seed)
    d = obj.dimension
    lo = np.array([b[0] for b in obj.bounds])
    hi = np.array([b[1] for b in obj.bounds])
    start_evals = obj.evaluations
    budget = max_evals if max_evals is not None else swarm_size * (iterations + 1)

    x = rng.uniform(lo, hi, size=(swarm_size, d))
    v = np.zeros_like(x)
    pbest = x.copy()
    pcost = np.array([obj.evaluate(xi) for xi in x])
    gbest_i = int(np.argmin(pcost))
    gbest, gcost = pbest[gbest_i].copy(), float(pcost[gbest_i])
    trace = [gcost]
    converged = False
    for _ in range(iterations):
        if obj.evaluations - start_evals + swarm_size > budget:
            break
        r1 = rng.random((swarm_size, d))
        r2 = rng.random((swarm_size, d))
        v = inertia * v + cognitive * r1 * (pbest - x) + social * r2 * (gbest - x)
        x = np.clip(x + v, lo, hi)
        for i in range(swarm_size):
            c = obj.evaluate(x[i])
            if c < pcost[i]:
                pbest[i], pcost[i] = x[i].copy(), c
                if c < gcost:
                    gbest, gcost = x[i].copy(), float(c)
        trace.append(gcost)
    else:
        converged = True
    return OptRun("pso", obj.project(gbest), gcost,
                  obj.evaluations - start_evals, trace, converged)


def multi_start(method: Callable[..., OptRun], obj: Objective, n_starts: int = 5,
                seed: int = 0, **kwargs) -> OptRun:
    """Run a local method from seeded uniform-random starts; report the pooled
    running best with summed evaluation counts."""
    rng = np.random.default_rng(seed)
    best: Optional[OptRun] = None
    trace: List[float] = []
    total_evals = 0
    converged = False
    name = ""
    for _ in range(n_starts):
        run = method(obj, obj.random_start(rng), **kwargs)
        name = run.method
        total_evals += run.evaluations
        converged = converged or run.converged
        for value in run.trace:
            trace.append(value if not trace else min(trace[-1], value))
        if best is None or run.best_cost < best.best_cost:
            best = run
    assert best is not None
    return OptRun(name, best.best_x, best.best_cost, total_evals, trace, converged)


def exhaustive_scan(grid: ParamGrid,
                    cost_fn: Callable[[np.ndarray], np.ndarray]) -> Tuple[int, float, int]:
    """Exact argmin over all 2^N grid configurations, ties broken by lowest
    index; returns (argmin index, min cost, evaluations = 2^N)."""
    Z = decode_all(grid)
    costs = np.asarray(cost_fn(Z), dtype=float)
    if costs.shape != (grid.size,):
        raise ValueError("cost function must return one cost per configuration")
    best = int(np.argmin(costs))
    return best, float(costs[best]), grid.size
