"""Case-study runner: configures the benchmark manipulator problems, drives
the quantum search and the classical baselines on the same objectives, and
emits machine-readable reports.

The quantum path runs one amplified search per adaptive-threshold step: the
threshold starts at 10x the grid-resolution cost floor, shrinks geometrically
while solutions remain, and is finally bisected down to the smallest value
that still marks a state (pinning the search onto the exact grid minimum).
One "optimization iteration" in the traces is one such adaptive step.

Reports are byte-stable for a fixed config and seed: floats are written with
17 significant digits and JSON keys are sorted.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import baselines as cls_opt
from . import grover, qsim
from .encoding import ParamGrid, ParamSpec, bin_width, decode_all
from .kinematics import (
    DualArm,
    GraspTask,
    OneLink,
    PoseTarget,
    PoseWeights,
    TwoLink,
)
from .qml import (
    Surrogate,
    TrainingSet,
    build_cost_table,
    configuration_costs,
    configuration_orientations,
    configuration_positions,
    make_surrogate,
    train,
)

TWO_PI = 2.0 * math.pi

ITERATION_NOTE = "one optimization iteration = one adaptive-threshold search step"


# --- configuration ------------------------------------------------------------

@dataclass(frozen=True)
class QmlSettings:
    n_qubits: Optional[int] = None
    n_layers: int = 2
    epochs: int = 200
    learning_rate: float = 0.1
    train_seed: int = 0
    training_samples: Optional[int] = None  # None = full grid


@dataclass(frozen=True)
class SearchSettings:
    epsilon0: Optional[float] = None  # None = 10x the cost-table floor
    shrink: float = 0.5
    refine: bool = True


@dataclass(frozen=True)
class BaselineSettings:
    max_evals: int = 4000
    n_starts: int = 5
    swarm_size: int = 30
    pso_iterations: int = 200
    seed: int = 0


@dataclass(frozen=True)
class CaseConfig:
    case: str
    grid: ParamGrid
    model: object
    task: object
    weights: PoseWeights = PoseWeights()
    mode: str = "analytic"
    shots: int = 10000
    seed: int = 0
    search: SearchSettings = SearchSettings()
    qml: QmlSettings = QmlSettings()
    baselines: BaselineSettings = BaselineSettings()

    def __post_init__(self):
        if self.mode not in ("analytic", "surrogate"):
            raise ValueError("mode must be 'analytic' or 'surrogate'")

    def with_overrides(self, seed: Optional[int] = None, shots: Optional[int] = None,
                       mode: Optional[str] = None,
                       qubits_per_param: Optional[int] = None) -> "CaseConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        if shots is not None:
            cfg = replace(cfg, shots=shots)
        if mode is not None:
            cfg = replace(cfg, mode=mode)
        if qubits_per_param is not None:
            specs = tuple(replace(s, n_qubits=qubits_per_param) for s in cfg.grid.specs)
            cfg = replace(cfg, grid=ParamGrid(specs))
        return cfg


def one_dof_case(qubits_per_param: int = 5, target: Tuple[float, float] = (0.8, 0.6),
                 seed: int = 0, shots: int = 10000, mode: str = "analytic") -> CaseConfig:
    """Single revolute joint: optimize link length l1 and angle theta1."""
    grid = ParamGrid((
        ParamSpec("l1", 0.1, 2.0, qubits_per_param),
        ParamSpec("theta1", 0.0, TWO_PI, qubits_per_param, angular=True),
    ))
    return CaseConfig("one_dof", grid, OneLink(), PoseTarget(tuple(target)),
                      PoseWeights(1.0, 0.0), mode, shots, seed)


def two_dof_case(qubits_per_param: int = 4, target: Tuple[float, float] = (1.0, 1.0),
                 seed: int = 0, shots: int = 10000, mode: str = "analytic") -> CaseConfig:
    """Planar 2R arm on its toroidal joint space: optimize angles and lengths."""
    grid = ParamGrid((
        ParamSpec("theta1", 0.0, TWO_PI, qubits_per_param, angular=True),
        ParamSpec("theta2", 0.0, TWO_PI, qubits_per_param, angular=True),
        ParamSpec("l1", 0.1, 2.0, qubits_per_param),
        ParamSpec("l2", 0.1, 2.0, qubits_per_param),
    ))
    return CaseConfig("two_dof", grid, TwoLink(), PoseTarget(tuple(target)),
                      PoseWeights(1.0, 0.0), mode, shots, seed)


def dual_arm_case(qubits_per_param: int = 4, center: Tuple[float, float] = (0.0, 1.2),
                  radius: float = 0.3, axis: float = 0.0, seed: int = 0,
                  shots: int = 10000, mode: str = "analytic") -> CaseConfig:
    """Two fixed-geometry 2R arms grasping a circular object at antipodal contacts."""
    grid = ParamGrid(tuple(
        ParamSpec(name, 0.0, TWO_PI, qubits_per_param, angular=True)
        for name in ("theta11", "theta12", "theta21", "theta22")
    ))
    return CaseConfig("dual_arm", grid, DualArm(),
                      GraspTask(tuple(center), radius, axis),
                      PoseWeights(1.0, 0.0), mode, shots, seed)


_BUILDERS = {"one_dof": one_dof_case, "two_dof": two_dof_case, "dual_arm": dual_arm_case}


# --- config (de)serialization ---------------------------------------------------

def config_to_dict(config: CaseConfig) -> dict:
    model = config.model
    if isinstance(model, OneLink):
        model_d = {"type": "one_link", "l1": model.l1}
    elif isinstance(model, TwoLink):
        model_d = {"type": "two_link", "l1": model.l1, "l2": model.l2}
    elif isinstance(model, DualArm):
        model_d = {"type": "dual_arm", "base1": list(model.base1),
                   "base2": list(model.base2), "links1": list(model.links1),
                   "links2": list(model.links2)}
    else:
        raise TypeError(f"unknown model {model!r}")
    task = config.task
    if isinstance(task, PoseTarget):
        task_d = {"type": "position", "target": list(task.position),
                  "phi": task.phi, "tolerance": task.tolerance}
    elif isinstance(task, GraspTask):
        task_d = {"type": "grasp", "center": list(task.center), "radius": task.radius,
                  "axis": task.axis, "tolerance": task.tolerance}
    else:
        raise TypeError(f"unknown task {task!r}")
    return {
        "case": config.case,
        "mode": config.mode,
        "seed": config.seed,
        "shots": config.shots,
        "params": [
            {"name": s.name, "min": s.lo, "max": s.hi,
             "qubits": s.n_qubits, "angular": s.angular}
            for s in config.grid.specs
        ],
        "model": model_d,
        "task": task_d,
        "weights": {"alpha_p": config.weights.alpha_p,
                    "alpha_R": config.weights.alpha_R,
                    "epsilon": config.weights.epsilon},
        "search": dataclasses.asdict(config.search),
        "qml": dataclasses.asdict(config.qml),
        "baselines": dataclasses.asdict(config.baselines),
    }


def config_from_dict(data: dict) -> CaseConfig:
    specs = tuple(
        ParamSpec(p["name"], float(p["min"]), float(p["max"]),
                  int(p["qubits"]), bool(p.get("angular", False)))
        for p in data["params"]
    )
    m = data["model"]
    if m["type"] == "one_link":
        model = OneLink(float(m.get("l1", 1.0)))
    elif m["type"] == "two_link":
        model = TwoLink(float(m.get("l1", 1.0)), float(m.get("l2", 1.0)))
    elif m["type"] == "dual_arm":
        model = DualArm(tuple(m.get("base1", (-0.8, 0.0))),
                        tuple(m.get("base2", (0.8, 0.0))),
                        tuple(m.get("links1", (1.0, 1.0))),
                        tuple(m.get("links2", (1.0, 1.0))))
    else:
        raise ValueError(f"unknown model type {m['type']!r}")
    t = data["task"]
    if t["type"] == "position":
        task = PoseTarget(tuple(t["target"]), t.get("phi"), t.get("tolerance"))
    elif t["type"] == "grasp":
        task = GraspTask(tuple(t["center"]), float(t["radius"]),
                         float(t.get("axis", 0.0)), tolerance=t.get("tolerance"))
    else:
        raise ValueError(f"unknown task type {t['type']!r}")
    w = data.get("weights", {})
    weights = PoseWeights(float(w.get("alpha_p", 1.0)), float(w.get("alpha_R", 0.0)),
                          w.get("epsilon"))
    return CaseConfig(
        case=data.get("case", "custom"),
        grid=ParamGrid(specs),
        model=model,
        task=task,
        weights=weights,
        mode=data.get("mode", "analytic"),
        shots=int(data.get("shots", 10000)),
        seed=int(data.get("seed", 0)),
        search=SearchSettings(**data.get("search", {})),
        qml=QmlSettings(**data.get("qml", {})),
        baselines=BaselineSettings(**data.get("baselines", {})),
    )


def load_config(path: str) -> CaseConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def save_config(config: CaseConfig, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- run records -----------------------------------------------------------------

@dataclass(frozen=True)
class AdaptiveStep:
    step: int
    epsilon: float
    solutions: int
    iterations: int
    expectation: float
    best_index: Optional[int]
    best_cost: Optional[float]


@dataclass
class RunReport:
    case: str
    mode: str
    seed: int
    shots: int
    total_qubits: int
    space_size: int
    resolution: List[dict]
    epsilon0: float
    final_epsilon: float
    tolerance: float
    steps: List[AdaptiveStep]
    result: grover.SearchResult
    analytic_best_cost: float
    queries_final: int
    queries_total: int
    iteration_definition: str = ITERATION_NOTE
    loss_trace: Optional[List[float]] = None
    surrogate: Optional[Surrogate] = None  # carried for emit, not serialized

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "mode": self.mode,
            "seed": self.seed,
            "shots": self.shots,
            "total_qubits": self.total_qubits,
            "space_size": self.space_size,
            "resolution": self.resolution,
            "epsilon0": self.epsilon0,
            "final_epsilon": self.final_epsilon,
            "tolerance": self.tolerance,
            "iteration_definition": self.iteration_definition,
            "steps": [dataclasses.asdict(s) for s in self.steps],
            "result": {
                "index": self.result.index,
                "bitstring": self.result.bitstring,
                "params": [float(v) for v in self.result.params],
                "marked_probability": self.result.marked_probability,
                "queries": self.result.queries,
                "epsilon": self.result.epsilon,
                "solutions": self.result.solutions,
                "e_actual": self.result.e_actual,
                "accepted": self.result.accepted,
            },
            "analytic_best_cost": self.analytic_best_cost,
            "queries_final": self.queries_final,
            "queries_total": self.queries_total,
            "loss_trace": self.loss_trace,
        }


def _actual_error_table(grid: ParamGrid, model, task, weights: PoseWeights) -> np.ndarray:
    """Verification error of every grid configuration (vectorized)."""
    Z = decode_all(grid)
    names = grid.names()
    tips = configuration_positions(model, names, Z)
    if isinstance(task, GraspTask):
        c1, c2 = np.asarray(task.c_ideal1), np.asarray(task.c_ideal2)
        return (np.sum((tips[:, 0:2] - c1) ** 2, axis=1)
                + np.sum((tips[:, 2:4] - c2) ** 2, axis=1))
    err2 = np.sum((tips - np.asarray(task.position)) ** 2, axis=1)
    if task.phi is not None and weights.alpha_R > 0:
        phis = configuration_orientations(model, names, Z)
        d = np.mod(phis - task.phi, TWO_PI)
        d = np.where(d > math.pi, d - TWO_PI, d)
        err2 = err2 + d ** 2
    return np.sqrt(err2) if isinstance(task, PoseTarget) else err2


def train_case_surrogate(config: CaseConfig) -> Tuple[Surrogate, np.ndarray]:
    """Fit the circuit surrogate on analytic FK labels for this case's grid."""
    settings = config.qml
    data = TrainingSet.from_grid(config.grid, config.model,
                                 sample=settings.training_samples,
                                 seed=settings.train_seed)
    base = make_surrogate(config.grid, config.model,
                          n_layers=settings.n_layers, n_qubits=settings.n_qubits)
    return train(base, data, epochs=settings.epochs,
                 learning_rate=settings.learning_rate, seed=settings.train_seed)


def run_case(config: CaseConfig, surrogate: Optional[Surrogate] = None) -> RunReport:
    """Quantum pipeline: (train ->) cost table -> adaptive search -> verification.

    Raises CapacityError when the grid exceeds the simulator cap, and
    NoSolutionError when even the loosest threshold marks nothing (raise
    epsilon, coarsen the grid, or retrain the surrogate).
    """
    grid = config.grid
    grid.check_capacity()
    names = grid.names()

    analytic_costs = build_cost_table(grid, config.model, config.task,
                                      config.weights, "analytic")
    loss_trace = None
    if config.mode == "surrogate":
        if surrogate is None:
            surrogate, trace_arr = train_case_surrogate(config)
            loss_trace = [float(v) for v in trace_arr]
        costs = build_cost_table(grid, config.model, config.task, config.weights,
                                 "surrogate", surrogate)
    else:
        surrogate = None
        costs = analytic_costs

    task = config.task
    tolerance = task.tolerance
    if tolerance is None:
        # grid resolution bounds achievable accuracy; accept up to twice the
        # exhaustive error floor
        tolerance = 2.0 * float(_actual_error_table(grid, config.model, task,
                                                    config.weights).min())
        task = replace(task, tolerance=tolerance)

    floor = float(costs.min())
    if config.weights.epsilon is not None:
        epsilon0 = config.weights.epsilon
    elif config.search.epsilon0 is not None:
        epsilon0 = config.search.epsilon0
    else:
        epsilon0 = 10.0 * floor if floor > 0 else 0.0
    if epsilon0 < floor:
        raise grover.NoSolutionError(
            f"epsilon0={epsilon0} marks no configuration (cost floor {floor}); "
            "raise epsilon, coarsen the grid, or retrain the surrogate"
        )

    plan = grover.GroverPlan(shots=config.shots, seed=config.seed)
    levels = grover.shrink_schedule(costs, epsilon0, config.search.shrink)
    if config.search.refine:
        refined = grover.minimal_epsilon(costs, levels[-1])
        if refined < levels[-1]:
            levels.append(refined)

    steps = [AdaptiveStep(0, epsilon0, grover.count_solutions(costs, epsilon0), 0,
                          float(costs.mean()), None, None)]
    result = None
    queries_total = 0
    for j, eps in enumerate(levels, start=1):
        result, state = grover.search_with_state(
            grid, grover.OracleSpec(costs, eps), plan
        )
        queries_total += result.queries
        steps.append(AdaptiveStep(
            j, eps, result.solutions, result.queries,
            qsim.expectation_diagonal(state, costs),
            result.index, float(costs[result.index]),
        ))
    assert result is not None

    e_actual, accepted = grover.verify(result.index, grid, config.model, task,
                                       config.weights)
    result = result.verified(e_actual, accepted)

    resolution = [
        {"name": s.name, "qubits": s.n_qubits, "min": s.lo, "max": s.hi,
         "angular": s.angular, "bin_width": bin_width(s)}
        for s in grid.specs
    ]
    return RunReport(
        case=config.case, mode=config.mode, seed=config.seed, shots=config.shots,
        total_qubits=grid.total_qubits, space_size=grid.size,
        resolution=resolution, epsilon0=epsilon0, final_epsilon=levels[-1],
        tolerance=tolerance, steps=steps, result=result,
        analytic_best_cost=float(analytic_costs[result.index]),
        queries_final=result.queries, queries_total=queries_total,
        loss_trace=loss_trace, surrogate=surrogate,
    )


# --- classical baselines ------------------------------------------------------------

def case_objective(config: CaseConfig) -> cls_opt.Objective:
    """Counting objective over the continuous analytic cost of this case."""
    names = config.grid.names()
    model, task, weights = config.model, config.task, config.weights

    def fn(z: np.ndarray) -> float:
        return float(configuration_costs(model, names, z[None, :], task, weights)[0])

    bounds = [(s.lo, s.hi) for s in config.grid.specs]
    angular = [s.angular for s in config.grid.specs]
    return cls_opt.Objective(bounds, fn, angular)


def run_baselines(config: CaseConfig) -> List[cls_opt.OptRun]:
    """Multi-start simplex and quasi-Newton, one PSO run, and the exhaustive
    grid scan, all on the same analytic objective."""
    settings = config.baselines
    runs: List[cls_opt.OptRun] = []

    obj = case_objective(config)
    runs.append(cls_opt.multi_start(cls_opt.nelder_mead, obj,
                                    n_starts=settings.n_starts, seed=settings.seed,
                                    max_evals=settings.max_evals))
    obj = case_objective(config)
    runs.append(cls_opt.multi_start(cls_opt.quasi_newton, obj,
                                    n_starts=settings.n_starts, seed=settings.seed,
                                    max_evals=settings.max_evals))
    obj = case_objective(config)
    runs.append(cls_opt.pso(obj, swarm_size=settings.swarm_size,
                            iterations=settings.pso_iterations,
                            seed=settings.seed))

    names = config.grid.names()

    def table_fn(Z: np.ndarray) -> np.ndarray:
        return configuration_costs(config.model, names, Z, config.task, config.weights)

    idx, best_cost, evals = cls_opt.exhaustive_scan(config.grid, table_fn)
    runs.append(cls_opt.OptRun("exhaustive", decode_all(config.grid)[idx],
                               best_cost, evals, [best_cost], True))
    return runs


def compare(report: RunReport, runs: Sequence[cls_opt.OptRun]) -> List[dict]:
    """Method-by-method table: query/evaluation counts, best analytic cost,
    acceptance, and the evaluation ratio against the final Grover search."""
    grover_queries = max(report.queries_final, 1)
    rows = [{
        "method": "grover",
        "evaluations": report.queries_final,
        "best_cost": report.analytic_best_cost,
        "accepted": bool(report.result.accepted),
        "evals_over_grover": report.queries_final / grover_queries,
    }]
    for run in runs:
        rows.append({
            "method": run.method,
            "evaluations": run.evaluations,
            "best_cost": run.best_cost,
            "accepted": run.converged,
            "evals_over_grover": run.evaluations / grover_queries,
        })
    return rows


def sweep(config: CaseConfig, qubit_counts: Sequence[int]) -> List[dict]:
    """Scaling table: resolution vs search effort at each qubits-per-parameter."""
    rows = []
    for q in qubit_counts:
        cfg = config.with_overrides(qubits_per_param=q)
        try:
            cfg.grid.check_capacity()
        except qsim.CapacityError as exc:
            rows.append({"qubits_per_param": q, "total_qubits": cfg.grid.total_qubits,
                         "space_size": 1 << cfg.grid.total_qubits, "min_cost": math.nan,
                         "solutions": 0, "iterations": 0, "ratio": math.nan,
                         "note": str(exc)})
            continue
        costs = build_cost_table(cfg.grid, cfg.model, cfg.task, cfg.weights, "analytic")
        floor = float(costs.min())
        eps0 = 10.0 * floor if floor > 0 else 0.0
        levels = grover.shrink_schedule(costs, eps0, cfg.search.shrink)
        eps = grover.minimal_epsilon(costs, levels[-1]) if cfg.search.refine else levels[-1]
        m = grover.count_solutions(costs, eps)
        K = grover.iteration_count(cfg.grid.size, m)
        rows.append({"qubits_per_param": q, "total_qubits": cfg.grid.total_qubits,
                     "space_size": cfg.grid.size, "min_cost": floor,
                     "solutions": m, "iterations": K,
                     "ratio": cfg.grid.size / max(K, 1), "note": ""})
    return rows


# --- report emission -------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_report(report: RunReport, out_dir: str,
                comparison: Optional[List[dict]] = None) -> dict:
    """Write trace.csv, report.json, optional comparison.csv and the trained
    surrogate parameters; returns the path map."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    trace_path = os.path.join(out_dir, "trace.csv")
    write_csv(trace_path, ["iteration", "cost"],
              [(s.step, s.expectation) for s in report.steps])
    paths["trace"] = trace_path

    report_path = os.path.join(out_dir, "report.json")
    with open(report_path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["report"] = report_path

    if comparison is not None:
        cmp_path = os.path.join(out_dir, "comparison.csv")
        header = ["method", "evaluations", "best_cost", "accepted", "evals_over_grover"]
        write_csv(cmp_path, header, [[row[h] for h in header] for row in comparison])
        paths["comparison"] = cmp_path

    if report.surrogate is not None:
        from .qml import save_surrogate

        params_path = os.path.join(out_dir, "surrogate.params")
        save_surrogate(report.surrogate, params_path)
        paths["surrogate"] = params_path
    return paths


def write_optruns(runs: Sequence[cls_opt.OptRun], path: str) -> None:
    payload = [
        {"method": r.method, "best_x": [float(v) for v in r.best_x],
         "best_cost": r.best_cost, "evaluations": r.evaluations,
         "trace": [float(v) for v in r.trace], "converged": r.converged}
        for r in runs
    ]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_optruns(path: str) -> List[cls_opt.OptRun]:
    with open(path) as fh:
        payload = json.load(fh)
    return [
        cls_opt.OptRun(r["method"], np.asarray(r["best_x"]), r["best_cost"],
                       r["evaluations"], list(r["trace"]), r["converged"])
        for r in payload
    ]
