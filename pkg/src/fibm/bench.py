"""Experiment orchestration and report files behind the CLI subcommands."""
from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCHEMA_VERSION, RunConfig, thread_cap
from .graph import CommunityPartition, Graph, ProblemInstance, load_communities, load_edge_list, top_degree_seeds
from .objectives import SetObjective
from .optimize import Solution, nondominated_sort, select, sweep_beta
from .vrr import IndexCacheMiss, VrrIndex, sample_vrr

log = logging.getLogger(__name__)


class MissingArtifacts(FileNotFoundError):
    pass


@dataclass
class Inputs:
    graph: Graph
    partition: CommunityPartition
    negative_seeds: list[int]


def load_inputs(cfg: RunConfig) -> Inputs:
    if not cfg.graph:
        raise ValueError("no graph given (--graph or 'graph =' in the config)")
    graph = load_edge_list(cfg.graph, directed=cfg.directed, weight_mode=cfg.weight_mode)
    if cfg.communities:
        partition = load_communities(cfg.communities, graph)
    else:
        partition = CommunityPartition.from_assignment([0] * graph.node_count)
    kind, value = cfg.seed_spec()
    if kind == "top-degree":
        seeds = top_degree_seeds(graph, value)
    else:
        seeds = sorted(graph.index_of(x) for x in value)
    return Inputs(graph, partition, seeds)


def index_path(cfg: RunConfig, seed: int) -> Path:
    return Path(cfg.out) / f"index_seed{seed}_R{cfg.samples_per_root}.vrr"


def get_index(cfg: RunConfig, inputs: Inputs, seed: int, write: bool = False) -> VrrIndex:
    """Load a matching dump when one exists, otherwise sample (and optionally store)."""
    candidates = [Path(cfg.index)] if cfg.index else [index_path(cfg, seed)]
    for path in candidates:
        if path.exists():
            try:
                return VrrIndex.load(path, inputs.graph, inputs.partition, inputs.negative_seeds,
                                     cfg.samples_per_root, seed)
            except IndexCacheMiss as exc:
                log.info("index cache miss: %s", exc)
    index = sample_vrr(inputs.graph, inputs.partition, inputs.negative_seeds, cfg.samples_per_root, seed)
    if write:
        path = index_path(cfg, seed)
        path.parent.mkdir(parents=True, exist_ok=True)
        index.dump(path)
    return index


def problem_for(cfg: RunConfig, inputs: Inputs, beta: float | None = None) -> ProblemInstance:
    budget = min(cfg.k, inputs.graph.node_count - len(inputs.negative_seeds))
    return ProblemInstance(inputs.graph, inputs.partition, tuple(inputs.negative_seeds), budget,
                           cfg.mu, cfg.alpha, cfg.beta if beta is None else beta)


def solution_record(sol: Solution, graph: Graph) -> dict:
    return {
        "seeds": [graph.label(v) for v in sol.seeds],
        "beta": sol.beta,
        "selector": sol.selector,
        "objective": sol.objective,
        "short": sol.short,
        "epsilon_max": sol.epsilon_max,
        "psi": sol.psi,
        "evaluations_total": sol.total_evaluations,
        "compensation_checks": sol.compensation_checks,
        "compensation_violations": sol.compensation_violations,
        "final": dict(sol.final),
        "trace": [
            {**asdict(r), "node": graph.label(r.node)} for r in sol.trace
        ],
    }


def _mean(values) -> float:
    values = list(values)
    return float(sum(values) / len(values)) if values else 0.0


def _run_reps(cfg: RunConfig, fn):
    seeds = [cfg.rng_seed + r for r in range(cfg.repetitions)]
    workers = min(thread_cap(), len(seeds))
    if workers <= 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


@dataclass
class RunReport:
    command: str
    config: dict
    repetitions: list[dict]
    averages: dict
    pareto: list[dict] = field(default_factory=list)
    validation: dict | None = None
    schema: int = SCHEMA_VERSION
    version: str = __version__

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        data = json.loads(text)
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        return cls(**data)


def _averages(records: list[dict]) -> dict:
    return {
        "F": _mean(r["final"]["F"] for r in records),
        "W": _mean(r["final"]["W"] for r in records),
        "K": _mean(r["final"]["K"] for r in records),
        "dp_gap": _mean(r["final"]["dp_gap"] for r in records),
        "psi": _mean(r["psi"] for r in records),
        "evaluations_total": _mean(r["evaluations_total"] for r in records),
    }


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _write_csv(path: Path, header: list[str], rows: list[list]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_timing(out: Path, name: str, seconds: list[float]):
    # wall time lives outside the report so reports stay byte-reproducible
    _write(out / f"{name}.timing.json", json.dumps({"wall_seconds": seconds, "mean": _mean(seconds)}) + "\n")


def cmd_sample(cfg: RunConfig) -> list[Path]:
    inputs = load_inputs(cfg)
    paths = []
    for r in range(cfg.repetitions):
        seed = cfg.rng_seed + r
        index = sample_vrr(inputs.graph, inputs.partition, inputs.negative_seeds, cfg.samples_per_root, seed)
        path = index_path(cfg, seed)
        path.parent.mkdir(parents=True, exist_ok=True)
        index.dump(path)
        paths.append(path)
    return paths


def _objective(cfg, index, beta):
    _, per = index.estimate_negative_spread()
    return SetObjective(per, index.samples_per_root, cfg.alpha, beta, cfg.objective)


def cmd_select(cfg: RunConfig) -> RunReport:
    inputs = load_inputs(cfg)
    problem = problem_for(cfg, inputs)

    def one(seed):
        t0 = time.perf_counter()
        index = get_index(cfg, inputs, seed)
        sol = select(index, problem, cfg.selector, _objective(cfg, index, cfg.beta))
        rec = solution_record(sol, inputs.graph)
        rec["rng_seed"] = seed
        return rec, time.perf_counter() - t0

    results = _run_reps(cfg, one)
    records = [r for r, _ in results]
    report = RunReport("select", cfg.to_dict(), records, _averages(records))
    out = Path(cfg.out)
    name = f"select_{cfg.selector}_{cfg.objective}_beta{cfg.beta:g}"
    _write(out / f"{name}.json", report.to_json())
    _write_csv(out / f"{name}.csv",
               ["rng_seed", "seeds", "F", "W", "K", "dp_gap", "psi", "evaluations_total", "short"],
               [[r["rng_seed"], " ".join(r["seeds"]), repr(r["final"]["F"]), repr(r["final"]["W"]),
                 repr(r["final"]["K"]), repr(r["final"]["dp_gap"]), repr(r["psi"]),
                 r["evaluations_total"], int(r["short"])] for r in records])
    _write_timing(out, name, [t for _, t in results])
    return report


def cmd_sweep(cfg: RunConfig) -> RunReport:
    inputs = load_inputs(cfg)
    problem = problem_for(cfg, inputs)
    grid = cfg.grid()

    def one(seed):
        t0 = time.perf_counter()
        index = get_index(cfg, inputs, seed)
        front = sweep_beta(index, problem, grid, cfg.selector)
        pts = [{
            "beta": p.beta, "seeds": [inputs.graph.label(v) for v in p.seeds], "F": p.F, "W": p.W,
            "K": p.K, "dp_gap": p.dp_gap, "feasible": p.feasible, "dominated": p.dominated,
            "solution": solution_record(p.solution, inputs.graph),
        } for p in front.points]
        return {"rng_seed": seed, "points": pts}, time.perf_counter() - t0

    results = _run_reps(cfg, one)
    reps = [r for r, _ in results]
    betas = [p["beta"] for p in reps[0]["points"]]
    avg_points = []
    for j, beta in enumerate(betas):
        sols = [rep["points"][j]["solution"] for rep in reps]
        a = _averages(sols)
        avg_points.append({"beta": beta, "F": a["F"], "W": a["W"], "K": a["K"], "dp_gap": a["dp_gap"],
                           "psi": a["psi"], "evaluations_total": a["evaluations_total"],
                           "seeds": reps[0]["points"][j]["seeds"]})
    keep = set(nondominated_sort([(p["F"], p["W"]) for p in avg_points]))
    f_ref = avg_points[0]["F"]
    for i, p in enumerate(avg_points):
        p["dominated"] = i not in keep
        loss = 0.0 if f_ref <= 0 else 1.0 - p["F"] / f_ref
        p["feasible"] = loss <= cfg.mu + 1e-12
    averages = {"points": len(avg_points), "nondominated": len(keep),
                "feasible": sum(p["feasible"] for p in avg_points)}
    report = RunReport("sweep", cfg.to_dict(), reps, averages, pareto=avg_points)
    out = Path(cfg.out)
    name = f"sweep_{cfg.selector}"
    _write(out / f"{name}.json", report.to_json())
    _write_csv(out / f"front_{cfg.selector}.csv", ["beta", "F", "W", "feasible", "dominated", "seeds"],
               [[repr(p["beta"]), repr(p["F"]), repr(p["W"]), int(p["feasible"]), int(p["dominated"]),
                 " ".join(p["seeds"])] for p in avg_points])
    _write_timing(out, name, [t for _, t in results])
    return report


REPORT_INPUTS = ("select_*.json", "sweep_*.json")


def cmd_report(run_dir: str | Path) -> list[Path]:
    """Collect select/sweep reports of a run directory into plot-ready CSVs."""
    run_dir = Path(run_dir)
    files = sorted(p for pattern in REPORT_INPUTS for p in run_dir.glob(pattern)
                   if not p.name.endswith(".timing.json"))
    if not files:
        raise MissingArtifacts(f"{run_dir}: no run artifacts; expected one of {', '.join(REPORT_INPUTS)}")
    pareto, evals, psi = [], [], []
    for path in files:
        report = RunReport.from_json(path.read_text())
        if report.command == "select":
            method = f"{report.config['selector']}/{report.config['objective']}"
            for rec in report.repetitions[:1]:
                pareto.append([method, repr(rec["beta"]), repr(rec["final"]["F"]), repr(rec["final"]["W"]), 0])
                for i, row in enumerate(rec["trace"], 1):
                    evals.append([report.config["selector"], repr(rec["beta"]), i, row["evaluations"]])
                total = 0.0
                for i, row in enumerate(rec["trace"], 1):
                    total += row["epsilon"] + row["kappa"]
                    psi.append([report.config["selector"], repr(rec["beta"]), i,
                                repr((1.0 - 1.0 / np.e) * total)])
        else:
            method = f"{report.config['selector']}/sweep"
            for p in report.pareto:
                pareto.append([method, repr(p["beta"]), repr(p["F"]), repr(p["W"]), int(p["dominated"])])
    written = [run_dir / "pareto.csv", run_dir / "evals.csv", run_dir / "psi.csv"]
    _write_csv(written[0], ["method", "beta", "F", "W", "dominated"], pareto)
    _write_csv(written[1], ["selector", "beta", "iteration", "evaluations"], evals)
    _write_csv(written[2], ["selector", "beta", "k", "psi"], psi)
    return written
