"""Command-line frontend: plan, estimate, hamsim and vqe.

Results go to stdout (or ``--out``) as newline-delimited JSON; a short human
summary goes to stderr. Failures print ``{"error": code, "message": ...}`` and
exit with the code listed in ``EXIT_CODES``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from importlib import resources

import numpy as np

from clustercut import estimator, hamsim, vqe
from clustercut.circuit import (
    QCAlgorithm,
    circuit_from_json,
    circuit_to_json,
    gate,
    load_json,
    post_from_json,
    post_to_json,
)
from clustercut.cutting import plan_cuts
from clustercut.errors import (
    BudgetExceeded,
    CircuitParseError,
    ClusterCutError,
    ClustersNotSeparable,
    InfeasibleClustering,
    NotDecomposable,
    OracleTooLarge,
    WidthExceeded,
)
from clustercut.network import Clustering, auto_cluster, build_network

EXIT_CODES = {
    CircuitParseError.code: 3,
    InfeasibleClustering.code: 4,
    WidthExceeded.code: 5,
    BudgetExceeded.code: 5,
    OracleTooLarge.code: 5,
    NotDecomposable.code: 6,
    ClustersNotSeparable.code: 6,
    ClusterCutError.code: 7,
    "invalid_argument": 2,
}


@dataclass(frozen=True)
class RunConfig:
    circuit: str | None = None
    post: str | None = None
    clustering: str | None = None
    auto_cluster: bool = False
    max_width: int | None = None
    mode: str = "montecarlo"
    epsilon: float = 0.1
    seed: int = 0
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


def demo_path() -> str:
    """Bundled four-wire K=1 example (circuit, post, clustering, oracle value)."""
    return str(resources.files("clustercut") / "data" / "demo_k1.json")


def _emit(record: dict, out: str | None) -> None:
    line = json.dumps(record, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(line + "\n")
    else:
        print(line)


def _load_inputs(cfg: RunConfig):
    """(algorithm, clustering or partition) from the circuit/post/clustering files."""
    if cfg.circuit is None:
        raise CircuitParseError("--circuit is required")
    data = load_json(cfg.circuit)
    circ = circuit_from_json(data.get("circuit", data))
    if cfg.post:
        post_data = load_json(cfg.post)
    elif "post" in data:
        post_data = data["post"]
    else:
        post_data = {"type": "constant", "n": circ.n}
    alg = QCAlgorithm(circ, post_from_json(post_data.get("post", post_data), circ.n))
    split = None
    if cfg.auto_cluster:
        if cfg.max_width is None:
            raise ValueError("--auto-cluster needs --max-width")
        split = auto_cluster(build_network(alg), cfg.max_width)
    elif cfg.clustering:
        split = _parse_split(load_json(cfg.clustering))
    elif "clustering" in data:
        split = _parse_split({"clustering": data["clustering"]})
    elif "partition" in data:
        split = _parse_split({"partition": data["partition"]})
    else:
        split = Clustering({v: 0 for v in range(circ.n + len(circ.gates))})
    return alg, split


def _parse_split(data):
    """A clustering is a list of vertex groups; a partition is a list of qubit groups."""
    if isinstance(data, list):
        return Clustering.from_groups(data)
    if "partition" in data:
        return tuple(tuple(p) for p in data["partition"])
    if "clustering" in data:
        return Clustering.from_groups(data["clustering"])
    raise CircuitParseError("clustering file needs a 'clustering' or 'partition' list")


def _plan(alg, split, mode=None):
    if isinstance(split, Clustering):
        return plan_cuts(alg, split, mode=mode)
    return plan_cuts(alg, partition=split, mode=mode)


def _split_json(split) -> dict:
    if isinstance(split, Clustering):
        return {"clustering": split.members()}
    return {"partition": [list(p) for p in split]}


def cost_report(plan, eps: float) -> dict:
    mc = estimator.plan_samples(plan.K, plan.r, 0, eps, "montecarlo")
    tn = estimator.plan_samples(plan.K, plan.r, plan.params.degree, eps, "tensor")
    return {
        "epsilon": eps,
        "predicted_N": mc.N,
        "predicted_N_sampled_overhead": estimator.plan_samples(
            plan.K, plan.r, 0, eps, "montecarlo", a=estimator.overhead(plan)
        ).N,
        "tensor_entries_D": tn.D,
        "tensor_N_per_entry": tn.N_entry,
        "tensor_total_DN": tn.D * tn.N_entry,
    }


def cmd_plan(cfg: RunConfig) -> dict:
    alg, split = _load_inputs(cfg)
    plan = _plan(alg, split)
    record = {
        "command": "plan",
        "circuit": circuit_to_json(alg.circuit),
        "post": post_to_json(alg.post),
        **_split_json(split),
        "plan": plan.to_json(),
        "cost": cost_report(plan, cfg.epsilon),
    }
    p = plan.params
    print(
        f"K={p.K} d={p.d} r={plan.r} cc<={p.cc_upper} cc={p.cc_exact} "
        f"N={record['cost']['predicted_N']} DN={record['cost']['tensor_total_DN']}",
        file=sys.stderr,
    )
    return record


def cmd_estimate(cfg: RunConfig, plan_file: str | None = None, max_width: int | None = None) -> dict:
    if plan_file:
        data = load_json(plan_file)
        circ = circuit_from_json(data["circuit"])
        alg = QCAlgorithm(circ, post_from_json(data["post"], circ.n))
        split = _parse_split(data)
    else:
        alg, split = _load_inputs(cfg)
    plan = _plan(alg, split, cfg.mode)
    kw = {"max_width": max_width}
    if cfg.mode == "montecarlo":
        kw["workers"] = cfg.workers
    est = estimator.estimate(plan, cfg.mode, cfg.epsilon, cfg.seed, **kw)
    out = {"command": "estimate", **est.to_json()}
    out["plan_params"] = {"K": plan.params.K, "d": plan.params.d,
                          "cc_upper": plan.params.cc_upper, "cc_exact": plan.params.cc_exact}
    print(f"{cfg.mode}: {est.value:.6g} +- {est.stderr:.2g} ({est.samples_used} samples)", file=sys.stderr)
    return out


def _task_from_json(data: dict, t=None, eps=None) -> hamsim.CorrelationTask:
    H = hamsim.ClusteredHamiltonian.from_json(data["hamiltonian"])
    prep = tuple(gate(g["kind"], *g["targets"], angle=g.get("angle")) for g in data.get("prep", []))
    obs = tuple(hamsim.PartyObservable.pauli(o["labels"], o["qubits"]) for o in data["observables"])
    return hamsim.CorrelationTask(
        H, prep, obs,
        float(data.get("t", 1.0) if t is None else t),
        float(data.get("epsilon", 0.1) if eps is None else eps),
    )


def cmd_hamsim(cfg: RunConfig, task_file: str, t=None, oracle: bool = False, eps=None) -> dict:
    task = _task_from_json(load_json(task_file), t=t, eps=eps)
    kw = {"workers": cfg.workers} if cfg.mode == "montecarlo" else {}
    est = hamsim.correlation(task, mode=cfg.mode, seed=cfg.seed, **kw)
    out = {"command": "hamsim", **est.to_json()}
    if oracle:
        out["oracle_value"] = hamsim.exact_correlation(task)
    m = est.meta
    print(f"correlation {est.value:.6g} +- {est.stderr:.2g} (m1={m['m1']} m2={m['m2']})", file=sys.stderr)
    return out


def cmd_vqe(cfg: RunConfig, args) -> dict:
    if args.experiment == "pruning":
        result = vqe.pruning_experiment(
            n=args.n, n_hamiltonians=args.hamiltonians, iterations=args.iterations, seed=cfg.seed
        )
        csv_path = args.csv or "pruning.csv"
        vqe.write_pruning_csv(csv_path, result)
        finals = {k: vqe.final_value(result[k]) for k in vqe.REGIMES}
        print(" ".join(f"{k}={v:.4g}" for k, v in finals.items()), file=sys.stderr)
        return {"command": "vqe", "experiment": "pruning", "csv": csv_path, "final": finals,
                "params": {k: result[k + "_params"] for k in vqe.REGIMES}}
    spec = vqe.AnsatzSpec(args.n, args.depth, args.entangler)
    H = vqe.PauliSumHamiltonian.random(args.n, args.terms, np.random.default_rng(cfg.seed))
    v_opt = H.ground_energy()
    sc = vqe.SpsaConfig(iterations=args.iterations, seed=cfg.seed)
    shots = None if args.exact_fragments else args.shots
    trace = vqe.spsa_vqe(spec, H, sc, mode=args.energy_mode, shots=shots)
    csv_path = args.csv or "spsa.csv"
    vqe.write_trace_csv(csv_path, trace, v_opt)
    last = trace[-1].f_ideal
    print(f"F={last:.6g} v_opt={v_opt:.6g}", file=sys.stderr)
    return {"command": "vqe", "experiment": "spsa", "csv": csv_path, "final_energy": last,
            "ground_energy": v_opt, "n_params": spec.n_params}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--circuit")
    common.add_argument("--post")
    g = common.add_mutually_exclusive_group()
    g.add_argument("--clustering")
    g.add_argument("--auto-cluster", action="store_true")
    common.add_argument("--max-width", type=int)
    common.add_argument("--mode", choices=("enumerate", "montecarlo", "tensor"), default="montecarlo")
    common.add_argument("--epsilon", type=float)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out")

    p = argparse.ArgumentParser(prog="clustercut", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("plan", parents=[common], help="cut plan and cost report")
    est = sub.add_parser("estimate", parents=[common], help="estimate E f(y) from fragments")
    est.add_argument("--plan", help="plan JSON written by 'plan --out'")
    est.add_argument("--demo", action="store_true", help="use the bundled K=1 example")
    hs = sub.add_parser("hamsim", parents=[common], help="cut-based correlation function")
    hs.add_argument("--task", required=True)
    hs.add_argument("--t", type=float)
    hs.add_argument("--oracle", action="store_true", help="also report the exact value")
    vq = sub.add_parser("vqe", parents=[common], help="VQE runs and the pruning study")
    vq.add_argument("--experiment", choices=("pruning", "spsa"), default="pruning")
    vq.add_argument("--n", type=int, default=6)
    vq.add_argument("--depth", type=int, default=1)
    vq.add_argument("--entangler", choices=("cz", "cnot"), default="cz")
    vq.add_argument("--terms", type=int, default=50)
    vq.add_argument("--iterations", type=int, default=None)
    vq.add_argument("--hamiltonians", type=int, default=20)
    vq.add_argument("--energy-mode", choices=("full", "cut"), default="full")
    vq.add_argument("--shots", type=int, default=8000)
    vq.add_argument("--exact-fragments", action="store_true")
    vq.add_argument("--csv")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            circuit=args.circuit, post=args.post, clustering=args.clustering,
            auto_cluster=args.auto_cluster, max_width=args.max_width, mode=args.mode,
            epsilon=0.1 if args.epsilon is None else args.epsilon, seed=args.seed, workers=args.workers, out=args.out,
        )
        if args.command == "plan":
            record = cmd_plan(cfg)
        elif args.command == "estimate":
            if args.demo:
                cfg = RunConfig(**{**cfg.__dict__, "circuit": demo_path()})
            record = cmd_estimate(cfg, args.plan)
            if args.demo:
                record["oracle_value"] = load_json(demo_path())["oracle_value"]
        elif args.command == "hamsim":
            record = cmd_hamsim(cfg, args.task, args.t, args.oracle, args.epsilon)
        else:
            if args.iterations is None:
                args.iterations = 10_000 if args.experiment == "pruning" else 200
            record = cmd_vqe(cfg, args)
    except ClusterCutError as exc:
        _emit({"error": exc.code, "message": str(exc)}, None)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.code, EXIT_CODES[ClusterCutError.code])
    except (ValueError, KeyError, OSError) as exc:
        _emit({"error": "invalid_argument", "message": str(exc)}, None)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CODES["invalid_argument"]
    _emit(record, cfg.out)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
