"""Command-line entry points.

Subcommands:
  synth     generate a synthetic dataset CSV from the config's spec
  opf       solve the deterministic dispatch for a demand vector
  embed     conditional embedding weights and ambiguity radius for a query
  solve     one robust conditional dispatch query (full dual solve)
  bench     the full benchmark harness with report emission
  validate  run the numerical verification suites and emit a JSON report

Global flags: --config <path>, --seed <u64>, --out <dir>, --format csv,json,svg.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import validate as validate_mod
from .conic import dump_program
from .dro import assemble_dual, solve_ckdro  # noqa: F401  (assemble_dual used for dumps)
from .embedding import adaptive_radius, conditional_weights_augmented, regularization_schedule
from .kernels import sup_bound
from .opf import DispatchPlan, load_network, second_stage, solve_opf
from .pipeline import (
    DatasetSchema,
    ExperimentConfig,
    ckdro_dispatch,
    load_dataset,
    resolve_inputs,
    run_benchmarks,
    save_dataset,
    _derived_seed,
)
from .report import emit_report
from .synthetic import synth_generate

__all__ = ["main"]


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument(
        "--format",
        default="csv,json,svg",
        help="comma-separated report formats (bench only)",
    )


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json_file(args.config)
    if args.seed is not None:
        config = ExperimentConfig.from_dict({**config.to_dict(), "seed": args.seed})
    return config


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.split(",") if tok.strip() != ""])
    except ValueError:
        raise SystemExit(f"could not parse vector {text!r}") from None


def _query_from_args(args, config: ExperimentConfig, dataset) -> np.ndarray:
    if args.query is not None:
        return _parse_vector(args.query)
    if args.query_index is not None:
        return dataset.xs[args.query_index]
    raise SystemExit("provide --query or --query-index")


def _write_json(path, payload) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(path)


def _cmd_synth(args) -> int:
    config = _load_config(args)
    if config.synthetic_spec is None:
        raise SystemExit("config has no synthetic spec")
    dataset, _ = synth_generate(
        config.synthetic_spec, seed=_derived_seed(config.seed, "dataset")
    )
    schema = config.schema or DatasetSchema.for_synthetic(config.synthetic_spec)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "dataset.csv")
    save_dataset(dataset, path, schema)
    print(f"{path} ({len(dataset)} rows)")
    return 0


def _cmd_opf(args) -> int:
    config = _load_config(args)
    network = load_network(config.network_path)
    if args.demand is not None:
        demand = _parse_vector(args.demand)
    else:
        _, dataset = resolve_inputs(config)
        demand = dataset.ys.mean(axis=0)
    result = solve_opf(network, demand, tol=config.solver_tol)
    payload = {
        "demand": demand.tolist(),
        "dispatch": result.plan.output.tolist(),
        "theta": result.theta.tolist(),
        "cost": result.cost,
        "slack": result.slack.tolist(),
        "strict_feasible": result.strict_feasible,
    }
    _write_json(os.path.join(args.out, "opf.json"), payload)
    return 0


def _cmd_embed(args) -> int:
    config = _load_config(args)
    _, dataset = resolve_inputs(config)
    x = _query_from_args(args, config, dataset)
    lam = regularization_schedule(len(dataset), config.lambda_scale)
    weights = conditional_weights_augmented(
        dataset, config.aux_kernel, lam, x, m=config.neighbors
    )
    r_bound = config.r_bound if config.r_bound is not None else sup_bound(config.outcome_kernel)
    payload = {
        "query": x.tolist(),
        "lambda": lam,
        "beta": weights.beta.tolist(),
        "fictitious_weight": weights.fictitious,
        "sample_indices": weights.sample_indices.tolist(),
        "adaptive_radius": adaptive_radius(weights, r_bound, config.gamma),
    }
    _write_json(os.path.join(args.out, "embed.json"), payload)
    return 0


def _cmd_solve(args) -> int:
    config = _load_config(args)
    network, dataset = resolve_inputs(config)
    x = _query_from_args(args, config, dataset)
    radius = config.epsilon_value if config.epsilon_mode == "fixed" else None
    cert_seed = _derived_seed(config.seed, "cert")
    plan, solution, ball, cert = ckdro_dispatch(
        config, network, dataset, x, cert_seed, radius=radius
    )
    recourse = second_stage(network, dataset.ys.mean(axis=0), plan, tol=config.solver_tol)
    payload = {
        "query": x.tolist(),
        "eta": solution.eta.tolist(),
        "alpha": solution.alpha.tolist(),
        "f0": solution.f0,
        "value": solution.value,
        "residuals": list(solution.residuals),
        "radius": ball.radius,
        "cert": {
            "size": len(cert),
            "seed": cert.seed,
            "noise_sigma": cert.noise_sigma.tolist(),
            "source_indices": cert.source_indices.tolist(),
        },
        "mean_demand_recourse_cost": recourse.cost,
    }
    if args.dump_conic:
        from .dro import assemble_dual as _assemble
        from .opf import opf_cost_model

        program = _assemble(ball, cert, config.outcome_kernel, opf_cost_model(network))
        os.makedirs(args.out, exist_ok=True)
        dump_program(program, os.path.join(args.out, "conic.json"))
    _write_json(os.path.join(args.out, "solve.json"), payload)
    return 0


def _cmd_bench(args) -> int:
    config = _load_config(args)
    report = run_benchmarks(config)
    formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
    manifest = emit_report(report, args.out, formats=formats)
    failed = sum(1 for row in report.rows if row.error is not None)
    print(f"{len(report.rows)} queries, {failed} failed -> {args.out}")
    for entry in manifest["files"]:
        print(f"  {entry['name']}  {entry['sha256'][:12]}  {entry['bytes']}B")
    return 0


def _cmd_validate(args) -> int:
    config = _load_config(args)
    results = validate_mod.run_suites(seed=config.seed)
    path = os.path.join(args.out, "validate.json")
    _write_json(path, results)
    bad = [
        f"{suite}:{a['name']}"
        for suite, data in results["suites"].items()
        for a in data["assertions"]
        if not a["passed"]
    ]
    print(f"{results['total_assertions']} assertions, {len(bad)} failed")
    for name in bad:
        print(f"  FAIL {name}")
    return 1 if bad else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ckdro",
        description="Robust conditional decision making with kernel ambiguity sets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    _common(p_synth)
    p_synth.set_defaults(func=_cmd_synth)

    p_opf = sub.add_parser("opf", help="deterministic dispatch for a demand vector")
    _common(p_opf)
    p_opf.add_argument("--demand", help="comma-separated demand per bus")
    p_opf.set_defaults(func=_cmd_opf)

    p_embed = sub.add_parser("embed", help="embedding weights and radius for a query")
    _common(p_embed)
    p_embed.add_argument("--query", help="comma-separated auxiliary vector")
    p_embed.add_argument("--query-index", type=int, help="dataset row to use as query")
    p_embed.set_defaults(func=_cmd_embed)

    p_solve = sub.add_parser("solve", help="one robust dispatch query")
    _common(p_solve)
    p_solve.add_argument("--query", help="comma-separated auxiliary vector")
    p_solve.add_argument("--query-index", type=int, help="dataset row to use as query")
    p_solve.add_argument(
        "--dump-conic", action="store_true", help="also dump the canonical conic form"
    )
    p_solve.set_defaults(func=_cmd_solve)

    p_bench = sub.add_parser("bench", help="full benchmark harness")
    _common(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    p_val = sub.add_parser("validate", help="numerical verification suites")
    _common(p_val)
    p_val.set_defaults(func=_cmd_validate)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
