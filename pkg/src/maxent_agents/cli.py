"""Command-line experiment runner.

Commands
--------
simulate    roll the die and write a counts file
infer       run one agent's inference for a chosen view
network     run every agent in a network and compare their beliefs
sweep-beta  tabulate log_zeta, <f> and s_me over a range of multipliers

Exit codes: 0 success, 2 infeasible constraint, 3 numerical
non-convergence, 4 input error.  Wall-clock timing goes to stderr so that
output files stay byte-deterministic for fixed seeds.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Any

from .engine import (
    ConstraintSpec,
    ConvergenceError,
    InfeasibleConstraintError,
    PriorSpec,
    expected_f,
    log_zeta,
    me_entropy,
    posterior,
    posterior_summary,
    solve_beta,
)
from .fileio import (
    EngineSettings,
    ExperimentConfig,
    load_config,
    parse_constraint_shorthand,
    read_counts,
    view_to_payload,
    write_counts,
    write_payload,
    write_sweep_csv,
)
from .multinomial import AgentView, CountVector, simulate_rolls
from .network import belief_divergence, infer_all

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_NONCONVERGED = 3
EXIT_INPUT = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--out", required=True, help="output path")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--grid", type=int, default=None, help="grid resolution override")
    parser.add_argument("--mc-samples", type=int, default=None, help="MC sample override")
    parser.add_argument(
        "--constraint", default=None,
        help='moment constraint shorthand "f=1,0,-2;F=0" or "none" (overrides config)',
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maxent-agents",
        description="belief updating with counts and a shared bias constraint",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="roll the die, write a counts file")
    _add_common(p)

    p = sub.add_parser("infer", help="single-agent inference for one view")
    _add_common(p)
    p.add_argument("--counts", required=True, help="counts file (JSON)")
    p.add_argument(
        "--view", default=None,
        help='visible sides "1,3" | "all" (default) | "none" for an empty view',
    )

    p = sub.add_parser("network", help="inference for every agent in the network")
    _add_common(p)
    p.add_argument("--counts", required=True, help="counts file (JSON)")
    p.add_argument("--round", type=int, default=None, help="visibility round override")

    p = sub.add_parser("sweep-beta", help="tabulate the tilt over a multiplier range")
    _add_common(p)
    p.add_argument("--counts", required=True, help="counts file (JSON)")
    p.add_argument("--view", default=None, help='visible sides, as for infer')
    p.add_argument("--beta-min", type=float, required=True)
    p.add_argument("--beta-max", type=float, required=True)
    p.add_argument("--beta-step", type=float, required=True)
    return parser


def _resolved_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config)
    updates: dict[str, Any] = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.grid is not None or args.mc_samples is not None:
        if args.grid is not None and args.mc_samples is not None:
            raise ValueError("--grid and --mc-samples are mutually exclusive")
        updates["engine"] = EngineSettings(
            grid=args.grid, mc_samples=args.mc_samples,
            mc_seed=config.engine.mc_seed,
        )
    if args.constraint is not None:
        updates["constraint"] = parse_constraint_shorthand(args.constraint)
    if getattr(args, "round", None) is not None:
        updates["round"] = args.round
    if updates:
        payload = {**config.__dict__, **updates}
        config = ExperimentConfig(**payload)
    return config


def _parse_view(text: str | None, counts: CountVector) -> AgentView:
    if text is None or text.strip().lower() == "all":
        return AgentView.full(counts)
    if text.strip().lower() == "none":
        return AgentView.empty(counts.k, counts.n)
    sides = [int(v) for v in text.split(",") if v.strip()]
    return AgentView.from_mapping(
        counts.k, counts.n, {s: counts.counts[s - 1] for s in sides}
    )


def _agent_payload(view: AgentView, solved, summary, entropy) -> dict:
    return {
        "view": view_to_payload(view),
        "beta": solved.beta,
        "log_zeta": solved.log_zeta,
        "residual": solved.residual,
        "s_me": entropy.s_me,
        "expected_f": summary.expected_f,
        "normalization": summary.normalization,
        "means": list(summary.means),
        "variances": list(summary.variances),
        "marginal_abscissa": list(summary.marginal_abscissa),
        "marginals": [list(row) for row in summary.marginals],
    }


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _resolved_config(args)
    if config.theta_true is None:
        raise ValueError("simulate needs theta_true in the config")
    counts = simulate_rolls(config.theta_true, config.n, config.seed)
    write_counts(args.out, counts, config.seed, theta_true=config.theta_true)
    print(f"wrote {args.out}: counts={list(counts.counts)} n={counts.n}", file=sys.stderr)
    return EXIT_OK


def cmd_infer(args: argparse.Namespace) -> int:
    config = _resolved_config(args)
    counts = read_counts(args.counts)
    if counts.k != config.k:
        raise ValueError(f"counts file has k={counts.k}, config has k={config.k}")
    view = _parse_view(args.view, counts)
    prior = PriorSpec.of(config.prior)
    constraint = config.constraint or ConstraintSpec.none(config.k)
    engine = config.build_engine()
    t0 = time.perf_counter()
    solved = solve_beta(prior, view, constraint, engine)
    model = posterior(prior, view, solved, engine)
    summary = posterior_summary(model)
    entropy = me_entropy(model)
    elapsed = time.perf_counter() - t0
    record = {
        "config": config.to_payload(),
        "counts": list(counts.counts),
        "agents": [_agent_payload(view, solved, summary, entropy)],
        "meta": {
            "engine": engine.descriptor(),
            "solver_iterations": [solved.iterations],
        },
    }
    write_payload(args.out, record)
    print(f"infer: beta={solved.beta:.6g} residual={solved.residual:.3g} "
          f"({elapsed:.2f}s)", file=sys.stderr)
    return EXIT_OK


def cmd_network(args: argparse.Namespace) -> int:
    config = _resolved_config(args)
    counts = read_counts(args.counts)
    if counts.k != config.k:
        raise ValueError(f"counts file has k={counts.k}, config has k={config.k}")
    net = config.build_network()
    prior = PriorSpec.of(config.prior)
    constraint = config.constraint or ConstraintSpec.none(config.k)
    engine = config.build_engine()
    t0 = time.perf_counter()
    table = infer_all(net, counts, config.round, prior, constraint, engine)
    agents_payload = []
    iterations = []
    for agent in range(1, net.k + 1):
        if agent in table.entries:
            entry = table.entries[agent]
            entropy = me_entropy(entry.model)
            payload = {"agent": agent}
            payload.update(_agent_payload(entry.view, entry.model.solved,
                                          entry.summary, entropy))
            agents_payload.append(payload)
            iterations.append(entry.model.solved.iterations)
        else:
            agents_payload.append({"agent": agent, "error": str(table.errors[agent])})
    ok_agents = sorted(table.entries)
    divergences = [
        [
            belief_divergence(table, a, b) if a != b else 0.0
            for b in ok_agents
        ]
        for a in ok_agents
    ]
    elapsed = time.perf_counter() - t0
    record = {
        "config": config.to_payload(),
        "counts": list(counts.counts),
        "agents": agents_payload,
        "divergence_agents": ok_agents,
        "divergences": divergences,
        "meta": {
            "engine": engine.descriptor(),
            "solver_iterations": iterations,
        },
    }
    write_payload(args.out, record)
    print(f"network: {len(ok_agents)}/{net.k} agents converged ({elapsed:.2f}s)",
          file=sys.stderr)
    if not table.entries:
        failures = list(table.errors.values())
        if all(isinstance(e, InfeasibleConstraintError) for e in failures):
            return EXIT_INFEASIBLE
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_sweep_beta(args: argparse.Namespace) -> int:
    config = _resolved_config(args)
    counts = read_counts(args.counts)
    view = _parse_view(args.view, counts)
    prior = PriorSpec.of(config.prior)
    constraint = config.constraint or ConstraintSpec.none(config.k)
    engine = config.build_engine()
    if args.beta_step <= 0:
        raise ValueError("beta step must be > 0")
    if args.beta_max < args.beta_min:
        raise ValueError("beta range is empty")
    steps = int(round((args.beta_max - args.beta_min) / args.beta_step))
    rows = []
    for i in range(steps + 1):
        beta = args.beta_min + i * args.beta_step
        lz = log_zeta(prior, view, constraint, beta, engine)
        ef = expected_f(prior, view, constraint, beta, engine)
        rows.append({
            "beta": beta,
            "log_zeta": lz,
            "expected_f": ef,
            "s_me": lz - beta * ef,
        })
    write_sweep_csv(args.out, rows)
    print(f"sweep-beta: {len(rows)} rows -> {args.out}", file=sys.stderr)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "infer": cmd_infer,
        "network": cmd_network,
        "sweep-beta": cmd_sweep_beta,
    }
    try:
        return handlers[args.command](args)
    except InfeasibleConstraintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        # NodeBudgetError lands here too: an oversized grid is an input problem.
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
