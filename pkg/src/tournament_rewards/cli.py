"""Command-line entry points: reward computation, simulation, config validation, format checks.

Exit codes: 0 success, 1 input/validation error, 2 judge failure under the
fail fallback policy.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import sim
from .core import (
    ConfigError,
    SchemaError,
    RangeError,
    LengthMismatchError,
    TournamentConfig,
    load_query_group,
    load_tournament_config,
    validate_config,
    predicted_judge_calls,
    write_audit_log,
)
from .format import GrammarError, format_reward, parse_trace
from .judges import (
    ExhaustedRetriesError,
    MissingLatentError,
    OracleJudge,
    RemoteJudge,
    RemoteJudgeConfig,
    SyntheticJudge,
    TransportError,
)
from .rewards import DESIGNS, compute_group_rewards

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_JUDGE_ERROR = 2

_INPUT_ERRORS = (
    ConfigError,
    SchemaError,
    RangeError,
    LengthMismatchError,
    MissingLatentError,
    ValueError,
    OSError,
    json.JSONDecodeError,
)


def _build_judge(args: argparse.Namespace):
    if args.judge == "oracle":
        return OracleJudge()
    if args.judge == "synthetic":
        return SyntheticJudge(
            beta=args.beta,
            position_bonus=args.position_bonus,
            length_bonus=args.length_bonus,
        )
    config = RemoteJudgeConfig.from_env(fallback=args.fallback)
    return RemoteJudge(config)


def _cmd_reward(args: argparse.Namespace) -> int:
    group = load_query_group(args.group)
    config = None
    if args.config:
        config = load_tournament_config(args.config)
    elif args.design == "tournament":
        print("error: --design tournament requires --config", file=sys.stderr)
        return EXIT_INPUT_ERROR
    judge = _build_judge(args)
    result = compute_group_rewards(
        group,
        args.design,
        judge,
        tournament_config=config,
        seed=args.seed,
        answer_only=args.answer_only,
    )
    payload = {
        "design": result.design,
        "seed": args.seed,
        "judge": args.judge,
        "judge_calls": result.judge_calls,
        "rewards": [b.to_dict() for b in result.breakdowns],
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    if args.audit:
        write_audit_log(result.audit, args.audit)
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.scenario:
        with open(args.scenario, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if args.seed is not None:
            doc["seed"] = args.seed
        scenario = sim.scenario_from_dict(doc)
    else:
        scenario = sim.Scenario(seed=args.seed if args.seed is not None else 0)

    names = [name.strip() for name in args.designs.split(",") if name.strip()]
    specs = []
    for name in names:
        if name == "tournament":
            if args.config:
                config = load_tournament_config(args.config)
            else:
                config = TournamentConfig(
                    repeats=8,
                    group_size=2,
                    winners_per_group=1,
                    final_threshold=1,
                    seed=scenario.seed,
                )
            specs.append(sim.DesignSpec("tournament", tournament=config))
        else:
            specs.append(sim.DesignSpec(name))

    metrics = sim.run_scenario(scenario, specs, workers=args.workers)
    if args.out:
        sim.write_metrics_csv(metrics, scenario, args.out, include_timings=args.timings)
    if args.json:
        sim.write_metrics_json(metrics, scenario, args.json, include_timings=args.timings)
    if not args.out and not args.json:
        for m in metrics:
            print(json.dumps(m.to_dict(args.timings)))
    return EXIT_OK


def _cmd_validate_config(args: argparse.Namespace) -> int:
    config = load_tournament_config(args.config)
    validated = validate_config(config, args.group_size)
    print(
        json.dumps(
            {
                "valid": True,
                "k": validated.k,
                "rounds": validated.num_rounds,
                "round_sizes": list(validated.round_sizes),
                "judge_calls": predicted_judge_calls(validated),
            },
            indent=2,
        )
    )
    return EXIT_OK


def _cmd_check_format(args: argparse.Namespace) -> int:
    all_valid = True
    for path in args.files:
        text = Path(path).read_text(encoding="utf-8")
        reward = format_reward(text)
        line = f"{path}\t{reward}"
        if reward == 0 and args.explain:
            try:
                parse_trace(text)
            except GrammarError as exc:
                line += f"\t{exc.rule}@{exc.position}"
        print(line)
        all_valid = all_valid and reward == 1
    return EXIT_OK if all_valid else EXIT_INPUT_ERROR


class _Parser(argparse.ArgumentParser):
    # Usage mistakes are input errors (exit 1); exit 2 is reserved for judge failures.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT_ERROR)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="tournament-rewards",
        description="Group-wise reward computation from judge tournaments, plus baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    reward = sub.add_parser("reward", help="compute rewards for one query group")
    reward.add_argument("--group", required=True, help="query-group JSON file")
    reward.add_argument("--design", required=True, choices=DESIGNS)
    reward.add_argument("--config", help="tournament config JSON file")
    reward.add_argument("--judge", default="oracle", choices=("oracle", "synthetic", "remote"))
    reward.add_argument("--seed", type=int, default=None)
    reward.add_argument("--out", help="write the reward payload to this path")
    reward.add_argument("--audit", help="write the judge-call audit (JSONL) to this path")
    reward.add_argument("--answer-only", action="store_true", help="judge only answer blocks")
    reward.add_argument("--beta", type=float, default=2.0, help="synthetic judge sharpness")
    reward.add_argument("--position-bonus", type=float, default=0.0)
    reward.add_argument("--length-bonus", type=float, default=0.0)
    reward.add_argument("--fallback", default="fail", choices=("fail", "lowest_index"))
    reward.set_defaults(func=_cmd_reward)

    simulate = sub.add_parser("simulate", help="run the reward-design simulation harness")
    simulate.add_argument("--scenario", help="scenario JSON file (defaults when omitted)")
    simulate.add_argument(
        "--designs",
        default="implicit,explicit,pairwise,tournament",
        help="comma-separated design list",
    )
    simulate.add_argument("--config", help="tournament config for the tournament design")
    simulate.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    simulate.add_argument("--out", help="CSV output path")
    simulate.add_argument("--json", help="JSON summary output path")
    simulate.add_argument("--timings", action="store_true", help="include wall-time columns")
    simulate.add_argument("--workers", type=int, default=1)
    simulate.set_defaults(func=_cmd_simulate)

    validate = sub.add_parser("validate-config", help="check a tournament config for a group size")
    validate.add_argument("--config", required=True)
    validate.add_argument("--group-size", type=int, required=True)
    validate.set_defaults(func=_cmd_validate_config)

    check = sub.add_parser("check-format", help="report the format reward for rollout files")
    check.add_argument("files", nargs="+")
    check.add_argument("--explain", action="store_true", help="show the first grammar violation")
    check.set_defaults(func=_cmd_check_format)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ExhaustedRetriesError, TransportError) as exc:
        print(f"judge error: {exc}", file=sys.stderr)
        return EXIT_JUDGE_ERROR
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
