"""Command-line entry point: ``qbmrl train | eval | summarize``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .gridworld import ConfigurationError
from .harness import CsvFormatError, evaluate_policy, run_experiment, summarize
from .network import TopologyError

log = logging.getLogger("qbmrl")

# errors that are the user's to fix; anything else is a bug and keeps its traceback
_USER_ERRORS = (ConfigError, ConfigurationError, CsvFormatError, TopologyError, FileNotFoundError,
                NotADirectoryError, IsADirectoryError)


def _train(args) -> int:
    config = load_config(args.config)
    if args.backend:
        config.backend = args.backend
    log.info("training %s/%s on %s for %d run(s)", config.variant, config.agent_mode, config.domain,
             config.nb_runs)
    out = run_experiment(config, args.out)
    log.info("wrote %s", out)
    return 0


def _eval(args) -> int:
    stats = evaluate_policy(args.checkpoint, args.domain, episodes=args.episodes, seed=args.seed)
    print(f"episodes={stats.rewards.size} median={stats.median:g} q1={stats.q1:g} "
          f"q3={stats.q3:g} min={stats.min:g} max={stats.max:g}")
    return 0


def _summarize(args) -> int:
    summaries = summarize(args.in_dir, args.out, tail=args.tail)
    for s in summaries:
        median = f"{s.eval_stats.median:g}" if s.eval_stats else "n/a"
        print(f"{s.label}: final_std={s.final_std:.2f} final_mean={s.final_mean:.2f} eval_median={median}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbmrl", description="Quantum Boltzmann machine Q-learning in grid worlds")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train agents and write CSV logs and checkpoints")
    train.add_argument("--config", required=True, help="key = value experiment file")
    train.add_argument("--out", required=True, help="output directory")
    train.add_argument("--backend", choices=["cython", "python"], default=None,
                       help="override the sampler backend")
    train.set_defaults(func=_train)

    ev = sub.add_parser("eval", help="greedy evaluation of a saved policy")
    ev.add_argument("--checkpoint", required=True, help="network file or run directory")
    ev.add_argument("--domain", required=True, help="built-in layout name or layout file")
    ev.add_argument("--episodes", type=int, default=100)
    ev.add_argument("--seed", type=int, default=0)
    ev.set_defaults(func=_eval)

    summ = sub.add_parser("summarize", help="aggregate experiment directories into CSV tables")
    summ.add_argument("--in", dest="in_dir", required=True)
    summ.add_argument("--out", required=True)
    summ.add_argument("--tail", type=int, default=100, help="episodes used for the final-reward std")
    summ.set_defaults(func=_summarize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "episodes", 1) < 1:
        parser.error("--episodes must be >= 1")
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"qbmrl {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
