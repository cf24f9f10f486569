"""Command line: ``gamebench run`` and ``gamebench report``.

Config files are flat ``key = value`` text; keys are the long flag names
without dashes (``game = hanoi``, ``reward-shaping = true``). Flags given on
the command line win over the file.

Exit codes: 0 success, 2 config error, 3 backend error, 4 log corruption.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from gamebench.backend import BackendConfig
from gamebench.envs import EnvConfig
from gamebench.errors import CorruptLog, ExperimentAborted, InvalidConfig, MissingBaseline
from gamebench.experiment import ExperimentConfig, report, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_BACKEND, EXIT_CORRUPT = 0, 2, 3, 4

# flag name -> (type, default)
RUN_OPTIONS: dict[str, tuple[type, object]] = {
    "game": (str, None),
    "strategy": (str, "base"),
    "backend": (str, "random"),
    "endpoint": (str, ""),
    "model": (str, ""),
    "script": (str, ""),
    "episodes": (int, 20),
    "steps": (int, None),
    "runs": (int, 3),
    "seed": (int, 0),
    "disks": (int, 3),
    "reward-shaping": (bool, False),
    "show-valid-actions": (bool, False),
    "no-synonyms": (bool, False),
    "out": (str, "results"),
    "parallelism": (int, 1),
    "temperature": (float, 0.7),
    "max-tokens": (int, 512),
    "timeout": (float, 60.0),
    "max-retries": (int, 3),
    "retry-budget": (int, 2),
    "history-chars": (int, None),
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _to_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise InvalidConfig(f"not a boolean: {text!r}")


def read_config_file(path: str | Path) -> dict[str, object]:
    values: dict[str, object] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in RUN_OPTIONS:
            raise InvalidConfig(f"{path}:{lineno}: unknown key {key!r}")
        kind = RUN_OPTIONS[key][0]
        try:
            values[key] = _to_bool(value) if kind is bool else kind(value)
        except ValueError:
            raise InvalidConfig(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gamebench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="play runs x episodes and write JSONL logs")
    run.add_argument("--config", help="flat key = value config file")
    for name, (kind, _) in RUN_OPTIONS.items():
        if kind is bool:
            run.add_argument(f"--{name}", action="store_const", const=True, default=None)
        else:
            run.add_argument(f"--{name}", type=kind, default=None)

    rep = sub.add_parser("report", help="build score tables from run logs")
    rep.add_argument("log_dirs", nargs="+")
    rep.add_argument("--out", default="report")
    rep.add_argument("--weights", help="weight matrix CSV (default: bundled calibration data)")
    rep.add_argument("--no-deltas", action="store_true", help="skip normalised deltas and dimension aggregates")
    return parser


def resolve_run_options(args: argparse.Namespace) -> dict[str, object]:
    values = {name: default for name, (_, default) in RUN_OPTIONS.items()}
    if args.config:
        values.update(read_config_file(args.config))
    for name in RUN_OPTIONS:
        given = getattr(args, name.replace("-", "_"))
        if given is not None:
            values[name] = given
    return values


def experiment_from_options(opts: dict[str, object]) -> ExperimentConfig:
    if not opts["game"]:
        raise InvalidConfig("--game is required")
    env = EnvConfig(
        game=opts["game"],
        steps_per_episode=opts["steps"],
        episodes=opts["episodes"],
        hanoi_disks=opts["disks"],
        reward_shaping=opts["reward-shaping"],
        show_valid_actions=opts["show-valid-actions"],
        use_synonyms=not opts["no-synonyms"],
        seed=opts["seed"],
    )
    backend = BackendConfig(
        kind=opts["backend"],
        endpoint_url=opts["endpoint"],
        model_name=opts["model"],
        temperature=opts["temperature"],
        max_tokens=opts["max-tokens"],
        request_timeout=opts["timeout"],
        max_retries=opts["max-retries"],
        script_path=opts["script"],
        max_concurrency=max(1, opts["parallelism"]),
    )
    return ExperimentConfig(
        env=env,
        strategy=opts["strategy"],
        backend=backend,
        runs=opts["runs"],
        master_seed=opts["seed"],
        output_dir=Path(opts["out"]),
        parallelism=opts["parallelism"],
        retry_budget=opts["retry-budget"],
        history_char_limit=opts["history-chars"],
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        try:
            config = experiment_from_options(resolve_run_options(args))
            out = run_experiment(config)
        except InvalidConfig as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except ExperimentAborted as exc:
            print(f"backend error: {exc}", file=sys.stderr)
            return EXIT_BACKEND
        except OSError as exc:
            print(f"io error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"logs written to {out}")
        return EXIT_OK
    try:
        rep = report(args.log_dirs, args.out, weights_path=args.weights, deltas=not args.no_deltas)
    except CorruptLog as exc:
        print(f"corrupt log: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except (MissingBaseline, FileNotFoundError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in rep.files.values():
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
