"""Batch runs with JSONL logs, and reports built back from those logs.

Each run writes ``run_XX.jsonl``: one JSON object per line with a ``kind``
field (``run_start``, ``episode_start``, ``decision``, ``exchange``, ``step``,
``reflection``, ``plan``, ``lineage``, ``fallback``, ``episode_end``,
``abort``, ``run_end``) plus ``run`` and ``episode`` coordinates. Scripted and
random backends make the files byte-for-byte reproducible.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import statistics
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from gamebench.agent import DEFAULT_RETRY_BUDGET, run_episode
from gamebench.backend import BackendConfig, make_backend
from gamebench.envs import EnvConfig, Environment, episode_score, make_env
from gamebench.errors import BackendError, CorruptLog, ExperimentAborted, InvalidConfig
from gamebench.evaluation import (
    BehaviorMetrics,
    RunSummary,
    ScoreTables,
    behavior_metrics,
    load_weights,
    render_summary_markdown,
    score_tables,
    summarize_runs,
    write_csv,
)
from gamebench.records import EpisodeRecord, StepRecord
from gamebench.strategies import STRATEGIES, make_strategy, template_hashes

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SUMMARY_COLUMNS = ["model", "strategy", "game", "run", "run_seed", "episodes", "mean_score", "total_score", "mean_return", "aborted"]


def derive_seed(*parts: Any) -> int:
    """Stable 64-bit seed from a master seed and labels."""
    digest = hashlib.blake2b(repr(parts).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass
class ExperimentConfig:
    env: EnvConfig
    strategy: str = "base"
    backend: BackendConfig = field(default_factory=lambda: BackendConfig(kind="random"))
    runs: int = 3
    master_seed: int = 0
    output_dir: Path = Path("results")
    parallelism: int = 1
    retry_budget: int = DEFAULT_RETRY_BUDGET
    history_char_limit: int | None = None
    model_label: str | None = None
    exact_planner: bool = False
    # test hook: build the backend for a run from its environment and seed
    backend_factory: Callable[[Environment, int], Any] | None = None

    @property
    def label(self) -> str:
        return self.model_label or self.backend.label

    def validate(self) -> None:
        self.env.validate()
        if self.strategy not in STRATEGIES:
            raise InvalidConfig(f"unknown strategy {self.strategy!r}")
        if self.backend_factory is None:
            self.backend.validate()
            if self.backend.kind == "scripted" and not Path(self.backend.script_path).is_file():
                raise InvalidConfig(f"script file not found: {self.backend.script_path}")
        if self.runs < 1 or self.parallelism < 1:
            raise InvalidConfig("runs and parallelism must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise InvalidConfig("master_seed must be a 64-bit unsigned integer")
        if self.retry_budget < 0:
            raise InvalidConfig("retry_budget must be >= 0")

    def to_log(self) -> dict:
        # scheduling knobs stay out so serial and parallel logs match byte for byte
        backend = dataclasses.asdict(self.backend)
        backend.pop("max_concurrency", None)
        return {
            "env": dataclasses.asdict(self.env),
            "strategy": self.strategy,
            "backend": backend,
            "runs": self.runs,
            "master_seed": self.master_seed,
            "retry_budget": self.retry_budget,
            "history_char_limit": self.history_char_limit,
            "model": self.label,
            "exact_planner": self.exact_planner,
        }


class RunLog:
    """Append-only JSONL sink for one run."""

    def __init__(self, path: Path, run: int):
        self.path = path
        self.run = run
        self.episode: int | None = None
        self._fh = path.open("w", encoding="utf-8", newline="\n")

    def __call__(self, kind: str, payload: dict[str, Any]) -> None:
        record = {"kind": kind, "run": self.run, "episode": self.episode, **payload}
        self._fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")

    def close(self) -> None:
        self._fh.close()


@dataclass
class RunResult:
    run: int
    run_seed: int
    path: Path
    scores: list[float]
    returns: list[float]
    aborted: bool = False
    error: BaseException | None = None
    failed_episode: int | None = None


def run_single(config: ExperimentConfig, run: int) -> RunResult:
    run_seed = derive_seed(config.master_seed, run)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    sink = RunLog(out / f"run_{run:02d}.jsonl", run)
    result = RunResult(run, run_seed, sink.path, [], [])
    try:
        env = make_env(config.env)
        if config.backend_factory is not None:
            backend = config.backend_factory(env, run_seed)
        else:
            backend = make_backend(config.backend, seed=derive_seed(run_seed, "backend"))
        backend.on_exchange = lambda ex: sink("exchange", ex.to_dict())
        strategy = make_strategy(
            config.strategy,
            backend,
            np.random.default_rng(derive_seed(run_seed, "strategy")),
            exact_planner=config.exact_planner,
        )
        agent_rng = np.random.default_rng(derive_seed(run_seed, "agent"))
        sink(
            "run_start",
            {
                "schema": SCHEMA_VERSION,
                "run_seed": run_seed,
                "config": config.to_log(),
                "templates": template_hashes(),
            },
        )
        for episode in range(config.env.episodes):
            sink.episode = episode
            try:
                record = run_episode(
                    env,
                    strategy,
                    backend,
                    derive_seed(run_seed, "episode", episode),
                    episode,
                    rng=agent_rng,
                    retry_budget=config.retry_budget,
                    history_char_limit=config.history_char_limit,
                    sink=sink,
                )
            except BackendError as exc:
                result.aborted, result.error, result.failed_episode = True, exc, episode
                break
            result.scores.append(record.score.value)
            result.returns.append(record.cumulative_reward)
        sink.episode = None
        sink(
            "run_end",
            {
                "aborted": result.aborted,
                "episodes_completed": len(result.scores),
                "mean_score": statistics.fmean(result.scores) if result.scores else None,
                "error": f"{type(result.error).__name__}: {result.error}" if result.error else None,
            },
        )
    finally:
        sink.close()
    return result


def run_experiment(config: ExperimentConfig) -> Path:
    """Execute every run, write per-run logs and ``summary.csv``; return the output directory.

    Raises ``ExperimentAborted`` (after all logs are written) if any run hit a backend error.
    """
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = range(config.runs)
    if config.parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            results = list(pool.map(lambda r: run_single(config, r), runs))
    else:
        results = [run_single(config, r) for r in runs]
    rows = [
        {
            "model": config.label,
            "strategy": config.strategy,
            "game": config.env.game,
            "run": r.run,
            "run_seed": r.run_seed,
            "episodes": len(r.scores),
            "mean_score": _fmt(statistics.fmean(r.scores)) if r.scores else "",
            "total_score": _fmt(sum(r.scores)),
            "mean_return": _fmt(statistics.fmean(r.returns)) if r.returns else "",
            "aborted": r.aborted,
        }
        for r in results
    ]
    write_csv(out / "summary.csv", rows, SUMMARY_COLUMNS)
    failed = [r for r in results if r.aborted]
    if failed:
        first = failed[0]
        raise ExperimentAborted(
            f"run {first.run} aborted at episode {first.failed_episode}: {first.error}",
            run=first.run,
            episode=first.failed_episode,
            cause=first.error,
        )
    return out


def _fmt(value: float) -> str:
    return f"{value:.6g}"


# ---------------------------------------------------------------- reading logs

@dataclass
class RunLogData:
    path: Path
    model: str
    strategy: str
    game: str
    run: int
    episodes: list[EpisodeRecord]
    aborted: bool
    records: list[dict]


def read_run_log(path: str | Path) -> RunLogData:
    path = Path(path)
    records = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptLog(path, lineno, f"invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict) or "kind" not in rec:
                raise CorruptLog(path, lineno, "record without a 'kind' field")
            rec["_line"] = lineno
            records.append(rec)
    if not records or records[0]["kind"] != "run_start":
        raise CorruptLog(path, 1, "log does not begin with a run_start record")
    cfg = records[0].get("config", {})
    try:
        game = cfg["env"]["game"]
        strategy, model, run = cfg["strategy"], cfg["model"], records[0]["run"]
        horizon = cfg["env"]["steps_per_episode"]
    except (KeyError, TypeError):
        raise CorruptLog(path, 1, "run_start record lacks config fields") from None
    episodes: list[EpisodeRecord] = []
    current: EpisodeRecord | None = None
    aborted = False
    for rec in records[1:]:
        kind = rec["kind"]
        try:
            if kind == "episode_start":
                current = EpisodeRecord(episode_index=rec["episode"], game=game, horizon=horizon)
            elif kind == "step":
                current.append(StepRecord.from_dict(rec))
            elif kind == "episode_end":
                current.score = episode_score(game, current)
                episodes.append(current)
                current = None
            elif kind == "abort":
                aborted = True
        except (KeyError, TypeError, AttributeError, ValueError) as exc:
            raise CorruptLog(path, rec["_line"], f"bad {kind} record: {exc}") from None
    return RunLogData(path, model, strategy, game, run, episodes, aborted, records)


@dataclass
class Report:
    summaries: list[RunSummary]
    tables: ScoreTables | None
    behavior: dict[tuple[str, str, str], BehaviorMetrics]
    files: dict[str, Path] = field(default_factory=dict)


def report(
    log_dirs: list[str | Path],
    out_dir: str | Path | None = None,
    *,
    weights_path: str | Path | None = None,
    deltas: bool = True,
) -> Report:
    """Summaries, normalised deltas, dimension aggregates and behaviour metrics from run logs."""
    runs: list[RunLogData] = []
    for d in log_dirs:
        paths = sorted(Path(d).glob("*.jsonl"))
        if not paths:
            raise FileNotFoundError(f"no .jsonl logs in {d}")
        runs.extend(read_run_log(p) for p in paths)
    grouped: dict[tuple[str, str, str], list[RunLogData]] = defaultdict(list)
    for r in runs:
        if r.aborted or not r.episodes:
            log.warning("skipping aborted or empty run log %s", r.path)
            continue
        grouped[(r.model, r.strategy, r.game)].append(r)
    summaries = []
    raw = {}
    behavior = {}
    for cell, group in sorted(grouped.items()):
        means = [statistics.fmean(ep.score.value for ep in r.episodes) for r in group]
        summaries.append(summarize_runs(means, *cell))
        raw[cell] = statistics.fmean(means)
        behavior[cell] = behavior_metrics([ep for r in group for ep in r.episodes], cell[2])
    tables = score_tables(raw, load_weights(weights_path)) if deltas and raw else None
    result = Report(summaries, tables, behavior)
    if out_dir is not None:
        result.files = write_report(result, Path(out_dir))
    return result


def write_report(rep: Report, out: Path) -> dict[str, Path]:
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    files["summary"] = write_csv(
        out / "table_scores.csv",
        [
            {
                "model": s.model,
                "strategy": s.strategy,
                "game": s.game,
                "runs": len(s.per_run_means),
                "min": _fmt(s.min),
                "median": _fmt(s.median),
                "max": _fmt(s.max),
                "even_count": s.even_count,
            }
            for s in rep.summaries
        ],
        ["model", "strategy", "game", "runs", "min", "median", "max", "even_count"],
    )
    md = out / "table_scores.md"
    md.write_text(render_summary_markdown(rep.summaries), encoding="utf-8")
    files["summary_md"] = md
    if rep.tables is not None:
        t = rep.tables
        files["normalized"] = write_csv(
            out / "normalized.csv",
            [
                {"model": m, "strategy": s, "game": g, "raw": _fmt(t.raw[(m, s, g)]), "x": _fmt(t.x[(m, s, g)]), "delta": _fmt(t.delta[(m, s, g)])}
                for (m, s, g) in sorted(t.raw)
            ],
            ["model", "strategy", "game", "raw", "x", "delta"],
        )
        files["dimensions"] = write_csv(
            out / "dimensions.csv",
            [{"model": m, "strategy": s, "dimension": d, "Delta": _fmt(v)} for (m, s, d), v in sorted(t.aggregate.items())],
            ["model", "strategy", "dimension", "Delta"],
        )
    hanoi_rows, messenger_rows = [], []
    for (m, s, g), b in sorted(rep.behavior.items()):
        row = {"model": m, "strategy": s, "episodes": b.episodes}
        if g == "hanoi":
            hanoi_rows.append({**row, "G": _fmt(b.goal_rate), "D": _fmt(b.avg_disks), "I": _fmt(b.invalid_rate)})
        elif g == "messenger":
            messenger_rows.append({**row, "P": _fmt(b.pickup_rate), "G": _fmt(b.goal_rate), "C": _fmt(b.collision_rate)})
    if hanoi_rows:
        files["behavior_hanoi"] = write_csv(out / "behavior_hanoi.csv", hanoi_rows, ["model", "strategy", "episodes", "G", "D", "I"])
    if messenger_rows:
        files["behavior_messenger"] = write_csv(out / "behavior_messenger.csv", messenger_rows, ["model", "strategy", "episodes", "P", "G", "C"])
    return files
