"""Score tables: run summaries, per-game min-max normalisation, strategy deltas,
weighted challenge-dimension aggregates and behaviour metrics.

Cells are keyed by tuples: ``(model, strategy, game)`` for scores and
``(model, strategy, dimension)`` for aggregates.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from gamebench.errors import EmptyInput, MissingBaseline, MixedGames

log = logging.getLogger(__name__)

BASE = "base"

Cell = tuple[str, str, str]


@dataclass
class RunSummary:
    per_run_means: list[float]
    min: float
    median: float
    max: float
    even_count: bool = False
    model: str = ""
    strategy: str = ""
    game: str = ""


def summarize_runs(per_run_means: Sequence[float], model: str = "", strategy: str = "", game: str = "") -> RunSummary:
    """Extremes and middle of the ranked run means (lower middle for an even count)."""
    if len(per_run_means) == 0:
        raise EmptyInput("no run means to summarise")
    ranked = sorted(float(v) for v in per_run_means)
    n = len(ranked)
    return RunSummary(
        per_run_means=[float(v) for v in per_run_means],
        min=ranked[0],
        median=ranked[(n - 1) // 2],
        max=ranked[-1],
        even_count=n % 2 == 0,
        model=model,
        strategy=strategy,
        game=game,
    )


def minmax_normalize(values: Sequence[float]) -> tuple[np.ndarray, bool]:
    """Scale to [0, 1]. A constant input maps to zeros and is flagged degenerate."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise EmptyInput("nothing to normalise")
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return np.zeros_like(arr), True
    return (arr - lo) / (hi - lo), False


def normalize_per_game(raw: Mapping[Cell, float]) -> tuple[dict[Cell, float], dict[str, bool]]:
    by_game: dict[str, list[Cell]] = defaultdict(list)
    for cell in raw:
        by_game[cell[2]].append(cell)
    x: dict[Cell, float] = {}
    degenerate: dict[str, bool] = {}
    for game, cells in by_game.items():
        scaled, flag = minmax_normalize([raw[c] for c in cells])
        degenerate[game] = flag
        x.update(zip(cells, scaled.tolist()))
    return x, degenerate


def strategy_delta(x: Mapping[Cell, float], base: str = BASE) -> dict[Cell, float]:
    """Subtract each model's base-strategy cell, game by game."""
    delta = {}
    for (m, s, g), value in x.items():
        ref = (m, base, g)
        if ref not in x:
            raise MissingBaseline(f"no {base!r} strategy cell for model {m!r} on game {g!r}")
        delta[(m, s, g)] = value - x[ref]
    return delta


@dataclass
class WeightMatrix:
    games: list[str]
    dimensions: list[str]
    w: np.ndarray  # shape (games, dimensions)

    def weight(self, game: str, dimension: str) -> float:
        if game not in self.games:
            return 0.0
        return float(self.w[self.games.index(game), self.dimensions.index(dimension)])


def load_weights(path: str | Path | None = None) -> WeightMatrix:
    """Read a weight CSV: header of dimension labels, one row per game; ``#`` lines are comments."""
    if path is None:
        text = resources.files("gamebench.data").joinpath("weights.csv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    header, body = rows[0], rows[1:]
    dims = [h.strip() for h in header[1:]]
    games = [r[0].strip() for r in body]
    w = np.array([[float(v) for v in r[1:]] for r in body], dtype=float)
    if w.shape != (len(games), len(dims)):
        raise ValueError("weight rows must have one value per dimension")
    if (w < 0).any():
        raise ValueError("weights must be non-negative")
    return WeightMatrix(games, dims, w)


def aggregate_dimensions(delta: Mapping[Cell, float], weights: WeightMatrix) -> tuple[dict[Cell, float], list[str]]:
    """Weighted mean of game deltas per challenge dimension.

    Games a (model, strategy) pair was not run on carry zero weight. Dimensions
    whose total weight is zero are omitted and returned in the second element.
    """
    per_pair: dict[tuple[str, str], dict[str, float]] = defaultdict(dict)
    for (m, s, g), value in delta.items():
        per_pair[(m, s)][g] = value
    out: dict[Cell, float] = {}
    omitted: set[str] = set()
    for (m, s), games in per_pair.items():
        for d in weights.dimensions:
            ws = [(weights.weight(g, d), v) for g, v in games.items()]
            total = sum(w for w, _ in ws)
            if total == 0:
                omitted.add(d)
                continue
            out[(m, s, d)] = sum(w * v for w, v in ws) / total
    if omitted:
        log.warning("dimensions with zero total weight omitted: %s", sorted(omitted))
    return out, sorted(omitted)


@dataclass
class ScoreTables:
    raw: dict[Cell, float]
    x: dict[Cell, float]
    delta: dict[Cell, float]
    aggregate: dict[Cell, float]
    weights: WeightMatrix
    degenerate_games: list[str] = field(default_factory=list)
    omitted_dimensions: list[str] = field(default_factory=list)


def score_tables(raw: Mapping[Cell, float], weights: WeightMatrix | None = None, base: str = BASE) -> ScoreTables:
    weights = weights if weights is not None else load_weights()
    x, degenerate = normalize_per_game(raw)
    delta = strategy_delta(x, base)
    aggregate, omitted = aggregate_dimensions(delta, weights)
    return ScoreTables(
        raw=dict(raw),
        x=x,
        delta=delta,
        aggregate=aggregate,
        weights=weights,
        degenerate_games=sorted(g for g, flag in degenerate.items() if flag),
        omitted_dimensions=omitted,
    )


@dataclass
class BehaviorMetrics:
    game: str
    episodes: int
    goal_rate: float | None = None
    avg_disks: float | None = None
    invalid_rate: float | None = None
    pickup_rate: float | None = None
    collision_rate: float | None = None


def behavior_metrics(episodes: Iterable, game: str) -> BehaviorMetrics:
    """Percentages of episodes reaching the goal, picking up, colliding; mean disks on
    the target rod; percentage of invalid steps. Only the ones meaningful for ``game``
    are filled in.
    """
    episodes = list(episodes)
    if not episodes:
        raise EmptyInput("no episodes")
    games = {ep.game for ep in episodes}
    if games != {game}:
        raise MixedGames(f"expected only {game!r} episodes, got {sorted(games)}")
    n = len(episodes)
    out = BehaviorMetrics(game=game, episodes=n)
    if game not in ("hanoi", "messenger"):
        return out

    def pct(flag: str) -> float:
        return 100.0 * sum(any(getattr(s.info, flag) for s in ep.steps) for ep in episodes) / n

    steps = [s for ep in episodes for s in ep.steps]
    invalid = sum(1 for s in steps if s.info.valid_move is False)
    out.goal_rate = pct("goal_reached")
    out.invalid_rate = 100.0 * invalid / len(steps) if steps else 0.0
    if game == "hanoi":
        out.avg_disks = float(np.mean([ep.steps[-1].info.disks_on_target if ep.steps else 0 for ep in episodes]))
    else:
        out.pickup_rate = pct("picked_up")
        out.collision_rate = pct("collided")
    return out


GAME_TITLES = {"bandit": "Bandit", "rps": "Rock Paper Scissors", "hanoi": "Hanoi", "messenger": "Messenger"}
STRATEGY_TITLES = {
    "base": "Base",
    "reflection": "Reflection",
    "reflection_oracle": "Reflection + Oracle",
    "reflection_planner": "Reflection + Planner",
}


def render_summary_markdown(summaries: Sequence[RunSummary], games: Sequence[str] | None = None) -> str:
    """Model | Method | min med max per game."""
    games = list(games) if games else sorted({s.game for s in summaries}, key=lambda g: list(GAME_TITLES).index(g) if g in GAME_TITLES else 99)
    cells = {(s.model, s.strategy, s.game): s for s in summaries}
    rows = sorted({(s.model, s.strategy) for s in summaries}, key=lambda r: (r[0], list(STRATEGY_TITLES).index(r[1]) if r[1] in STRATEGY_TITLES else 99))
    head = "| Model | Method | " + " | ".join(f"{GAME_TITLES.get(g, g)} min | med | max" for g in games) + " |"
    rule = "|---|---|" + "---|---|---|" * len(games)
    lines = [head, rule]
    for m, s in rows:
        parts = []
        for g in games:
            c = cells.get((m, s, g))
            parts.append(" | ".join(f"{v:.2f}" for v in (c.min, c.median, c.max)) if c else " - | - | - ")
        lines.append(f"| {m} | {STRATEGY_TITLES.get(s, s)} | " + " | ".join(parts) + " |")
    return "\n".join(lines) + "\n"


def write_csv(path: str | Path, rows: Iterable[Mapping], columns: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k) for k in columns})
    return path
