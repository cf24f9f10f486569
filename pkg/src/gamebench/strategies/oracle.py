"""Cross-episode heuristic evolution: a (1+1) evolution strategy over rule lists.

After the first episode the backend drafts an initial rule list from the
trajectory and its reflections. After every later episode one offspring is
proposed by a single add/remove/modify edit, chosen by the harness's seeded
generator; the offspring replaces the parent only on a strictly higher
episode return.
"""

from __future__ import annotations

import logging
import re
from dataclasses import asdict, dataclass, field
from typing import Hashable, Sequence

import numpy as np

from gamebench.errors import MutationRejected
from gamebench.prompting import render_history, render_step
from gamebench.strategies.templates import render_template

log = logging.getLogger(__name__)

OPERATORS = ("add", "remove", "modify")
OPERATOR_INSTRUCTIONS = {
    "add": "add one new heuristic.",
    "remove": "remove the one heuristic that helps least.",
    "modify": "rewrite one heuristic so that it becomes more useful.",
}
_BULLET = re.compile(r"^\s*(?:[-*•]+|\d+[.)]|\(\d+\))\s*")


@dataclass
class HeuristicSet:
    rules: list[str]
    fitness: float | None = None
    generation: int = 1
    fallback: bool = False

    def render(self) -> str:
        return "\n".join(f"{i}. {rule}" for i, rule in enumerate(self.rules, 1))


@dataclass
class LineageEntry:
    generation: int
    rules: list[str]
    fitness: float | None
    accepted: bool
    survivor_fitness: float
    operator: str | None = None
    note: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OracleState:
    parent: HeuristicSet | None = None
    pending_offspring: HeuristicSet | None = None
    pending_operator: str | None = None
    lineage: list[LineageEntry] = field(default_factory=list)


def split_rules(text: str) -> list[str]:
    """One rule per non-empty line, list bullets and numbering stripped."""
    rules = []
    for line in text.splitlines():
        rule = _BULLET.sub("", line).strip()
        if rule:
            rules.append(rule)
    return rules


def single_edit(parent: Sequence[str], child: Sequence[str]) -> str | None:
    """Name the one edit turning ``parent`` into ``child``, or ``None`` if it is not exactly one."""
    parent, child = list(parent), list(child)
    # strip the common prefix and suffix; one edit leaves at most one rule on each side
    head = 0
    while head < min(len(parent), len(child)) and parent[head] == child[head]:
        head += 1
    tail = 0
    while tail < min(len(parent), len(child)) - head and parent[-1 - tail] == child[-1 - tail]:
        tail += 1
    removed = len(parent) - head - tail
    added = len(child) - head - tail
    return {(0, 1): "add", (1, 0): "remove", (1, 1): "modify"}.get((removed, added))


def _trajectory(episode) -> str:
    return render_history([render_step(s) for s in episode.steps])[0]


def initialize_heuristics(
    first_episode,
    reflections: Sequence,
    backend,
    *,
    manual: str = "",
    objective: str = "",
    key: Hashable | None = None,
) -> HeuristicSet:
    if not first_episode.complete:
        raise ValueError("initial heuristics need a finished first episode")
    notes = "\n".join(f"- step {r.step_index}: {r.text}" for r in reflections) or "(none)"
    prompt = render_template(
        "oracle_init",
        MANUAL=manual,
        OBJECTIVE=objective,
        HISTORY=_trajectory(first_episode),
        REFLECTIONS=notes,
        RETURN=f"{first_episode.cumulative_reward:g}",
    )
    fitness = first_episode.cumulative_reward
    for attempt in range(2):
        rules = split_rules(backend.complete(prompt, key=key))
        if rules:
            return HeuristicSet(rules=rules, fitness=fitness, generation=1)
        log.debug("initial heuristics attempt %d produced no rules", attempt + 1)
    fallback = f"Keep the objective in mind: {objective}" if objective else "Keep the objective in mind."
    return HeuristicSet(rules=[fallback], fitness=fitness, generation=1, fallback=True)


def choose_operator(parent: HeuristicSet, rng: np.random.Generator) -> str:
    op = OPERATORS[int(rng.integers(len(OPERATORS)))]
    if op == "remove" and len(parent.rules) <= 1:
        allowed = ("add", "modify")
        op = allowed[int(rng.integers(len(allowed)))]
    return op


def propose_offspring(
    state: OracleState,
    last_episode,
    backend,
    rng: np.random.Generator,
    *,
    manual: str = "",
    objective: str = "",
    key: Hashable | None = None,
) -> HeuristicSet:
    """Draw an operator, ask for one edit and store the result as the pending offspring.

    Raises ``MutationRejected`` when two responses in a row are not a single edit.
    """
    if state.parent is None:
        raise ValueError("no parent heuristics yet")
    if state.pending_offspring is not None:
        raise ValueError("an offspring is already waiting for evaluation")
    parent = state.parent
    op = choose_operator(parent, rng)
    prompt = render_template(
        "oracle_mutate",
        MANUAL=manual,
        OBJECTIVE=objective,
        HISTORY=_trajectory(last_episode),
        RETURN=f"{last_episode.cumulative_reward:g}",
        HEURISTICS=parent.render(),
        OPERATOR_INSTRUCTION=OPERATOR_INSTRUCTIONS[op],
    )
    for attempt in range(2):
        rules = split_rules(backend.complete(prompt, key=key))
        edit = single_edit(parent.rules, rules)
        if rules and edit is not None:
            child = HeuristicSet(rules=rules, generation=parent.generation + 1)
            state.pending_offspring = child
            state.pending_operator = edit
            return child
        log.debug("mutation attempt %d (%s) was not a single edit", attempt + 1, op)
    raise MutationRejected(f"{op} mutation did not come back as exactly one rule edit")


def select_survivor(state: OracleState, offspring_fitness: float) -> HeuristicSet:
    """Keep the offspring only if it beat the parent; ties keep the parent."""
    child = state.pending_offspring
    if child is None:
        raise ValueError("no offspring to evaluate")
    child.fitness = float(offspring_fitness)
    accepted = child.fitness > state.parent.fitness
    if accepted:
        state.parent = child
    state.lineage.append(
        LineageEntry(
            generation=child.generation,
            rules=list(child.rules),
            fitness=child.fitness,
            accepted=accepted,
            survivor_fitness=state.parent.fitness,
            operator=state.pending_operator,
        )
    )
    state.pending_offspring = None
    state.pending_operator = None
    return state.parent


class Oracle:
    """Episode-boundary driver around :class:`OracleState`."""

    def __init__(self, backend, rng: np.random.Generator):
        self.backend = backend
        self.rng = rng
        self.state = OracleState()

    def active(self) -> HeuristicSet | None:
        """Rules to show during the coming episode; frozen until it ends."""
        return self.state.pending_offspring or self.state.parent

    def end_episode(self, episode, reflections, *, manual="", objective="", key=None, sink=None) -> None:
        state = self.state
        fitness = episode.cumulative_reward
        if state.parent is None:
            state.parent = initialize_heuristics(
                episode, reflections, self.backend, manual=manual, objective=objective, key=key
            )
            entry = LineageEntry(
                generation=1,
                rules=list(state.parent.rules),
                fitness=fitness,
                accepted=True,
                survivor_fitness=fitness,
                note="fallback_rule" if state.parent.fallback else None,
            )
            state.lineage.append(entry)
            self._emit(sink, entry)
        elif state.pending_offspring is not None:
            select_survivor(state, fitness)
            self._emit(sink, state.lineage[-1])
        try:
            propose_offspring(state, episode, self.backend, self.rng, manual=manual, objective=objective, key=key)
        except MutationRejected as exc:
            log.info("keeping parent heuristics: %s", exc)
            entry = LineageEntry(
                generation=state.parent.generation + 1,
                rules=list(state.parent.rules),
                fitness=None,
                accepted=False,
                survivor_fitness=state.parent.fitness,
                note="mutation_rejected",
            )
            state.lineage.append(entry)
            self._emit(sink, entry)

    @staticmethod
    def _emit(sink, entry: LineageEntry) -> None:
        if sink:
            sink("lineage", entry.to_dict())
