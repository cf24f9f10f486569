"""Grid message delivery: pick up the message, bring it to the goal, avoid the enemy.

Cells are ``(row, col)``; north decreases the row, east increases the column.
The enemy is stationary.
"""

from __future__ import annotations

import copy
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from gamebench.envs.base import Environment, StepInfo, Transition
from gamebench.errors import EpisodeOver, InvalidConfig

Cell = tuple[int, int]

ACTION_LABELS = ["move north", "move south", "move east", "move west", "stay"]
DELTAS: list[Cell] = [(-1, 0), (1, 0), (0, 1), (0, -1), (0, 0)]
ROLES = ("message", "goal", "enemy")

PICKUP_REWARD = 1.0
DELIVERY_REWARD = 1.0
PENALTY = -1.0
SHAPED_PICKUP = 10.0
SHAPED_DELIVERY = 50.0
CLOSER_BONUS = 0.5


@lru_cache(maxsize=None)
def load_lexicon(path: str | None = None) -> dict[str, tuple[str, ...]]:
    """Read ``role<TAB>surface_name`` lines. The first name listed per role is its literal name."""
    if path is None:
        text = resources.files("gamebench.data").joinpath("lexicon.tsv").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    lexicon: dict[str, list[str]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            role, name = line.split("\t")
        except ValueError:
            raise InvalidConfig(f"lexicon line {lineno}: expected role<TAB>surface_name") from None
        lexicon.setdefault(role.strip(), []).append(name.strip())
    missing = [r for r in ROLES if len(lexicon.get(r, ())) < 4]
    if missing:
        raise InvalidConfig(f"lexicon needs a literal name and at least 3 synonyms for {missing}")
    return {role: tuple(names) for role, names in lexicon.items()}


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


@dataclass
class MessengerState:
    grid_size: Cell
    agent_pos: Cell
    enemy_pos: Cell
    message_pos: Cell | None
    goal_pos: Cell
    lexicon: dict[str, str]
    horizon: int = 10
    carrying: bool = False
    delivered: bool = False
    collided: bool = False
    step: int = 0
    entity_order: list[str] = field(default_factory=lambda: list(ROLES))

    @property
    def ended(self) -> bool:
        return self.delivered or self.collided or self.step >= self.horizon

    def target(self) -> Cell:
        return self.goal_pos if self.carrying else self.message_pos

    def distance_to_target(self) -> int:
        return manhattan(self.agent_pos, self.target())

    def in_grid(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.grid_size[0] and 0 <= cell[1] < self.grid_size[1]


def bfs_distance(grid_size: Cell, start: Cell, end: Cell, blocked: set[Cell]) -> int | None:
    rows, cols = grid_size
    if start == end:
        return 0
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        (r, c), d = queue.popleft()
        for dr, dc in DELTAS[:4]:
            nxt = (r + dr, c + dc)
            if nxt in seen or nxt in blocked or not (0 <= nxt[0] < rows and 0 <= nxt[1] < cols):
                continue
            if nxt == end:
                return d + 1
            seen.add(nxt)
            queue.append((nxt, d + 1))
    return None


def solution_length(state: MessengerState) -> int | None:
    """Fewest moves to pick up and deliver the message without touching the enemy."""
    blocked = {state.enemy_pos}
    if state.carrying:
        return bfs_distance(state.grid_size, state.agent_pos, state.goal_pos, blocked)
    first = bfs_distance(state.grid_size, state.agent_pos, state.message_pos, blocked)
    second = bfs_distance(state.grid_size, state.message_pos, state.goal_pos, blocked)
    if first is None or second is None:
        return None
    return first + second


def messenger_shaped_reward(prev: MessengerState, nxt: MessengerState, base_event_reward: float) -> float:
    """Dense reward for one step, given the states before and after it.

    Event rewards replace the distance bonus on the step they happen.
    """
    if nxt.collided and not prev.collided:
        return PENALTY
    if nxt.carrying and not prev.carrying:
        return SHAPED_PICKUP
    if nxt.delivered and not prev.delivered:
        return SHAPED_DELIVERY
    reward = base_event_reward
    target = prev.target()
    if manhattan(nxt.agent_pos, target) < manhattan(prev.agent_pos, target):
        reward += CLOSER_BONUS
    return reward


def messenger_step(state: MessengerState, move: int, shaped: bool = False) -> Transition:
    if state.ended:
        raise EpisodeOver("messenger episode already ended")
    prev = copy.deepcopy(state)
    distance_before = state.distance_to_target()
    state.step += 1
    dr, dc = DELTAS[move]
    cell = (state.agent_pos[0] + dr, state.agent_pos[1] + dc)
    info = StepInfo(valid_move=state.in_grid(cell), distance_before=distance_before)
    base = 0.0
    if not info.valid_move:
        base = PENALTY
    else:
        state.agent_pos = cell
        if cell == state.enemy_pos:
            state.collided = info.collided = True
            base = PENALTY
        elif not state.carrying and cell == state.message_pos:
            state.carrying = info.picked_up = True
            state.message_pos = None
            base = PICKUP_REWARD
        elif state.carrying and cell == state.goal_pos:
            state.delivered = info.delivered = info.goal_reached = True
            base = DELIVERY_REWARD
    info.base_reward = base
    info.distance_to_target = state.distance_to_target()
    terminated = state.collided or state.delivered
    reward = messenger_shaped_reward(prev, state, base) if shaped else base
    return Transition(
        next_observation=render_messenger(state),
        reward=reward,
        terminated=terminated,
        truncated=not terminated and state.step >= state.horizon,
        info=info,
    )


def _relative(agent: Cell, other: Cell) -> str:
    dr, dc = other[0] - agent[0], other[1] - agent[1]
    if dr == dc == 0:
        return "at your position"
    parts = []
    if dr:
        n = abs(dr)
        parts.append(f"{n} step{'s' if n > 1 else ''} {'north' if dr < 0 else 'south'}")
    if dc:
        n = abs(dc)
        parts.append(f"{n} step{'s' if n > 1 else ''} {'west' if dc < 0 else 'east'}")
    return " and ".join(parts) + " of you"


def render_messenger(state: MessengerState) -> str:
    rows, cols = state.grid_size
    r, c = state.agent_pos
    lines = [
        f"You are at row {r}, column {c} of a {rows}x{cols} grid. "
        "Row 0 is the northern edge and column 0 is the western edge."
    ]
    positions = {"message": state.message_pos, "goal": state.goal_pos, "enemy": state.enemy_pos}
    for role in state.entity_order:
        if role == "message" and state.carrying:
            continue
        lines.append(f"The {state.lexicon[role]} is {_relative(state.agent_pos, positions[role])}.")
    if state.carrying:
        lines.append(f"You are carrying the {state.lexicon['message']}.")
    if state.delivered:
        lines.append(f"You delivered the {state.lexicon['message']}.")
    if state.collided:
        lines.append(f"You ran into the {state.lexicon['enemy']}.")
    return "\n".join(lines)


class MessengerEnv(Environment):
    game = "messenger"
    objective = "Pick up the message and deliver it to the goal without touching the enemy."
    max_layout_attempts = 10_000

    @property
    def action_labels(self) -> list[str]:
        return ACTION_LABELS

    def _draw_lexicon(self, rng: np.random.Generator) -> dict[str, str]:
        lexicon = load_lexicon()
        if not self.config.use_synonyms:
            return {role: lexicon[role][0] for role in ROLES}
        return {role: str(rng.choice(lexicon[role][1:])) for role in ROLES}

    def _new_state(self, rng: np.random.Generator) -> MessengerState:
        rows, cols = self.config.grid_size
        names = self._draw_lexicon(rng)
        order = [ROLES[i] for i in rng.permutation(3)]
        for _ in range(self.max_layout_attempts):
            cells = rng.choice(rows * cols, size=4, replace=False)
            agent, enemy, message, goal = (divmod(int(i), cols) for i in cells)
            state = MessengerState(
                grid_size=(rows, cols),
                agent_pos=agent,
                enemy_pos=enemy,
                message_pos=message,
                goal_pos=goal,
                lexicon=names,
                horizon=self.horizon,
                entity_order=order,
            )
            if not self.config.ensure_solvable:
                return state
            length = solution_length(state)
            if length is not None and length <= self.horizon:
                return state
        raise InvalidConfig(f"no solvable layout within {self.horizon} steps on a {rows}x{cols} grid")

    def _step(self, index: int) -> Transition:
        return messenger_step(self.state, index, shaped=self.config.reward_shaping)

    def render_observation(self) -> str:
        return render_messenger(self.state)

    def render_manual(self) -> str:
        rows, cols = self.config.grid_size
        if self.config.reward_shaping:
            rewards = (
                f"Picking up the message gives reward {SHAPED_PICKUP:g} and delivering it gives "
                f"reward {SHAPED_DELIVERY:g}. Every step that brings you closer to the message, or "
                f"to the goal while you carry the message, gives reward {CLOSER_BONUS:g}."
            )
        else:
            rewards = (
                f"Picking up the message gives reward {PICKUP_REWARD:g} and delivering it gives "
                f"reward {DELIVERY_REWARD:g}."
            )
        synonyms = (
            " The observation may call these objects by other names that mean the same thing."
            if self.config.use_synonyms
            else ""
        )
        return (
            f"You move on a {rows}x{cols} grid that holds a message, a goal and an enemy.{synonyms} "
            "Step onto the message to pick it up, then step onto the goal to deliver it. "
            "Touching the enemy ends the game with reward -1. The enemy does not move. "
            "Moving off the grid is an invalid move: you stay where you are and receive reward -1. "
            f"{rewards} You have {self.horizon} steps."
        )
