"""Short lookahead: elicit rollouts of up to three actions with estimated returns."""

from __future__ import annotations

import copy
import logging
import re
from dataclasses import dataclass, field
from typing import Hashable, Sequence

from gamebench.errors import ActionParseError, PlanParseFailure
from gamebench.prompting import parse_action
from gamebench.strategies.templates import render_template

log = logging.getLogger(__name__)

MAX_DEPTH = 3
_ARROW = re.compile(r"\s*(?:→|->|=>)\s*")
_NUMBER = re.compile(r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?")
_LEAD = re.compile(r"^\s*(?:[-*•]+|\d+[.)])\s+")


@dataclass
class Rollout:
    actions: list[str]
    estimate: float


@dataclass
class PlannerRecommendation:
    action: str
    rollouts: list[Rollout] = field(default_factory=list)
    rationale: str = ""

    def render(self) -> str:
        lines = [f"Recommended next action: {self.action}", "Simulated rollouts:"]
        lines += [f"- {' → '.join(r.actions)} = {r.estimate:g}" for r in self.rollouts]
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "action": self.action,
            "rollouts": [{"actions": r.actions, "estimate": r.estimate} for r in self.rollouts],
            "rationale": self.rationale,
        }


def parse_rollouts(text: str, legal_actions: Sequence[str]) -> list[Rollout]:
    """Read ``a1 → a2 = 3.0`` lines; lines with unknown actions or more than three steps are dropped."""
    rollouts = []
    for line in text.splitlines():
        if "=" not in line:
            continue
        left, _, right = line.rpartition("=")
        number = _NUMBER.search(right)
        if number is None:
            continue
        segments = [s for s in _ARROW.split(_LEAD.sub("", left).strip()) if s.strip()]
        if not 1 <= len(segments) <= MAX_DEPTH:
            continue
        try:
            actions = [parse_action(seg, legal_actions) for seg in segments]
        except ActionParseError:
            continue
        rollouts.append(Rollout(actions, float(number.group())))
    return rollouts


def recommend(rollouts: Sequence[Rollout], legal_actions: Sequence[str], rationale: str = "") -> PlannerRecommendation:
    """First action of the best rollout; ties go to the earliest legal action."""
    if not rollouts:
        raise PlanParseFailure("no usable rollouts")
    best = max(r.estimate for r in rollouts)
    firsts = {r.actions[0] for r in rollouts if r.estimate == best}
    action = next(a for a in legal_actions if a in firsts)
    return PlannerRecommendation(action=action, rollouts=list(rollouts), rationale=rationale)


def plan(
    current_state: str,
    manual: str,
    reflection,
    legal_actions: Sequence[str],
    backend,
    key: Hashable | None = None,
) -> PlannerRecommendation:
    if not legal_actions:
        raise ValueError("legal_actions must not be empty")
    example_seq = list(legal_actions[:2]) if len(legal_actions) > 1 else list(legal_actions)
    prompt = render_template(
        "planner",
        MANUAL=manual,
        STATE=current_state,
        REFLECTION=reflection.text if reflection is not None else "(none yet)",
        ACTIONS="\n".join(f"{i}. {a}" for i, a in enumerate(legal_actions, 1)),
        EXAMPLE=" → ".join(example_seq) + " = 1",
    )
    for attempt in range(2):
        response = backend.complete(prompt, key=key)
        rollouts = parse_rollouts(response, legal_actions)
        if rollouts:
            return recommend(rollouts, legal_actions, rationale=response.strip())
        log.debug("planner attempt %d gave no usable rollouts", attempt + 1)
    raise PlanParseFailure("planner response had no usable rollouts after one retry")


def exact_plan(env, depth: int = MAX_DEPTH) -> PlannerRecommendation:
    """Enumerate every action sequence up to ``depth`` on copies of ``env``.

    Uses the true environment dynamics, including its random generator, so it
    is only meant as a reference when testing the planning path.
    """
    rollouts: list[Rollout] = []

    def expand(node, prefix: list[str], total: float) -> None:
        for action in node.legal_actions:
            child = copy.deepcopy(node)
            ret = total + child.step(action).reward
            seq = prefix + [action]
            rollouts.append(Rollout(seq, ret))
            if len(seq) < depth and not child.done:
                expand(child, seq, ret)

    expand(env, [], 0.0)
    return recommend(rollouts, env.legal_actions, rationale="exact enumeration")
