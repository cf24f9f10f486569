"""Prompt assembly and action parsing.

Section markers are fixed uppercase strings so prompts can be grepped and
replayed byte-for-byte from a log.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from gamebench.envs.base import fmt_reward
from gamebench.errors import AmbiguousAction, NoActionFound

SECTION_ORDER = ("MANUAL", "OBJECTIVE", "HISTORY", "REFLECTION", "HEURISTICS", "PLAN", "OBSERVATION", "ACTIONS")
AUGMENTATIONS = ("REFLECTION", "HEURISTICS", "PLAN")
EMPTY_HISTORY = "(no steps yet)"
ANSWER_INSTRUCTION = (
    "Choose the next action. Reply with exactly one action label from the ACTIONS list, "
    "copied verbatim, on the last line of your answer."
)
FORMAT_REMINDER = (
    "Your previous answer did not name exactly one action. "
    "Reply with a single action label from the ACTIONS list and nothing else."
)


def marker(name: str) -> str:
    return f"=== {name} ==="


@dataclass
class PromptBundle:
    manual: str
    objective: str
    history: str
    observation: str
    legal_actions: list[str]
    augmentations: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.legal_actions:
            raise ValueError("legal_actions must not be empty")
        unknown = set(self.augmentations) - set(AUGMENTATIONS)
        if unknown:
            raise ValueError(f"unknown augmentation sections {sorted(unknown)}")


def render_step(step) -> str:
    return (
        f"[t={step.t}]\n"
        f"state:\n{step.state}\n"
        f"action: {step.action}\n"
        f"reward: {fmt_reward(step.reward)}\n"
        f"next state:\n{step.next_state}"
    )


def render_history(rendered_steps: Sequence[str], char_limit: int | None = None) -> tuple[str, bool]:
    """Join rendered tuples oldest first, dropping the oldest ones past ``char_limit``.

    Returns the text and whether anything was dropped.
    """
    if not rendered_steps:
        return EMPTY_HISTORY, False
    kept = list(rendered_steps)
    text = "\n\n".join(kept)
    if char_limit is None or len(text) <= char_limit:
        return text, False
    while len(kept) > 1 and len(text) > char_limit:
        kept.pop(0)
        dropped = len(rendered_steps) - len(kept)
        text = f"({dropped} earlier steps omitted)\n\n" + "\n\n".join(kept)
    return text, True


def build_prompt(bundle: PromptBundle) -> str:
    sections = [
        (marker("MANUAL"), bundle.manual),
        (marker("OBJECTIVE"), bundle.objective),
        (marker("HISTORY"), bundle.history or EMPTY_HISTORY),
    ]
    for name in AUGMENTATIONS:
        if name in bundle.augmentations:
            sections.append((marker(name), bundle.augmentations[name]))
    sections.append((marker("OBSERVATION"), bundle.observation))
    actions = "\n".join(f"{i}. {label}" for i, label in enumerate(bundle.legal_actions, 1))
    sections.append((marker("ACTIONS"), actions))
    body = "\n\n".join(f"{head}\n{text}" for head, text in sections)
    return f"{body}\n\n{ANSWER_INSTRUCTION}\n"


def history_entries(prompt: str) -> int:
    """Number of tuples in a prompt's HISTORY section."""
    start = prompt.index(marker("HISTORY"))
    end = min(prompt.index(marker(n), start + 1) for n in SECTION_ORDER[3:] if marker(n) in prompt[start + 1:])
    return len(re.findall(r"^\[t=\d+\]$", prompt[start:end], flags=re.M))


_INDEX = re.compile(r"\b(?:action|option|choice)\s*(?:#|no\.?|number)?\s*(\d+)\b", re.I)
_BARE_INDEX = re.compile(r"^\s*(\d+)\s*[.)]?\s*$")


def _normalise(text: str) -> str:
    return text.strip().strip("\"'`*").strip().rstrip(".!").strip().lower()


def _substring_matches(text: str, labels: Sequence[str]) -> list[str]:
    lowered = text.lower()
    found = [label for label in labels if label.lower() in lowered]
    # a label contained in a longer matching label is not a separate candidate
    return [a for a in found if not any(a != b and a.lower() in b.lower() for b in found)]


def parse_action(response: str, legal_actions: Sequence[str]) -> str:
    """Map a model response onto one legal action label.

    Tries an exact match, then a unique case-insensitive label mention on the
    last non-empty line and then anywhere, then a unique ``action N`` index.
    """
    if not legal_actions:
        raise ValueError("legal_actions must not be empty")
    lines = [ln for ln in response.splitlines() if ln.strip()]
    if not lines:
        raise NoActionFound("empty response")
    last = lines[-1]
    by_norm = {label.lower(): label for label in legal_actions}
    for candidate in (response, last):
        if candidate.strip() in legal_actions:
            return candidate.strip()
        hit = by_norm.get(_normalise(candidate))
        if hit is not None:
            return hit
    for text in (last, response):
        matches = _substring_matches(text, legal_actions)
        if len(matches) == 1:
            return matches[0]
        if len(matches) > 1:
            raise AmbiguousAction(matches)
    indices = {int(m) for m in _INDEX.findall(response)}
    bare = _BARE_INDEX.match(last)
    if bare:
        indices.add(int(bare.group(1)))
    indices = {i for i in indices if 1 <= i <= len(legal_actions)}
    if len(indices) == 1:
        return legal_actions[indices.pop() - 1]
    if len(indices) > 1:
        raise AmbiguousAction([legal_actions[i - 1] for i in sorted(indices)])
    raise NoActionFound(f"no action label found in response: {response[:80]!r}")
