"""The decision loop: prompt, query, parse, step, record."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from gamebench.backend import sha256
from gamebench.envs import Environment, episode_score
from gamebench.errors import ActionParseError, BackendError
from gamebench.prompting import FORMAT_REMINDER, PromptBundle, build_prompt, parse_action, render_history, render_step
from gamebench.records import EpisodeRecord, StepRecord
from gamebench.strategies import Strategy

log = logging.getLogger(__name__)

Sink = Callable[[str, dict[str, Any]], None]

DEFAULT_RETRY_BUDGET = 2


class EpisodeMemory:
    """Steps of the current episode with their rendered history tuples cached."""

    def __init__(self) -> None:
        self.steps: list[StepRecord] = []
        self.rendered: list[str] = []

    def clear(self) -> None:
        self.steps.clear()
        self.rendered.clear()

    def add(self, step: StepRecord) -> None:
        self.steps.append(step)
        self.rendered.append(render_step(step))

    def __len__(self) -> int:
        return len(self.steps)


@dataclass
class AgentDecision:
    action: str
    raw_response: str
    parse_attempts: int
    fallback_used: bool = False
    prompt: str = ""
    bundle: PromptBundle | None = None
    history_truncated: bool = False
    responses: list[str] = field(default_factory=list)


def make_bundle(env: Environment, memory: EpisodeMemory, augmentations: dict[str, str], history_char_limit: int | None = None) -> tuple[PromptBundle, bool]:
    history, truncated = render_history(memory.rendered, history_char_limit)
    bundle = PromptBundle(
        manual=env.render_manual(),
        objective=env.objective,
        history=history,
        observation=env.render_observation(),
        legal_actions=env.legal_actions,
        augmentations=augmentations,
    )
    return bundle, truncated


def decide(
    env: Environment,
    memory: EpisodeMemory,
    strategy: Strategy | None,
    backend,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
    *,
    rng: np.random.Generator | None = None,
    key=None,
    history_char_limit: int | None = None,
    sink: Sink | None = None,
) -> AgentDecision:
    """Query the backend for an action, re-asking up to ``retry_budget`` times.

    When every answer fails to parse, a uniformly random legal action is used.
    Backend errors propagate.
    """
    augmentations = strategy.augmentations() if strategy is not None else {}
    bundle, truncated = make_bundle(env, memory, augmentations, history_char_limit)
    prompt = build_prompt(bundle)
    legal = bundle.legal_actions
    responses = []
    query = prompt
    for attempt in range(1, retry_budget + 2):
        response = backend.complete(query, key=key)
        responses.append(response)
        try:
            action = parse_action(response, legal)
        except ActionParseError as exc:
            log.debug("unparseable answer on attempt %d: %s", attempt, exc)
            query = f"{prompt}\n{FORMAT_REMINDER}\n"
            continue
        return AgentDecision(action, response, attempt, False, prompt, bundle, truncated, responses)
    rng = rng if rng is not None else np.random.default_rng()
    action = legal[int(rng.integers(len(legal)))]
    log.info("falling back to random action %r after %d attempts", action, len(responses))
    if sink:
        sink("fallback", {"action": action, "attempts": len(responses)})
    return AgentDecision(action, responses[-1], len(responses), True, prompt, bundle, truncated, responses)


def run_episode(
    env: Environment,
    strategy: Strategy | None,
    backend,
    seed: int,
    episode_index: int = 0,
    *,
    rng: np.random.Generator | None = None,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
    history_char_limit: int | None = None,
    sink: Sink | None = None,
) -> EpisodeRecord:
    """Play one episode from reset to termination or truncation.

    On a backend error the partial record is flagged ``aborted``, attached to
    the exception as ``episode_record`` and the error re-raised.
    """
    rng = rng if rng is not None else np.random.default_rng(seed)
    name = strategy.name if strategy is not None else "base"
    emit = sink or (lambda kind, payload: None)
    memory = EpisodeMemory()
    record = EpisodeRecord(episode_index=episode_index, game=env.game, horizon=env.horizon)
    observation = env.reset(seed)
    if strategy is not None:
        strategy.start_episode(episode_index)
    emit("episode_start", {"episode_seed": seed, "observation": observation})
    t = 0
    try:
        while not env.done:
            t += 1
            if strategy is not None:
                strategy.before_step(env, memory.steps, key=(env.game, name, t, "plan"), sink=sink)
            decision = decide(
                env,
                memory,
                strategy,
                backend,
                retry_budget,
                rng=rng,
                key=(env.game, name, t),
                history_char_limit=history_char_limit,
                sink=sink,
            )
            bundle = decision.bundle
            emit(
                "decision",
                {
                    "step": t,
                    "prompt_hash": sha256(decision.prompt),
                    "manual": bundle.manual,
                    "objective": bundle.objective,
                    "observation": bundle.observation,
                    "legal_actions": bundle.legal_actions,
                    "augmentations": bundle.augmentations,
                    "history_truncated": decision.history_truncated,
                    "response": decision.raw_response,
                    "parse_attempts": decision.parse_attempts,
                    "fallback_used": decision.fallback_used,
                    "action": decision.action,
                },
            )
            state_text = env.render_observation()
            tr = env.step(decision.action)
            step = StepRecord(t, state_text, decision.action, tr.reward, tr.next_observation, tr.terminated, tr.truncated, tr.info)
            record.append(step)
            memory.add(step)
            emit("step", step.to_dict())
            if strategy is not None:
                strategy.after_step(env, memory.steps, key=(env.game, name, t, "reflection"), sink=sink)
        record.score = episode_score(env.game, record)
        if strategy is not None:
            strategy.end_episode(env, record, key=(env.game, name, episode_index, "oracle"), sink=sink)
    except BackendError as exc:
        record.aborted = True
        emit("abort", {"step": t, "error": f"{type(exc).__name__}: {exc}"})
        exc.episode_record = record
        raise
    emit(
        "episode_end",
        {
            "cumulative_reward": record.cumulative_reward,
            "score": record.score.value,
            "breakdown": record.score.breakdown,
            "steps": len(record.steps),
        },
    )
    return record
