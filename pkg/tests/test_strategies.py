from __future__ import annotations

import re

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gamebench.agent import run_episode
from gamebench.backend import Backend, ScriptedBackend
from gamebench.envs import EnvConfig, HanoiState, make_env
from gamebench.errors import BackendUnavailable, MutationRejected, PlanParseFailure
from gamebench.prompting import marker
from gamebench.records import EpisodeRecord, StepRecord
from gamebench.strategies import (
    HeuristicSet,
    Oracle,
    OracleState,
    Reflector,
    Rollout,
    Strategy,
    exact_plan,
    initialize_heuristics,
    parse_rollouts,
    plan,
    propose_offspring,
    reflect,
    select_survivor,
    single_edit,
    split_rules,
)
from gamebench.strategies.oracle import choose_operator
from gamebench.strategies.planner import recommend

from oracles import ALL_MOVES, hanoi_distance, hanoi_label, hanoi_move, hanoi_rods, one_edit_apart


class FixedDraws:
    """Stands in for a numpy Generator whose ``integers`` returns scripted values."""

    def __init__(self, *values):
        self.values = list(values)

    def integers(self, n):
        return self.values.pop(0) % n


class DownBackend(Backend):
    def complete(self, prompt, key=None):
        self.calls += 1
        raise BackendUnavailable("http://nowhere unavailable")


def episode_with_return(total: float, n_steps: int = 1) -> EpisodeRecord:
    rec = EpisodeRecord(0, "bandit", n_steps)
    for t in range(1, n_steps + 1):
        r = total if t == n_steps else 0.0
        rec.append(StepRecord(t, "s", "pull slot machine 1", r, "s2", truncated=t == n_steps))
    return rec


# ------------------------------------------------------------------ reflection

def test_reflect_passes_text_through():
    steps = episode_with_return(1.0).steps
    r = reflect(steps, "win", ScriptedBackend(["avoid repeating arm 1"]), episode_index=2)
    assert (r.text, r.episode_index, r.step_index) == ("avoid repeating arm 1", 2, 1)


def test_reflect_needs_a_step():
    backend = ScriptedBackend(["x"])
    with pytest.raises(ValueError):
        reflect([], "win", backend)
    assert backend.calls == 0


def test_reflector_resets_per_episode_and_survives_outage():
    steps = episode_with_return(1.0).steps
    rf = Reflector()
    rf.update(steps, "win", ScriptedBackend(["first"]))
    assert rf.current.text == "first"
    events = []
    rf.update(steps, "win", DownBackend(), sink=lambda k, p: events.append(k))
    assert rf.current.text == "first" and events == ["reflection_skipped"]
    rf.start_episode(1)
    assert rf.current is None and rf.episode_log == []


# ------------------------------------------------------------------ oracle

def test_split_rules_strips_bullets():
    assert split_rules("- a\n\n2. b\n* c\n(4) d\n") == ["a", "b", "c", "d"]


@pytest.mark.parametrize(
    "child,edit",
    [
        (["a", "b", "c", "d"], "add"),
        (["x", "a", "b", "c"], "add"),
        (["a", "c"], "remove"),
        (["a", "B", "c"], "modify"),
        (["a", "b", "c"], None),
        (["x", "y", "z"], None),
        (["a", "b"], "remove"),
        (["b", "a", "c"], None),
        (["a", "x", "y", "c"], None),
    ],
)
def test_single_edit(child, edit):
    parent = ["a", "b", "c"]
    assert single_edit(parent, child) == edit
    assert (edit is not None) == one_edit_apart(parent, child)


@given(
    parent=st.lists(st.sampled_from("abcdef"), min_size=1, max_size=5),
    child=st.lists(st.sampled_from("abcdef"), max_size=6),
)
def test_single_edit_agrees_with_reference(parent, child):
    assert (single_edit(parent, child) is not None) == one_edit_apart(parent, child)


def test_initialize_two_rules():
    ep = episode_with_return(12.0)
    hs = initialize_heuristics(ep, [], ScriptedBackend(["- prefer arm 2\n- switch after two losses"]))
    assert hs.rules == ["prefer arm 2", "switch after two losses"]
    assert hs.generation == 1 and hs.fitness == 12.0 and not hs.fallback


def test_initialize_falls_back_after_two_blanks():
    backend = ScriptedBackend(["", "   \n"])
    hs = initialize_heuristics(episode_with_return(3.0), [], backend, objective="Win.")
    assert backend.calls == 2
    assert hs.fallback and hs.rules == ["Keep the objective in mind: Win."]
    oracle = Oracle(ScriptedBackend(["", "", "no edit here at all\nreally\nnone"] * 2), np.random.default_rng(0))
    oracle.end_episode(episode_with_return(3.0), [], objective="Win.")
    assert oracle.state.lineage[0].note == "fallback_rule"


def test_remove_operator_on_three_rules():
    state = OracleState(parent=HeuristicSet(["a", "b", "c"], fitness=5.0))
    backend = ScriptedBackend(["a\nc"])
    prompts = []
    backend.on_exchange = lambda ex: prompts.append(ex.prompt)
    child = propose_offspring(state, episode_with_return(5.0), backend, FixedDraws(1))
    assert child.rules == ["a", "c"] and child.generation == 2
    assert state.pending_offspring is child and state.pending_operator == "remove"
    assert "remove the one heuristic" in prompts[0]


def test_remove_redrawn_for_single_rule():
    parent = HeuristicSet(["only"], fitness=1.0)
    assert choose_operator(parent, FixedDraws(1, 0)) == "add"
    assert choose_operator(parent, FixedDraws(1, 1)) == "modify"
    rng = np.random.default_rng(0)
    assert all(choose_operator(parent, rng) != "remove" for _ in range(200))


def test_rewrite_everything_is_rejected():
    state = OracleState(parent=HeuristicSet(["a", "b", "c"], fitness=5.0))
    backend = ScriptedBackend(["x\ny\nz", "p\nq"])
    with pytest.raises(MutationRejected):
        propose_offspring(state, episode_with_return(5.0), backend, FixedDraws(2))
    assert backend.calls == 2 and state.pending_offspring is None


def test_empty_offspring_is_rejected():
    state = OracleState(parent=HeuristicSet(["a"], fitness=5.0))
    with pytest.raises(MutationRejected):
        propose_offspring(state, episode_with_return(5.0), ScriptedBackend(["", ""]), FixedDraws(0))


@pytest.mark.parametrize("child_fitness,survives", [(12.0, True), (10.0, False), (8.0, False)])
def test_select_survivor(child_fitness, survives):
    parent = HeuristicSet(["a"], fitness=10.0)
    child = HeuristicSet(["a", "b"], generation=2)
    state = OracleState(parent=parent, pending_offspring=child, pending_operator="add")
    winner = select_survivor(state, child_fitness)
    assert (winner is child) == survives
    assert state.pending_offspring is None
    entry = state.lineage[-1]
    assert entry.accepted == survives and entry.fitness == child_fitness
    assert entry.survivor_fitness == (child_fitness if survives else 10.0)


def test_rejected_mutation_keeps_parent_for_next_episode():
    backend = ScriptedBackend(["r1\nr2", "totally\ndifferent\nlist", "again\nnot\nclose"])
    oracle = Oracle(backend, np.random.default_rng(3))
    events = []
    oracle.end_episode(episode_with_return(4.0), [], sink=lambda k, p: events.append(p))
    assert oracle.active().rules == ["r1", "r2"]
    assert oracle.state.pending_offspring is None
    assert events[-1]["note"] == "mutation_rejected"


# ------------------------------------------------------------------ planner

LABELS = ["a1", "a2", "a3"]


def test_argmax_first_action():
    rec = recommend([Rollout(["a1"], 1.0), Rollout(["a2", "a1"], 3.0)], LABELS)
    assert rec.action == "a2"


def test_four_step_lines_are_dropped():
    assert parse_rollouts("a1 → a2 → a3 → a1 = 9", LABELS) == []
    backend = ScriptedBackend(["a1 → a2 → a3 → a1 = 9", "a1 -> a1 -> a1 -> a1 = 2"])
    with pytest.raises(PlanParseFailure):
        plan("state", "manual", None, LABELS, backend)
    assert backend.calls == 2


def test_ties_go_to_first_legal_action():
    rollouts = parse_rollouts("a3 = 2\na2 → a1 = 2\na1 → a3 = 1", LABELS)
    assert recommend(rollouts, LABELS).action == "a2"


def test_parse_rollouts_layouts():
    text = "Here are my rollouts:\n1. a1 → a2 = 3.5\n- a2 -> a3 -> a1 = -1\nnonsense = 4\na3 => a3 = 1e1\na1 = unknown"
    got = parse_rollouts(text, LABELS)
    assert [(r.actions, r.estimate) for r in got] == [(["a1", "a2"], 3.5), (["a2", "a3", "a1"], -1.0), (["a3", "a3"], 10.0)]


def test_plan_retries_once():
    backend = ScriptedBackend(["I cannot plan", "a2 → a1 = 2\na1 = 1"])
    rec = plan("state", "manual", None, LABELS, backend)
    assert rec.action == "a2" and backend.calls == 2


@given(st.lists(st.tuples(st.lists(st.sampled_from(LABELS + ["zz"]), min_size=1, max_size=4), st.integers(-5, 5)), max_size=6))
def test_recommendation_is_always_legal(rows):
    text = "\n".join(" → ".join(acts) + f" = {v}" for acts, v in rows)
    rollouts = parse_rollouts(text, LABELS)
    if not rollouts:
        return
    rec = recommend(rollouts, LABELS)
    assert rec.action in LABELS
    best = max(r.estimate for r in rollouts)
    assert any(r.actions[0] == rec.action and r.estimate == best for r in rollouts)
    assert all(1 <= len(r.actions) <= 3 for r in rec.rollouts)


@pytest.mark.parametrize("where", [(0, 2, 2), (2, 1, 2), (1, 1, 0), (0, 0, 0), (2, 0, 1)])
def test_exact_plan_moves_toward_goal(where):
    env = make_env(EnvConfig(game="hanoi"))
    env.reset(0)
    env.state = HanoiState(rods=hanoi_rods(where), horizon=30)
    rec = exact_plan(env)
    assert env.state.rods == hanoi_rods(where)
    # rollouts are undiscounted: any first move that can still finish within three moves ties
    if hanoi_distance(where) <= 3:
        finishing = [
            hanoi_label(s, d)
            for s, d in ALL_MOVES
            if hanoi_move(where, s, d) is not None and hanoi_distance(hanoi_move(where, s, d)) <= 2
        ]
        expected = next(a for a in env.legal_actions if a in finishing)
        assert rec.action == expected
    else:
        # nothing reaches +100; every legal three-move rollout scores 0 and the first legal move wins the tie
        legal = [hanoi_label(s, d) for s, d in ALL_MOVES if hanoi_move(where, s, d) is not None]
        assert rec.action == next(a for a in env.legal_actions if a in legal)


# ------------------------------------------------------------------ composition

def section(prompt: str, name: str) -> str | None:
    m = re.search(re.escape(marker(name)) + r"\n(.*?)\n\n=== ", prompt, flags=re.S)
    return m.group(1) if m else None


def scripted_everything(env):
    def policy(prompt, key):
        if len(key) == 3:
            return env.legal_actions[key[2] % len(env.legal_actions)]
        kind = key[-1]
        if kind == "reflection":
            return f"reflection at step {key[2]}"
        if kind == "plan":
            return f"{env.legal_actions[0]} = 1"
        # oracle: initial rules, later one added rule per episode
        m = re.search(r"=== CURRENT HEURISTICS ===\n(.*?)\n\n", prompt, flags=re.S)
        if m is None:
            return "rule one\nrule two"
        return m.group(1) + f"\nextra rule {key[2]}"

    return policy


EXPECTED_SECTIONS = {
    "base": set(),
    "reflection": {"REFLECTION"},
    "reflection_oracle": {"REFLECTION", "HEURISTICS"},
    "reflection_planner": {"REFLECTION", "PLAN"},
}


@pytest.mark.parametrize("name", list(EXPECTED_SECTIONS))
def test_strategy_sections(name):
    env = make_env(EnvConfig(game="hanoi", steps_per_episode=5))
    backend = ScriptedBackend(policy=scripted_everything(env))
    prompts = []
    backend.on_exchange = lambda ex: prompts.append(ex.prompt)
    strat = Strategy(name, backend, np.random.default_rng(0))
    for ep in range(3):
        run_episode(env, strat, backend, seed=ep, episode_index=ep)
    decisions = [p for p in prompts if marker("OBSERVATION") in p]
    seen = {n for p in decisions for n in ("REFLECTION", "HEURISTICS", "PLAN") if marker(n) in p}
    assert seen == EXPECTED_SECTIONS[name]
    planner_prompts = [p for p in prompts if "=== CURRENT STATE ===" in p]
    assert bool(planner_prompts) == (name == "reflection_planner")
    assert not any("HEURISTICS" in p for p in planner_prompts)


def test_heuristics_frozen_within_episode():
    env = make_env(EnvConfig(game="hanoi", steps_per_episode=6))
    backend = ScriptedBackend(policy=scripted_everything(env))
    strat = Strategy("reflection_oracle", backend, np.random.default_rng(0))
    events = []
    sink = lambda kind, p: events.append((kind, p))
    for ep in range(4):
        run_episode(env, strat, backend, seed=ep, episode_index=ep, sink=sink)
    per_episode: dict[int, set] = {}
    episode = -1
    for kind, p in events:
        if kind == "episode_start":
            episode += 1
            per_episode[episode] = set()
        elif kind == "decision":
            per_episode[episode].add(p["augmentations"].get("HEURISTICS"))
    assert per_episode[0] == {None}
    for ep in range(1, 4):
        assert len(per_episode[ep]) == 1 and None not in per_episode[ep]
    assert per_episode[1] != per_episode[2]


def test_plan_failure_leaves_no_plan_section():
    env = make_env(EnvConfig(game="bandit", steps_per_episode=3))

    def policy(prompt, key):
        return "pull slot machine 1" if len(key) == 3 else "no idea"

    backend = ScriptedBackend(policy=policy)
    events = []
    run_episode(env, Strategy("reflection_planner", backend), backend, seed=0, sink=lambda k, p: events.append((k, p)))
    assert sum(k == "plan_failed" for k, _ in events) == 3
    assert all("PLAN" not in p["augmentations"] for k, p in events if k == "decision")


def test_exact_planner_flag():
    env = make_env(EnvConfig(game="hanoi"))
    backend = ScriptedBackend(policy=lambda p, k: "Planning.\n" + p.split("Recommended next action: ")[1].split("\n")[0] if "Recommended" in p else "ok")
    strat = Strategy("reflection_planner", backend, exact_planner=True)
    rec = run_episode(env, strat, backend, seed=0)
    # following three-step lookahead never makes an illegal move
    assert all(s.info.valid_move for s in rec.steps)


def test_unknown_strategy():
    with pytest.raises(ValueError):
        Strategy("tree_search", ScriptedBackend())
