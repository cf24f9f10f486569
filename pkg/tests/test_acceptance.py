"""Exit criteria. Each test prints one PASS/FAIL line in the terminal summary.

Reference numbers come from the independent oracles in ``oracles.py``; the
package under test never supplies its own expected values.
"""

from __future__ import annotations

import json
import os
import threading
import time
from collections import Counter
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
import pytest

from gamebench.agent import run_episode
from gamebench.backend import BackendConfig, RandomBackend, ScriptedBackend
from gamebench.cli import main
from gamebench.envs import EnvConfig, make_env
from gamebench.envs.hanoi import HanoiState, hanoi_step, hanoi_valid_moves
from gamebench.envs.scoring import episode_score
from gamebench.evaluation import WeightMatrix, aggregate_dimensions, load_weights
from gamebench.experiment import ExperimentConfig, run_experiment
from gamebench.records import EpisodeRecord, StepRecord
from gamebench.strategies.oracle import Oracle

from agents import bandit_optimal, messenger_shortest_path, rps_best_response
from oracles import (
    ALL_MOVES,
    hanoi_bfs,
    hanoi_label,
    hanoi_move,
    hanoi_reachable,
    hanoi_rods,
    one_edit_apart,
    random_hanoi_exact,
    shaped_return_from_log,
)

pytestmark = pytest.mark.acceptance


# ------------------------------------------------------------------ 1

def test_hanoi_optimal_solution_replays(note):
    start = time.perf_counter()
    moves = hanoi_bfs(3)
    assert len(moves) == 7
    env = make_env(EnvConfig(game="hanoi", hanoi_disks=3))
    env.reset(0)
    rec = EpisodeRecord(0, "hanoi", env.horizon)
    for t, (src, dst) in enumerate(moves, 1):
        tr = env.step(hanoi_label(src, dst))
        rec.append(StepRecord(t, "", hanoi_label(src, dst), tr.reward, tr.next_observation, tr.terminated, tr.truncated, tr.info))
    elapsed = time.perf_counter() - start
    assert all(s.info.valid_move for s in rec.steps) and len(rec.steps) == 7
    assert rec.cumulative_reward == 100 and rec.steps[-1].terminated
    assert episode_score("hanoi", rec).value == 3
    assert elapsed < 1.0
    note(f"7-move solution replayed in {elapsed * 1000:.1f} ms")


# ------------------------------------------------------------------ 2

def to_state(where) -> HanoiState:
    return HanoiState(rods=hanoi_rods(where))


def test_hanoi_rules_match_brute_force(note):
    start = time.perf_counter()
    states = hanoi_reachable(3)
    assert len(states) == 27
    for where in states:
        expected = [m for m in ALL_MOVES if hanoi_move(where, *m) is not None]
        assert sorted(hanoi_valid_moves(to_state(where))) == sorted(expected)
        for m in ALL_MOVES:
            state = to_state(where)
            if state.solved:
                continue
            hanoi_step(state, m)
            after = hanoi_move(where, *m) or where
            assert state.rods == hanoi_rods(after)

    rng = np.random.default_rng(2024)
    env = make_env(EnvConfig(game="hanoi", hanoi_disks=3, steps_per_episode=30))
    labels = env.action_labels
    for seq in range(10_000):
        env.reset(seq)
        while not env.done:
            env.step(labels[int(rng.integers(6))])
            for rod in env.state.rods:
                assert all(a > b for a, b in zip(rod, rod[1:]))
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    note(f"27 states x 6 moves plus 10,000 random sequences in {elapsed:.2f} s")


# ------------------------------------------------------------------ 3

@pytest.mark.parametrize("disks", [2, 3])
def test_random_hanoi_matches_markov_chain(disks, note):
    horizon, episodes = 30, 20_000
    p_goal, invalid_frac = random_hanoi_exact(disks, horizon)
    env = make_env(EnvConfig(game="hanoi", hanoi_disks=disks, steps_per_episode=horizon))
    labels = env.action_labels
    rng = np.random.default_rng(disks)
    goals = invalid = steps = 0
    for ep in range(episodes):
        env.reset(ep)
        while not env.done:
            tr = env.step(labels[int(rng.integers(6))])
            steps += 1
            invalid += not tr.info.valid_move
            goals += tr.info.goal_reached
    sim_goal, sim_invalid = goals / episodes, invalid / steps
    note(f"{disks} disks, cap {horizon}: exact G={100 * p_goal:.2f}% I={100 * invalid_frac:.2f}%, "
         f"simulated G={100 * sim_goal:.2f}% I={100 * sim_invalid:.2f}%")
    if disks == 2:
        note("published random 2-disk reference: G=32.0% I=68.5% (step cap not stated; not gated)")
    assert abs(sim_goal - p_goal) <= 0.015
    assert abs(sim_invalid - invalid_frac) <= 0.015


# ------------------------------------------------------------------ 4

def test_bandit_score_identities(note):
    env = make_env(EnvConfig(game="bandit"))
    optimal = ScriptedBackend(policy=bandit_optimal(env))
    for ep in range(20):
        assert run_episode(env, None, optimal, seed=ep, episode_index=ep).score.value == env.horizon

    backend = RandomBackend(seed=99)
    scores = [run_episode(env, None, backend, seed=10_000 + ep, episode_index=ep).score.value for ep in range(2_000)]
    mean = float(np.mean(scores))
    note(f"optimal agent scores {env.horizon}/{env.horizon}; random agent mean {mean:.3f} over 2,000 episodes")
    note("human reference 45/50 (not gated)")
    assert abs(mean - env.horizon / 2) <= 0.01 * env.horizon / 2


# ------------------------------------------------------------------ 5

def test_rps_distribution_and_best_response(note):
    env = make_env(EnvConfig(game="rps", steps_per_episode=10_000))
    env.reset(5)
    bias = env.state.bias
    assert sorted(bias) == sorted(env.config.rps_bias)
    counts = Counter(env.step("Rock").info.opponent for _ in range(10_000))
    freqs = [counts[m] / 10_000 for m in ("Rock", "Paper", "Scissors")]
    assert max(abs(f - p) for f, p in zip(freqs, bias)) <= 0.02

    env = make_env(EnvConfig(game="rps"))
    backend = ScriptedBackend(policy=rps_best_response(env))
    wins = []
    for ep in range(2_000):
        rec = run_episode(env, None, backend, seed=ep, episode_index=ep)
        wins.append(sum(s.info.outcome == "win" for s in rec.steps))
    expected = env.horizon * max(env.config.rps_bias)
    mean = float(np.mean(wins))
    note(f"opponent frequencies {[round(f, 4) for f in freqs]} vs bias {list(bias)}; "
         f"best-response mean wins {mean:.3f} vs {expected:g}")
    assert abs(mean - expected) <= 1.0


# ------------------------------------------------------------------ 6

def test_messenger_shaping_audit(note):
    env = make_env(EnvConfig(game="messenger", reward_shaping=True))
    backend = ScriptedBackend(policy=messenger_shortest_path(env))
    mismatches = successes = 0
    for ep in range(1_000):
        events = []
        run_episode(env, None, backend, seed=ep, episode_index=ep, sink=lambda k, p: events.append((k, p)))
        logged = json.loads(json.dumps([p for k, p in events if k == "step"]))
        (end,) = [p for k, p in events if k == "episode_end"]
        mismatches += shaped_return_from_log(logged) != end["cumulative_reward"]
        flags = [s["flags"] for s in logged]
        successes += any(f["picked_up"] for f in flags) and flags[-1]["delivered"] and len(flags) <= 10
    note(f"shaped-return mismatches {mismatches}/1000; pickup and delivery within 10 steps {successes}/1000")
    assert mismatches == 0
    assert successes == 1_000


# ------------------------------------------------------------------ 7

def rules_in(prompt: str) -> list[str]:
    block = prompt.split("=== CURRENT HEURISTICS ===\n", 1)[1].split("\n\n", 1)[0]
    return [line.split(". ", 1)[1] for line in block.splitlines()]


def mutation_policy(rng: np.random.Generator):
    counter = iter(range(10**9))

    def policy(prompt, key):
        if "=== CURRENT HEURISTICS ===" not in prompt:
            return "\n".join(f"rule {next(counter)}" for _ in range(int(rng.integers(1, 4))))
        rules = rules_in(prompt)
        if rng.random() < 0.1:
            # a reply that rewrites everything must never become the offspring
            return "\n".join(f"rule {next(counter)}" for _ in range(len(rules) + 2))
        i = int(rng.integers(len(rules)))
        if "add one" in prompt:
            rules.insert(int(rng.integers(len(rules) + 1)), f"rule {next(counter)}")
        elif "remove the one" in prompt:
            del rules[i]
        else:
            rules[i] = f"rule {next(counter)}"
        return "\n".join(rules)

    return policy


def fitness_episode(total: float) -> EpisodeRecord:
    rec = EpisodeRecord(0, "bandit", 1)
    rec.append(StepRecord(1, "s", "pull slot machine 1", total, "s", truncated=True))
    return rec


def test_oracle_evolution_properties(note):
    ties = accepted_total = 0
    for seq in range(1_000):
        rng = np.random.default_rng(seq)
        oracle = Oracle(ScriptedBackend(policy=mutation_policy(np.random.default_rng(seq + 10_000))), rng)
        for _ in range(int(rng.integers(2, 25))):
            oracle.end_episode(fitness_episode(float(rng.integers(-3, 4))), [])
        lineage = oracle.state.lineage
        parent = lineage[0]
        survivor = parent.fitness
        parent_rules = parent.rules
        for entry in lineage[1:]:
            assert entry.survivor_fitness >= survivor
            if entry.fitness is None:
                assert not entry.accepted and entry.survivor_fitness == survivor
                continue
            assert entry.accepted == (entry.fitness > survivor)
            if entry.fitness == survivor:
                ties += 1
                assert entry.survivor_fitness == survivor
            if entry.accepted:
                accepted_total += 1
                assert one_edit_apart(parent_rules, entry.rules)
                parent_rules, survivor = entry.rules, entry.fitness
        assert oracle.state.parent.rules == parent_rules
    note(f"1,000 sequences: {accepted_total} accepted offspring, {ties} ties kept the parent")
    assert ties > 0 and accepted_total > 0


# ------------------------------------------------------------------ 8

def table(games, dims, rows):
    return WeightMatrix(list(games), list(dims), np.array(rows, dtype=float))


def cells(deltas: dict[str, float]):
    return {("m", "s", g): v for g, v in deltas.items()}


def test_aggregation_algebra(note):
    # three tables worked by hand
    agg, _ = aggregate_dimensions(cells({"g1": 0.2, "g2": -0.1}), table(["g1", "g2"], ["d"], [[1.0], [0.33]]))
    assert abs(agg[("m", "s", "d")] - 0.167 / 1.33) <= 1e-12
    assert round(agg[("m", "s", "d")], 4) == 0.1256

    w = table(["g1", "g2", "g3"], ["d1", "d2"], [[1.0, 0.0], [0.67, 1.0], [0.33, 0.33]])
    agg, _ = aggregate_dimensions(cells({"g1": 0.5, "g2": -0.25, "g3": 0.1}), w)
    assert abs(agg[("m", "s", "d1")] - (0.5 - 0.1675 + 0.033) / 2.0) <= 1e-12
    assert abs(agg[("m", "s", "d2")] - (-0.25 + 0.033) / 1.33) <= 1e-12

    w = table(["a", "b", "c", "d"], ["x"], [[0.0], [0.67], [0.67], [1.0]])
    agg, _ = aggregate_dimensions(cells({"a": 9.0, "b": 0.3, "c": -0.6, "d": 0.05}), w)
    assert abs(agg[("m", "s", "x")] - (0.201 - 0.402 + 0.05) / 2.34) <= 1e-12

    bundled = load_weights()
    agg, _ = aggregate_dimensions(cells({g: 0.0 for g in bundled.games}), bundled)
    assert agg and all(v == 0 for v in agg.values())

    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        games = [f"g{i}" for i in range(int(rng.integers(1, 6)))]
        dims = [f"d{i}" for i in range(int(rng.integers(1, 5)))]
        weights = rng.choice([0.0, 0.33, 0.67, 1.0], size=(len(games), len(dims)))
        weights[0] = np.maximum(weights[0], 0.33)
        w = table(games, dims, weights)
        d1 = dict(zip(games, rng.uniform(-1, 1, len(games))))
        d2 = dict(zip(games, rng.uniform(-1, 1, len(games))))
        a, b = rng.uniform(-5, 5, 2)
        mix = {g: a * d1[g] + b * d2[g] for g in games}
        agg1, _ = aggregate_dimensions(cells(d1), w)
        agg2, _ = aggregate_dimensions(cells(d2), w)
        aggm, _ = aggregate_dimensions(cells(mix), w)
        for key, v in aggm.items():
            worst = max(worst, abs(v - (a * agg1[key] + b * agg2[key])))
    note(f"largest linearity error over 100 random tables: {worst:.2e}")
    assert worst <= 1e-9


# ------------------------------------------------------------------ 9

LABELS = {
    "bandit": ["pull slot machine 1", "pull slot machine 2"],
    "rps": ["Rock", "Paper", "Scissors"],
    "hanoi": [hanoi_label(s, d) for s, d in ALL_MOVES],
    "messenger": ["move north", "move east", "stay", "move south", "move west"],
}


@pytest.mark.parametrize("game", sorted(LABELS))
def test_scripted_runs_are_byte_identical(game, tmp_path, note):
    script = tmp_path / "script.txt"
    labels = LABELS[game]
    script.write_text("".join(f"{labels[i % len(labels)]}\n" for i in range(20_000)), encoding="utf-8")

    def logs(out: Path) -> dict[str, bytes]:
        for strategy in ("base", "reflection", "reflection_oracle", "reflection_planner"):
            run_experiment(
                ExperimentConfig(
                    env=EnvConfig(game=game, episodes=3, steps_per_episode=8),
                    strategy=strategy,
                    backend=BackendConfig(kind="scripted", script_path=str(script)),
                    runs=2,
                    master_seed=77,
                    output_dir=out / strategy,
                )
            )
        return {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*.jsonl"))}

    first, second = logs(tmp_path / "a"), logs(tmp_path / "b")
    assert len(first) == 8 and first == second
    note(f"{game}: {len(first)} logs, {sum(map(len, first.values()))} bytes, identical across executions")


# ------------------------------------------------------------------ 10

class StubModel(BaseHTTPRequestHandler):
    """Chat-completions endpoint that always answers with the first listed action."""

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        prompt = body["messages"][-1]["content"]
        trailer = prompt.rsplit("=== ACTIONS ===", 1)[-1]
        first = next((line.split(". ", 1)[1] for line in trailer.splitlines() if line[:1].isdigit()), "I am not sure.")
        payload = json.dumps({"choices": [{"message": {"role": "assistant", "content": first}}]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


def test_endpoint_smoke(tmp_path, note):
    endpoint = os.environ.get("GAMEBENCH_ENDPOINT", "")
    server = None
    if not endpoint:
        server = ThreadingHTTPServer(("127.0.0.1", 0), StubModel)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        endpoint = f"http://127.0.0.1:{server.server_address[1]}/v1"
    model = os.environ.get("GAMEBENCH_MODEL", "stub")
    try:
        code = main([
            "run", "--game", "bandit", "--backend", "http", "--endpoint", endpoint, "--model", model,
            "--episodes", "1", "--runs", "1", "--out", str(tmp_path),
        ])
    finally:
        if server:
            server.shutdown()
    assert code == 0
    records = [json.loads(line) for line in (tmp_path / "run_00.jsonl").read_text(encoding="utf-8").splitlines()]
    decisions = [r for r in records if r["kind"] == "decision"]
    steps = [r for r in records if r["kind"] == "step"]
    assert len(decisions) == len(steps) == 50
    assert all(d["action"] in d["legal_actions"] for d in decisions)
    if server:
        assert not any(d["fallback_used"] for d in decisions)
    fallbacks = sum(d["fallback_used"] for d in decisions)
    note(f"{'local stub' if server else 'live endpoint'}: 50 steps, {fallbacks} fallbacks")
