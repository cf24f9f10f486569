"""Watch the heuristic set evolve across episodes.

A scripted backend plays the language model: it drafts two starting rules and
then applies whatever single edit the harness asks for. Episode returns are
made up so acceptance and rejection are easy to follow.
Run: python3 demos/oracle_evolution.py
"""

from __future__ import annotations

import itertools

import numpy as np

from gamebench.backend import ScriptedBackend
from gamebench.records import EpisodeRecord, StepRecord
from gamebench.strategies.oracle import Oracle

RETURNS = [3, 5, 5, 2, 8, 8, 9, 4, 12]


def editor():
    fresh = (f"idea {n}" for n in itertools.count(1))

    def policy(prompt, key):
        if "=== CURRENT HEURISTICS ===" not in prompt:
            return "Prefer the machine that paid last time.\nSwitch after two losses."
        block = prompt.split("=== CURRENT HEURISTICS ===\n", 1)[1].split("\n\n", 1)[0]
        rules = [line.split(". ", 1)[1] for line in block.splitlines()]
        if "add one" in prompt:
            rules.append(next(fresh))
        elif "remove the one" in prompt:
            rules.pop()
        else:
            rules[0] = next(fresh)
        return "\n".join(rules)

    return policy


def episode(total: float) -> EpisodeRecord:
    rec = EpisodeRecord(0, "bandit", 1)
    rec.append(StepRecord(1, "", "pull slot machine 1", total, "", truncated=True))
    return rec


def main() -> None:
    oracle = Oracle(ScriptedBackend(policy=editor()), np.random.default_rng(3))
    for ep, ret in enumerate(RETURNS):
        active = oracle.active()
        shown = " | ".join(active.rules) if active else "(none yet)"
        print(f"episode {ep}: return {ret:>2}  heuristics in play: {shown}")
        oracle.end_episode(episode(ret), [])
    print("\nlineage:")
    for e in oracle.state.lineage:
        verdict = "kept" if e.accepted else "dropped"
        print(f"  gen {e.generation}: {e.operator or e.note or 'initial':<17} fitness {e.fitness!s:>5}  {verdict:<7} survivor {e.survivor_fitness:g}")


if __name__ == "__main__":
    main()
