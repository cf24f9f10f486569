"""Run a small grid of experiments and print the summary tables.

No model endpoint is needed. Two stand-in models are compared: the seeded
random backend, and a toy model that plays randomly until it is given a
REFLECTION section, after which it reads the history and plays win-stay
lose-shift on the bandit and counters the opponent's favourite in
rock-paper-scissors. The toy model is what makes the deltas non-zero.
Run: python3 demos/score_tables.py [output_dir]
"""

from __future__ import annotations

import re
import sys
import tempfile
from collections import Counter
from pathlib import Path

import numpy as np

from gamebench.backend import BackendConfig, RandomBackend, ScriptedBackend, parse_action_trailer
from gamebench.envs import EnvConfig
from gamebench.evaluation import render_summary_markdown
from gamebench.experiment import ExperimentConfig, report, run_experiment

GAMES = {"bandit": {}, "rps": {}, "hanoi": {"hanoi_disks": 2}}
COUNTER = {"Rock": "Paper", "Paper": "Scissors", "Scissors": "Rock"}


def toy_model(seed: int) -> ScriptedBackend:
    fallback = RandomBackend(seed)
    rng = np.random.default_rng(seed)

    def policy(prompt, key):
        labels = parse_action_trailer(prompt)
        if not labels:
            return "Look back at which choices paid off."
        if "=== REFLECTION ===" not in prompt:
            return str(rng.choice(labels))
        history = prompt.split("=== HISTORY ===", 1)[1].split("=== REFLECTION ===", 1)[0]
        played = re.findall(r"action: (.+)\nreward: (\S+)", history)
        if "Rock" in labels:
            seen = Counter(re.findall(r"the opponent played (\w+)", history))
            return COUNTER[seen.most_common(1)[0][0]] if seen else "Rock"
        if "pull slot machine 1" in labels and played:
            last, reward = played[-1]
            return last if float(reward) > 0 else next(a for a in labels if a != last)
        return fallback.complete(prompt)

    return ScriptedBackend(policy=policy)


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="gamebench-"))
    dirs = []
    for model in ("random", "toy"):
        factory = (lambda env, seed: toy_model(seed)) if model == "toy" else None
        for game, extra in GAMES.items():
            for strategy in ("base", "reflection"):
                d = out / "logs" / f"{model}-{game}-{strategy}"
                run_experiment(
                    ExperimentConfig(
                        env=EnvConfig(game=game, episodes=4, **extra),
                        strategy=strategy,
                        backend=BackendConfig(kind="random"),
                        runs=3,
                        master_seed=1,
                        output_dir=d,
                        model_label=model,
                        backend_factory=factory,
                    )
                )
                dirs.append(d)
    rep = report(dirs, out / "report")
    for game in GAMES:
        print(render_summary_markdown([s for s in rep.summaries if s.game == game]))
    print("normalised deltas against base:")
    for (model, strategy, game), delta in sorted(rep.tables.delta.items()):
        print(f"  {model:<7} {strategy:<11} {game:<7} {delta:+.3f}")
    print("\nper-dimension aggregate:")
    for (model, strategy, dim), value in sorted(rep.tables.aggregate.items()):
        if strategy != "base":
            print(f"  {model:<7} {strategy:<11} {dim:<28} {value:+.3f}")
    print()
    for (model, strategy, game), m in sorted(rep.behavior.items()):
        if game == "hanoi":
            print(f"hanoi {model} {strategy}: G={m.goal_rate:.1f}% D={m.avg_disks:.2f} I={m.invalid_rate:.1f}%")
    print(f"\nfiles written under {out}")


if __name__ == "__main__":
    main()
