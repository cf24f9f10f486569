"""Harness for prompt-driven language-model agents on small dynamic games."""

from gamebench.agent import AgentDecision, EpisodeMemory, decide, run_episode
from gamebench.backend import BackendConfig, HttpBackend, RandomBackend, ScriptedBackend, make_backend
from gamebench.envs import EnvConfig, episode_score, make_env
from gamebench.experiment import ExperimentConfig, report, run_experiment
from gamebench.prompting import PromptBundle, build_prompt, parse_action
from gamebench.records import EpisodeRecord, StepRecord
from gamebench.strategies import Strategy, make_strategy

__version__ = "0.1.0"

__all__ = [
    "AgentDecision",
    "BackendConfig",
    "EnvConfig",
    "EpisodeMemory",
    "EpisodeRecord",
    "ExperimentConfig",
    "HttpBackend",
    "PromptBundle",
    "RandomBackend",
    "ScriptedBackend",
    "StepRecord",
    "Strategy",
    "build_prompt",
    "decide",
    "episode_score",
    "make_backend",
    "make_env",
    "make_strategy",
    "parse_action",
    "report",
    "run_episode",
    "run_experiment",
]
