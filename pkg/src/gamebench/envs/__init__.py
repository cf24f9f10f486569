from gamebench.envs.bandit import BanditEnv, BanditState, bandit_step
from gamebench.envs.base import GAMES, EnvConfig, Environment, StepInfo, Transition
from gamebench.envs.hanoi import HanoiEnv, HanoiState, hanoi_step, hanoi_valid_moves, render_rods
from gamebench.envs.messenger import (
    MessengerEnv,
    MessengerState,
    load_lexicon,
    messenger_shaped_reward,
    messenger_step,
    render_messenger,
)
from gamebench.envs.rps import RpsEnv, RpsState, rps_step
from gamebench.envs.scoring import EpisodeScore, episode_score

_ENVS = {"bandit": BanditEnv, "rps": RpsEnv, "hanoi": HanoiEnv, "messenger": MessengerEnv}


def make_env(config: EnvConfig) -> Environment:
    """Build an un-reset environment; raises ``InvalidConfig`` on a bad config."""
    config.validate()
    return _ENVS[config.game](config)


__all__ = [
    "GAMES",
    "BanditEnv",
    "BanditState",
    "EnvConfig",
    "Environment",
    "EpisodeScore",
    "HanoiEnv",
    "HanoiState",
    "MessengerEnv",
    "MessengerState",
    "RpsEnv",
    "RpsState",
    "StepInfo",
    "Transition",
    "bandit_step",
    "episode_score",
    "hanoi_step",
    "hanoi_valid_moves",
    "load_lexicon",
    "make_env",
    "messenger_shaped_reward",
    "messenger_step",
    "render_messenger",
    "render_rods",
    "rps_step",
]
