"""Exception hierarchy shared across the harness."""

from __future__ import annotations


class GameBenchError(Exception):
    pass


# environments
class InvalidConfig(GameBenchError, ValueError):
    pass


class InvalidAction(GameBenchError, ValueError):
    pass


class EpisodeOver(GameBenchError, RuntimeError):
    pass


class NotReset(GameBenchError, RuntimeError):
    pass


class IncompleteEpisode(GameBenchError, ValueError):
    pass


# agent loop
class ActionParseError(GameBenchError, ValueError):
    pass


class AmbiguousAction(ActionParseError):
    def __init__(self, candidates: list[str]):
        self.candidates = list(candidates)
        super().__init__(f"response matches several actions: {self.candidates}")


class NoActionFound(ActionParseError):
    pass


# backends
class BackendError(GameBenchError):
    pass


class BackendUnavailable(BackendError):
    pass


class MalformedResponse(BackendError):
    pass


class ScriptExhausted(BackendError):
    pass


# strategies
class MutationRejected(GameBenchError):
    pass


class PlanParseFailure(GameBenchError):
    pass


# evaluation / reporting
class EmptyInput(GameBenchError, ValueError):
    pass


class MissingBaseline(GameBenchError, KeyError):
    def __str__(self) -> str:  # KeyError repr-quotes its message otherwise
        return str(self.args[0]) if self.args else "missing Base strategy"


class MixedGames(GameBenchError, ValueError):
    pass


class CorruptLog(GameBenchError):
    def __init__(self, path, line: int, reason: str):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {reason}")


class ExperimentAborted(GameBenchError):
    def __init__(self, message: str, *, run: int, episode: int | None, cause: Exception):
        self.run = run
        self.episode = episode
        self.cause = cause
        super().__init__(message)
