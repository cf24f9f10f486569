from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

from gamebench.backend import sha256

TEMPLATE_NAMES = ("reflection", "oracle_init", "oracle_mutate", "planner")
_PLACEHOLDER = re.compile(r"\{\{([A-Z_]+)\}\}")


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return resources.files("gamebench.templates").joinpath(f"{name}.txt").read_text(encoding="utf-8")


def render_template(name: str, **values: str) -> str:
    """Fill ``{{KEY}}`` placeholders; every placeholder must be supplied."""
    template = load_template(name)

    def fill(match: re.Match) -> str:
        key = match.group(1)
        if key not in values:
            raise KeyError(f"template {name!r} needs a value for {{{{{key}}}}}")
        return str(values[key])

    return _PLACEHOLDER.sub(fill, template)


def template_hashes() -> dict[str, str]:
    return {name: sha256(load_template(name)) for name in TEMPLATE_NAMES}
