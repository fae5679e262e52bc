"""Reactive swarm simulator.

Configs and plans may be passed as dicts or JSON strings; they use the same
schemas as the files under configs/.
"""

import json

from . import _swarmsim
from ._swarmsim import (
    ConfigError,
    ModelIntegrityError,
    ParseError,
    actuation_factor,
    circliness,
    cluster_components,
    diffusion_metric,
    fit_population,
    pivot,
)

__all__ = [
    "ConfigError",
    "ModelIntegrityError",
    "ParseError",
    "World",
    "actuation_factor",
    "build_profile",
    "circliness",
    "classify_jsonl",
    "cluster_components",
    "diffusion_metric",
    "fit_population",
    "pivot",
    "plan_grid",
    "run",
    "run_record_jsonl",
    "sweep_csv",
]


def _text(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


class World(_swarmsim.World):
    def __init__(self, config):
        super().__init__(_text(config))

    def snapshot(self):
        return json.loads(self.snapshot_json())


def run(config, ticks=None, seed=None):
    return _swarmsim.run(_text(config), ticks, seed)


def run_record_jsonl(config, ticks=None):
    return _swarmsim.run_record_jsonl(_text(config), ticks)


def classify_jsonl(text):
    return _swarmsim.classify_jsonl(text)


def build_profile(csv_text):
    return json.loads(_swarmsim.build_profile_json(csv_text))


def plan_grid(plan):
    return _swarmsim.plan_grid(_text(plan))


def sweep_csv(plan, workers=1):
    return _swarmsim.sweep_csv(_text(plan), workers)
