"""Python access to the decabs core: scalar certificates, Post sets and reach frontiers."""

import json
import os

from ._decabs import H, PlanError, ScenarioError, horizon_root, level_sets, t_bar, t_star
from . import _decabs

__all__ = ["H", "PlanError", "ScenarioError", "Model", "horizon_root", "level_sets", "load", "t_bar", "t_star"]


class Model:
    """Built scenario. Agents are numbered from 1 as in scenario files."""

    def __init__(self, session):
        self._s = session

    @property
    def summary(self):
        return json.loads(self._s.summary_json())

    @property
    def plan(self):
        return self.summary["plan"]

    @property
    def initial_cells(self):
        return list(self._s.initial_cells)

    @property
    def horizon_steps(self):
        return self._s.horizon_steps

    def post(self, agent, cells=None):
        return self._s.post(agent, cells)

    def reach(self, steps=None):
        return self._s.reach(steps)


def load(scenario, zeta=None):
    """Build a model from a scenario path, JSON text or dict."""
    if isinstance(scenario, dict):
        return Model(_decabs.open(json.dumps(scenario), False, zeta))
    if isinstance(scenario, (str, os.PathLike)) and os.path.exists(scenario):
        return Model(_decabs.open(os.fspath(scenario), True, zeta))
    return Model(_decabs.open(scenario, False, zeta))
