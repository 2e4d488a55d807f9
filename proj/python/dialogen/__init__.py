"""Python interface to the dialogen workbench."""

import json
import os

from . import _core
from ._core import DivergenceError, ParseError, UsageError, ValidationError

__all__ = ["Workbench", "ValidationError", "ParseError", "UsageError", "DivergenceError"]


def _dumps(x):
    return json.dumps(x)


class Workbench:
    """Schema, database and simulator loaded from a run config.

    `overrides` maps environment-style keys (e.g. "DIALOGEN_PPO_ACTOR_LR")
    to string values and is applied on top of the file.
    """

    def __init__(self, config=None, overrides=None):
        cfg = os.fspath(config) if config is not None else None
        self._wb = _core.Workbench(cfg, _dumps({k: str(v) for k, v in (overrides or {}).items()}))

    @property
    def config(self):
        return json.loads(self._wb.config())

    @property
    def schema(self):
        return json.loads(self._wb.schema())

    def gen_data(self, run_dir):
        return json.loads(self._wb.gen_data(os.fspath(run_dir)))

    def warmup(self, run_dir):
        return json.loads(self._wb.warmup(os.fspath(run_dir)))

    def train_ppo(self, run_dir, checkpoint=None):
        return json.loads(self._wb.train_ppo(os.fspath(run_dir), _path(checkpoint)))

    def evaluate(self, run_dir, checkpoint=None):
        return json.loads(self._wb.evaluate(os.fspath(run_dir), _path(checkpoint)))

    def simulate(self, seed=0, checkpoint=None):
        return json.loads(self._wb.simulate(seed, _path(checkpoint)))

    def sample_goal(self, seed):
        return json.loads(self._wb.sample_goal(seed))

    def linearize_target(self, act):
        return json.loads(self._wb.linearize_target(_dumps(act)))

    def parse_act_text(self, tokens):
        if isinstance(tokens, str):
            tokens = tokens.split()
        return json.loads(self._wb.parse_act_text(list(tokens)))

    def shaping_bonus(self, goal, acts, lam=3.0):
        """Total shaping bonus of consecutive system acts within one dialogue."""
        return self._wb.shaping_bonus(_dumps(goal), [_dumps(a) for a in acts], lam)

    def build_llm_prompt(self, history):
        return self._wb.build_llm_prompt(_dumps(history))

    def parse_llm_reply(self, text):
        return json.loads(self._wb.parse_llm_reply(text))


def _path(p):
    return os.fspath(p) if p is not None else None
