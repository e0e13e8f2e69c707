"""Shared fixtures and the acceptance summary printed at the end of a run."""

from __future__ import annotations

import functools

import numpy as np
import pytest

from seamsentinel.pipeline import commands as cmd
from seamsentinel.pipeline.config import PipelineConfig
from seamsentinel.sim import simulate_experiment

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def record_acceptance(number: int, title: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE[number] = (title, bool(passed), detail)


@pytest.fixture
def acceptance():
    return record_acceptance


@functools.lru_cache(maxsize=None)
def scenario_dataset(scenario: str, seed: int):
    """Featurized default dataset for one scenario and seed (cached per session)."""
    cfg = PipelineConfig.for_scenario(scenario, seed=seed)
    recs = simulate_experiment(cfg.scenario, seed)
    return cfg, cmd.build_dataset(cfg, recs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        line = f"ACCEPTANCE [{status}] {number:>2d} {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
