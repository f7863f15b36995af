"""Python bindings for the evtrust simulator."""

import json

from ._core import *  # noqa: F401,F403
from ._core import ExperimentResult, load_config, parse_config, run_experiment

__all__ = [name for name in dir() if not name.startswith("_")]


def summary(result: ExperimentResult) -> dict:
    """summary.json content as a dict."""
    return json.loads(result.summary_json())


def metrics(result: ExperimentResult) -> list[dict]:
    """One dict per round, as written to metrics.jsonl."""
    return [json.loads(line) for line in result.metrics_records()]


def run_file(path: str, threads: int = 1) -> ExperimentResult:
    return run_experiment(load_config(path), threads)


def run_text(text: str, threads: int = 1) -> ExperimentResult:
    return run_experiment(parse_config(text), threads)
