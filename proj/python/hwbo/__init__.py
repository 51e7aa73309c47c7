"""Power- and memory-constrained hyper-parameter optimization.

Thin wrapper over the compiled ``_core`` module. Configs may be given as a
path, a JSON string or a dict; experiment summaries come back as dicts.
"""

import json
import os

from ._core import *  # noqa: F401,F403
from ._core import load_config as _load_config
from ._core import parse_config as _parse_config
from ._core import report as _report
from ._core import run_experiment as _run_experiment


def config(source):
    """Build an ExperimentConfig from a dict, a JSON string or a file path."""
    if isinstance(source, dict):
        return _parse_config(json.dumps(source))
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        return _load_config(os.fspath(source))
    return _parse_config(source)


def run_experiment(cfg, resume=False):
    """Run every method/variant/seed; returns a dict with the decoded summary."""
    if not isinstance(cfg, ExperimentConfig):  # noqa: F405
        cfg = config(cfg)
    result = _run_experiment(cfg, resume)
    result["summary"] = json.loads(result["summary"])
    return result


def report(output_dir):
    """Re-aggregate the journals in output_dir into a summary dict."""
    return json.loads(_report(os.fspath(output_dir)))
