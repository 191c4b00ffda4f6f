"""Python bindings for the elemgrasp C++ core."""

import json as _json

from ._elemgrasp import *  # noqa: F401,F403
from ._elemgrasp import ElemGraspError, evaluate_oracle as _evaluate_oracle, read_report as _read_report


def evaluate_oracle(root, splits=("val",)):
    """Report of the ground-truth pipeline over `splits`, as a dict."""
    return _json.loads(_evaluate_oracle(str(root), list(splits)))


def read_report(path):
    """Load a report.json written by `elemgrasp evaluate`, as a dict."""
    return _json.loads(_read_report(str(path)))
