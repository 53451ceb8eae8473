"""Shared fixtures plus a terminal summary of the acceptance criteria."""
from __future__ import annotations

import re

import numpy as np
import pytest

from upsample.tensor import Tensor


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_tensor(rng, dims, lo=-1.0, hi=1.0) -> Tensor:
    return Tensor(rng.uniform(lo, hi, tuple(dims)).astype(np.float32))


_ACCEPTANCE_RESULTS: dict[str, str] = {}
_CRITERION_RE = re.compile(r"test_criterion_(\d+\w*)_?(.*)")


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    m = _CRITERION_RE.match(name)
    if m:
        label = f"criterion {m.group(1)}" + (f" ({m.group(2)})" if m.group(2) else "")
        _ACCEPTANCE_RESULTS[label] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for label in sorted(_ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{label}: {_ACCEPTANCE_RESULTS[label]}")
