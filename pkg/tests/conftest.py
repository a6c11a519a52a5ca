import os
from pathlib import Path

import numpy as np
import pytest

ALARM_ENV = "CARELAB_ALARM_BIF"


def alarm_path():
    path = os.environ.get(ALARM_ENV)
    return path if path and Path(path).is_file() else None


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Textbook "asia" network, hand-written so the tests need no downloads.
ASIA_BIF = """
network asia { }
variable asia { type discrete [ 2 ] { yes, no }; }
variable tub { type discrete [ 2 ] { yes, no }; }
variable smoke { type discrete [ 2 ] { yes, no }; }
variable lung { type discrete [ 2 ] { yes, no }; }
variable either { type discrete [ 2 ] { yes, no }; }
variable dysp { type discrete [ 2 ] { yes, no }; }
probability ( asia ) { table 0.01, 0.99; }
probability ( tub | asia ) {
  (yes) 0.05, 0.95;
  (no) 0.01, 0.99;
}
probability ( smoke ) { table 0.5, 0.5; }
probability ( lung | smoke ) {
  (yes) 0.1, 0.9;
  (no) 0.01, 0.99;
}
probability ( either | lung, tub ) {
  (yes, yes) 1.0, 0.0;
  (no, yes) 1.0, 0.0;
  (yes, no) 1.0, 0.0;
  (no, no) 0.0, 1.0;
}
probability ( dysp | either ) {
  (yes) 0.8, 0.2;
  (no) 0.1, 0.9;
}
"""


@pytest.fixture
def asia_text():
    return ASIA_BIF


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod and mod.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.REPORT):
            terminalreporter.write_line(line)
