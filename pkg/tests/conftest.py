import os
import socket
import sys
import time

import pytest

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "data")
MOCKS = os.path.join(HERE, "mocks")

SUITE_BUDGET_SECONDS = 300
_SESSION_START = time.perf_counter()
_ACCEPTANCE = []


def mock_command(name):
    return [sys.executable, os.path.join(MOCKS, name)]


# The suite never needs the network; make any attempt fail loudly.
_real_connect = socket.socket.connect


def _guarded_connect(self, address):
    if self.family in (socket.AF_INET, socket.AF_INET6):
        raise RuntimeError(f"network access attempted during tests: {address!r}")
    return _real_connect(self, address)


socket.socket.connect = _guarded_connect


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def vocab_path():
    return os.path.join(DATA, "vocab.txt")


@pytest.fixture
def unk_fixture_path():
    return os.path.join(DATA, "unk_fixture.tsv")


# --- acceptance summary ----------------------------------------------------------

def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.failed and report.when == "setup"):
        _ACCEPTANCE.append((props["criterion"], props.get("title", ""), report.outcome, props.get("detail", "")))


def _suite_elapsed():
    return time.perf_counter() - _SESSION_START


def pytest_sessionfinish(session, exitstatus):
    if _ACCEPTANCE and _suite_elapsed() > SUITE_BUDGET_SECONDS and exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for number, title, outcome, detail in sorted(_ACCEPTANCE):
        status = "PASS" if outcome == "passed" else "FAIL"
        tr.write_line(f"criterion {number:>2}: {status}  {title}" + (f"  [{detail}]" if detail else ""))
    elapsed = _suite_elapsed()
    status = "PASS" if elapsed <= SUITE_BUDGET_SECONDS else "FAIL"
    tr.write_line(f"criterion 10: {status}  whole suite within {SUITE_BUDGET_SECONDS}s, network blocked  "
                  f"[{elapsed:.1f}s]")
