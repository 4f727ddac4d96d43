"""Shared test helpers plus the acceptance-criteria summary hook."""

import numpy as np
import pytest

# One line per acceptance criterion, printed after the run so the pass/fail
# status survives pytest's output capturing.
ACCEPTANCE_LINES = []


def record_criterion(name, passed, detail):
    ACCEPTANCE_LINES.append((name, bool(passed), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_LINES:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_spd(rng, m, cond_max=1e6):
    """Random SPD matrix with condition number at most cond_max."""
    Q, _ = np.linalg.qr(rng.normal(size=(m, m)))
    lo = 1.0 / np.sqrt(cond_max)
    hi = np.sqrt(cond_max)
    w = np.exp(rng.uniform(np.log(lo), np.log(hi), size=m))
    return (Q * w) @ Q.T


def random_unit3(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)
