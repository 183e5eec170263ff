import json
import sys
from pathlib import Path

import numpy as np
import pytest

import kle

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def golden_exp_ell1():
    return np.array(json.loads((DATA / "exp_ell1_n2000.json").read_text())["lambdas"])


@pytest.fixture(scope="session")
def unit_trap_500():
    return kle.make_trapezoid((0.0, 1.0), 500)


@pytest.fixture(scope="session")
def exp_dec_500(unit_trap_500):
    return kle.nystrom_eigen(kle.Exponential(1.0, 1.0), unit_trap_500)


@pytest.fixture(scope="session")
def exp_dec_2000():
    return kle.nystrom_eigen(kle.Exponential(1.0, 1.0), kle.make_trapezoid((0.0, 1.0), 2000))


@pytest.fixture(scope="session")
def brownian_dec_2000():
    return kle.nystrom_eigen(kle.BrownianMin(), kle.make_trapezoid((0.0, 1.0), 2000), 10)


ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail=""):
    """Log one acceptance criterion; printed in the terminal summary."""
    ACCEPTANCE_LINES.append((number, f"[{'PASS' if passed else 'FAIL'}] AC{number:02d} {title}: {detail}"))
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES, key=lambda item: item[0]):
            terminalreporter.write_line(line)
