import numpy as np
import pytest

from nlslab.functionals import ModelParams
from nlslab.grid import build_grid
from nlslab.verify import gaussian, reference_ground_state

# One summary line per acceptance criterion, printed at the end of the session.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def grid256():
    return build_grid(2, [256, 256], [16.0, 16.0])


@pytest.fixture(scope="session")
def small_grid():
    return build_grid(2, [64, 64], [8.0, 8.0])


@pytest.fixture(scope="session")
def params2d():
    return ModelParams(2, 5.0, 1.0)


@pytest.fixture(scope="session")
def g256(grid256):
    return gaussian(grid256)


@pytest.fixture(scope="session")
def ground256(grid256, params2d):
    """Converged ground state for N=2, p=5, omega=1 on 256^2, L=16."""
    return reference_ground_state(grid256, params2d)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def report():
    """Record the one-line verdict of an acceptance criterion and echo it."""

    def _report(number: int, title: str, checks: list[tuple[str, bool, str]],
                elapsed: float, budget: float | None = None):
        if budget is not None:
            checks = checks + [(f"runtime under {budget:g} s", elapsed < budget,
                                f"{elapsed:.1f} s")]
        failed = [f"{name} ({detail})" for name, ok, detail in checks if not ok]
        verdict = "PASS" if not failed else "FAIL"
        line = f"criterion {number} {verdict}: {title} [{elapsed:.1f} s]"
        if failed:
            line += "; failed: " + "; ".join(failed)
        ACCEPTANCE_LINES[number * 10 + len([k for k in ACCEPTANCE_LINES if k // 10 == number])] = line
        print(line)
        for name, ok, detail in checks:
            print(f"    {'ok  ' if ok else 'FAIL'} {name}: {detail}")
        return not failed

    return _report
