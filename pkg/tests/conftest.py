import numpy as np
import pytest

from composite_ccz.faults import enumerate_full, enumerate_round1


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def round1_report():
    return enumerate_round1(2)


@pytest.fixture(scope="session")
def full_report():
    return enumerate_full(max_weight=4)


@pytest.fixture(scope="session")
def composite():
    from composite_ccz.constructions import composite_ccz_circuit

    return composite_ccz_circuit()


@pytest.fixture(scope="session")
def round2_result(round1_report, composite):
    from composite_ccz.faults import compose_round2

    return compose_round2(round1_report, circuit=composite)


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one line per acceptance criterion for the terminal summary."""
    lines = getattr(request.config, "_acceptance_lines", None)
    if lines is None:
        lines = request.config._acceptance_lines = []
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
