import numpy as np
import pytest

from keplerbilliards.tables import StringSpec, WidthFourierSpec, make_ellipse, make_string_table, make_width_table

# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")


@pytest.fixture(scope="session")
def ellipse():
    return make_ellipse(2.0, 1.0)


@pytest.fixture(scope="session")
def circle():
    return make_ellipse(1.0, 1.0)


@pytest.fixture(scope="session")
def width_spec():
    return WidthFourierSpec({0: 1.0, 3: 1.0 / 3.0})


@pytest.fixture(scope="session")
def width_table(width_spec):
    return make_width_table(width_spec)


@pytest.fixture(scope="session")
def string_table(width_spec):
    return make_string_table(StringSpec(width_spec, 3.0 + 0j, 6.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
