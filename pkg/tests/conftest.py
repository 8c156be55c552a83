import pytest
from hypothesis import HealthCheck, settings

from probinc.kb import parse_kb

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

OUTLIER_TEXT = """\
var A
var B
(A | !B)[0.8]
(A | B)[0.6]
(B)[0.5]
(A)[0.2]
"""
SYMMETRIC_TEXT = """\
var A
var B
(A | B)[1]
(B)[1]
(A)[0]
"""
TWO_SHIFTS_TEXT = """\
var A
var B
var C
(A | C)[0.7]
(B | !C)[0.8]
(A)[0.2]
(B)[0.3]
(C)[0.5]
"""
NO_MODEL_TEXT = """\
var A
var B
(A | B)[0.5]
(B)[0.5]
(A)[0.1]
"""


@pytest.fixture(scope="session")
def outlier():
    return parse_kb(OUTLIER_TEXT)


@pytest.fixture(scope="session")
def symmetric():
    return parse_kb(SYMMETRIC_TEXT)


@pytest.fixture(scope="session")
def two_shifts():
    return parse_kb(TWO_SHIFTS_TEXT)


@pytest.fixture(scope="session")
def no_model():
    return parse_kb(NO_MODEL_TEXT)


_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the assertion itself stays in the test."""

    def record(name: str, passed: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status}  {name}" + (f"  ({detail})" if detail else ""))
