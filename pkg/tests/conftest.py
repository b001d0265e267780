import pytest
from hypothesis import settings

from slitlaw.numtheory import AlphaSpec, build_table
from slitlaw.surface import build_surface

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def main_table():
    return build_table(AlphaSpec.paper(), 60, 256)


@pytest.fixture(scope="session")
def main_surface():
    return build_surface(AlphaSpec.paper(), k_max=60)


@pytest.fixture(scope="session")
def golden_table():
    return build_table(AlphaSpec.golden(), 60, 256)


CRITERIA_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
