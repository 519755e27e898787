import pytest
from hypothesis import settings

settings.register_profile("fast", max_examples=60, deadline=None)
settings.load_profile("fast")


@pytest.fixture(scope="session")
def dp_raster():
    from fibdpv.rules import DP_RULE
    from fibdpv.window import attractor_raster, window_ifs

    return attractor_raster(window_ifs(DP_RULE), 8)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
