from functools import lru_cache

import pytest

from ksl.soliton import SolitonParams, build_profile, flat_profile


@lru_cache(maxsize=None)
def soliton(n, lam, phi_max=None):
    return build_profile(SolitonParams(n, lam), phi_max=phi_max)


@pytest.fixture
def make_soliton():
    return soliton


@pytest.fixture
def flat2():
    return flat_profile(2)


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance_lines(request):
    return request.config.stash.setdefault(ACCEPTANCE_LINES, [])


def pytest_terminal_summary(terminalreporter, config):
    # shown even when output capture hides the per-test prints
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
