"""Shared fixtures: small standard graphs and their routing profiles.

Session scope keeps eigensolves and policy construction from repeating across
test modules; everything here is deterministic.
"""

import pytest

from obroute.graph import build_graph, complete, cycle, hypercube, random_regular
from obroute.spectral import routing_profile
from obroute.splittable import compute_policy


@pytest.fixture(scope="session")
def k4():
    return complete(4)


@pytest.fixture(scope="session")
def c5():
    return cycle(5)


@pytest.fixture(scope="session")
def h3():
    return hypercube(3)


@pytest.fixture(scope="session")
def rr16():
    return random_regular(16, 4, seed=0)


@pytest.fixture(scope="session")
def star4():
    # center 0, three leaves; degrees (3, 1, 1, 1)
    return build_graph([(0, 1, 1), (0, 2, 1), (0, 3, 1)], 4)


@pytest.fixture(scope="session")
def k4_routed(k4):
    return routing_profile(k4)


@pytest.fixture(scope="session")
def h3_routed(h3):
    return routing_profile(h3)


@pytest.fixture(scope="session")
def rr16_routed(rr16):
    return routing_profile(rr16)


@pytest.fixture(scope="session")
def k4_policy(k4_routed):
    routed, profile = k4_routed
    policy, traces = compute_policy(routed, profile, store_traces=True)
    return routed, profile, policy, traces


_CRITERION_LINES = pytest.StashKey()


@pytest.fixture(scope="session")
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(_CRITERION_LINES, [])

    def record(number: int, name: str, passed: bool, detail: str) -> None:
        line = f"{'PASS' if passed else 'FAIL'} criterion-{number:02d} {name}: {detail}"
        lines.append((number, line))
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERION_LINES, [])
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
