import pytest

from mirrorparity.constants import HBAR, K_B
from mirrorparity.thermal import MirrorParams, boltzmann_ensemble

OMEGA = 1e5
N_NUCLEONS = 10**9


def temperature_for(kT_over_hbar_omega, omega=OMEGA):
    return kT_over_hbar_omega * HBAR * omega / K_B


@pytest.fixture
def mirror():
    return MirrorParams.from_nucleons(N_NUCLEONS, OMEGA, temperature_for(1.0))


@pytest.fixture
def ground_mirror():
    return MirrorParams.from_nucleons(N_NUCLEONS, OMEGA, 0.0)


@pytest.fixture
def thermal_ensemble(mirror):
    return boltzmann_ensemble(mirror)


_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is not None and (rep.when == "call" or rep.failed):
        number, title = mark.args
        prev = _ACCEPTANCE.get(number, (title, True))
        _ACCEPTANCE[number] = (title, prev[1] and rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}")
