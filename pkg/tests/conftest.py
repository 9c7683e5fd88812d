import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spectrum_nash import DemandModel, MarketConfig, PenaltyModel  # noqa: E402

POWER_H = (1.0, 128.0, 2187.0)  # i**7


def make_setting_a(m=1):
    """Two primaries, one state, identity penalty."""
    return MarketConfig(2, DemandModel.fixed(m), (0.5,), 1.0, 2.0, PenaltyModel("additive", (0.0,)))


def make_setting_b(m=1):
    """Two primaries, two states, additive penalties p - i."""
    return MarketConfig(2, DemandModel.fixed(m), (0.3, 0.3), 0.0, 1.0,
                        PenaltyModel("additive", (1.0, 2.0)))


def make_power_market(m=10, r=0.1, l=20):
    return MarketConfig(l, DemandModel.fixed(m), (r, r, r), 1.0, 100.0,
                        PenaltyModel("power_shift", POWER_H, r=10.0))


@pytest.fixture
def setting_a():
    return make_setting_a()


@pytest.fixture
def setting_b():
    return make_setting_b()


@pytest.fixture
def power_market():
    return make_power_market()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
