import numpy as np
import pytest
from hypothesis import settings

from eqconv.groups import (
    builtin_group,
    cyclic_group,
    dihedral_group,
    natural_action,
    regular_action,
    symmetric_group,
)

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

BUILTIN = ("S3", "S4", "Z4", "Z8", "D4")


def actions_of(name):
    G = builtin_group(name)
    return natural_action(G), regular_action(G)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=BUILTIN)
def builtin(request):
    return builtin_group(request.param)


SMALL_GROUPS = {
    "S3": lambda: symmetric_group(3),
    "S4": lambda: symmetric_group(4),
    "Z5": lambda: cyclic_group(5),
    "D3": lambda: dihedral_group(3),
    "D4": lambda: dihedral_group(4),
}


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
