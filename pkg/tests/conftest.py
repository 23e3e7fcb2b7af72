from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings

from orbispec.catalog import get_preset
from orbispec.heat_fit import fit_action
from orbispec.spectrum import flat_orbifold_spectrum, sphere_orbifold_spectrum

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_KEY = pytest.StashKey[list]()


@lru_cache(maxsize=None)
def cached_fit(name: str):
    return fit_action(get_preset(name).action)


@lru_cache(maxsize=None)
def cached_spectrum(name: str, size: float):
    action = get_preset(name).action
    if action.geometry.is_torus:
        return flat_orbifold_spectrum(action, size)
    return sphere_orbifold_spectrum(action, int(size))


@pytest.fixture
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
