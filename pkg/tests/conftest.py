import math

import pytest

from tdoaseek import ScenarioConfig


def make_config(**overrides) -> ScenarioConfig:
    """Nominal scenario (oracle, noise-free) with keyword tweaks like sim_t_max=60."""
    cfg = ScenarioConfig()
    for key, value in overrides.items():
        section, field = key.split("_", 1)
        setattr(getattr(cfg, section), field, value)
    return cfg


@pytest.fixture
def nominal_config() -> ScenarioConfig:
    return make_config()
