"""Shared fixtures: grids, dyadic banks and seeded generators."""

import numpy as np
import pytest

from src.littlewood_paley import build_bank
from src.spectral_core import Grid
from src.utils.config_manager import ConfigManager


@pytest.fixture(scope="session")
def grid8():
    return Grid(8)


@pytest.fixture(scope="session")
def grid16():
    return Grid(16)


@pytest.fixture(scope="session")
def grid32():
    return Grid(32)


@pytest.fixture(scope="session")
def bank16(grid16):
    return build_bank(grid16, cutoff_N=2)


@pytest.fixture(scope="session")
def bank32(grid32):
    return build_bank(grid32, cutoff_N=2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fresh_config():
    """Drop the config singleton before and after a test that swaps config files."""
    ConfigManager.reset()
    yield
    ConfigManager.reset()
