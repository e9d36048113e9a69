"""Pytest configuration file."""
from __future__ import annotations

import pytest

from fvdp_analyser.model import FIGURE_PARAMS, Params
from fvdp_analyser.returnmap import TransitConfig

from .reference_fields import CANARD_LOG, REGULAR_LOG


@pytest.fixture(scope="session")
def figure_params() -> Params:
    return FIGURE_PARAMS


@pytest.fixture(scope="session")
def sweep_params() -> Params:
    """The figure forcing at eps = 1e-2, cheap enough to integrate in unit tests."""
    return Params(FIGURE_PARAMS.a, FIGURE_PARAMS.omega, 1e-2)


@pytest.fixture(scope="session")
def transit() -> TransitConfig:
    return TransitConfig()


@pytest.fixture
def canard_log():
    return CANARD_LOG.copy()


@pytest.fixture
def regular_log():
    return REGULAR_LOG.copy()


@pytest.fixture
def output_env(tmp_path, monkeypatch):
    """Point the default output directory at a temporary path."""
    monkeypatch.setenv("FVDP_OUTPUT_DIR", str(tmp_path / "out"))
    return tmp_path / "out"
