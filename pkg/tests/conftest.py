"""Shared fixtures for the TransNN test suite"""

import numpy as np
import pytest

from transnn.error_handler import error_tracker
from transnn.network_model import write_spec


@pytest.fixture
def tracker():
    error_tracker.reset()
    yield error_tracker
    error_tracker.reset()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def spec_file(tmp_path):
    """Write a NetworkSpec to a JSON file and return its path"""
    def _write(spec, name="spec.json"):
        path = tmp_path / name
        write_spec(spec, path)
        return path
    return _write
