from __future__ import annotations

import numpy as np
import pytest

from helpers import gaussian_clusters


@pytest.fixture(scope="session")
def cluster_data():
    """10 well-separated labeled clusters in R^50, 30 points each."""
    return gaussian_clusters()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
