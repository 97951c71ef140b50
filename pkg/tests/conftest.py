"""Shared fixtures: canonical parameter sets used across the suite."""

import numpy as np
import pytest

from maxstorm import MarkovParams, SiteSet, SmithParams


@pytest.fixture
def smith_identity() -> SmithParams:
    return SmithParams(1.0, 0.0, 1.0)


@pytest.fixture
def markov_standard() -> MarkovParams:
    return MarkovParams(0.7, tau=(-1.0, -1.0))


@pytest.fixture
def one_site() -> SiteSet:
    return SiteSet.planar(np.array([[0.0, 0.0]]))
