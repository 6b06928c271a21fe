"""Shared fixtures.

The two time-stepped reference solutions take several seconds each to build
and self-check, so they are computed once per session and shared by every
test that inspects them.
"""

import pytest

from cpinn.problems import cached_reference


@pytest.fixture(scope="session")
def schrodinger_grid():
    return cached_reference("schrodinger")


@pytest.fixture(scope="session")
def allen_cahn_grid():
    return cached_reference("allen_cahn")
