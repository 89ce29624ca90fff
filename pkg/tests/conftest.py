"""
Shared fixtures for the toolkit tests.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure project root is on sys.path when running the tests directly
ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.append(str(ROOT))

from src.core.space import make_space  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def space3():
    return make_space(3)


@pytest.fixture
def space5():
    return make_space(5)


@pytest.fixture
def space15():
    return make_space(15)


@pytest.fixture
def space31():
    return make_space(31)
