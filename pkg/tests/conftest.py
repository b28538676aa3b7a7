import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent / "oracles"))

from mfgstop._validation import time_grid  # noqa: E402
from mfgstop.model import MonotonePath, linear_function  # noqa: E402


@pytest.fixture
def grid():
    return time_grid(1.0, 0.01)


@pytest.fixture
def zero_path(grid):
    return MonotonePath(grid, np.zeros(grid.size))


@pytest.fixture
def linear():
    return linear_function()
