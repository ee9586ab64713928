import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cascadebandit.model import Params  # noqa: E402


def make_params(delta, pi, e1, e0=1.0, n=1):
    return Params.from_expectations(delta, pi, e1, e0, n)


@pytest.fixture
def params_a():
    # delta=0.2, pi=0.6, x_high=4, x_low=-1, three agents
    return Params(0.2, 0.6, 4.0, -1.0, 3)
