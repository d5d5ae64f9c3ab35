import numpy as np
import pytest

from riskenv.space import uniform_space

X0 = (-4.0, -1.0, 2.0, 3.0)


@pytest.fixture
def u4():
    return uniform_space(4)


@pytest.fixture
def x0():
    return np.array(X0)
