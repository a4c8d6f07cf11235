import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

DATA = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture
def square():
    return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@pytest.fixture
def triangle():
    # equilateral, side 1
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])


@pytest.fixture
def iris_path():
    return os.path.join(DATA, "iris.csv")


@pytest.fixture
def wine_path():
    return os.path.join(DATA, "wine.csv")
