"""Shared fixtures: small maps and their distance tables."""
import numpy as np
import pytest

from trajsynth.distances import distance_table
from trajsynth.gridworld import load_bundled_map, load_map

OPEN_3X3 = "kind=maze horizon=300\nS..\n...\n..G\n"

CORRIDOR_3X1 = "kind=maze horizon=300\nS.G\n"

OPEN_5X5 = ("kind=maze horizon=60\n"
            "S....\n"
            ".....\n"
            ".....\n"
            ".....\n"
            "....G\n")


@pytest.fixture(scope="session")
def maze3():
    return load_map(OPEN_3X3)


@pytest.fixture(scope="session")
def maze3_dist(maze3):
    return distance_table(maze3)


@pytest.fixture(scope="session")
def corridor():
    return load_map(CORRIDOR_3X1)


@pytest.fixture(scope="session")
def corridor_dist(corridor):
    return distance_table(corridor)


@pytest.fixture(scope="session")
def maze5():
    return load_bundled_map("maze_5x5")


@pytest.fixture(scope="session")
def maze5_dist(maze5):
    return distance_table(maze5)


@pytest.fixture(scope="session")
def ctf8():
    return load_bundled_map("ctf_8x8")


@pytest.fixture(scope="session")
def ctf8_dist(ctf8):
    return distance_table(ctf8)


@pytest.fixture(scope="session")
def ctfe8():
    return load_bundled_map("ctfe_8x8")


@pytest.fixture(scope="session")
def ctfe8_dist(ctfe8):
    return distance_table(ctfe8)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
