import math

import pytest

from graphs.library import loop_with_lead, star, unit_interval, unit_loop
from graphs.metric_graph import save_graph
from manifold.fat_mesh import build_mesh

TWO_PI = 2.0 * math.pi


@pytest.fixture
def loop():
    return unit_loop()


@pytest.fixture
def interval():
    return unit_interval()


@pytest.fixture
def star3():
    return star(3)


@pytest.fixture
def loop_lead():
    return loop_with_lead()


@pytest.fixture(scope='session')
def loop_mesh():
    return build_mesh(unit_loop(), 0.1, 0.025)


@pytest.fixture(scope='session')
def star_mesh():
    return build_mesh(star(3), 0.1, 0.025)


@pytest.fixture
def graph_file(tmp_path):
    """Write a graph description into tmp_path and return its path."""

    def write(graph, name='graph.json'):
        path = tmp_path / name
        save_graph(graph, str(path))
        return str(path)

    return write
