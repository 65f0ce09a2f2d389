import math

import numpy as np
import pytest

from graphs.comparison import comparison_bounds
from graphs.discretization import fd_oracle_spectrum
from graphs.errors import BoundNotApplicableError, GraphValidationError
from graphs.graph_function import rayleigh
from graphs.library import random_compact_graph
from graphs.secular import eigenfunction, eigenvalues, secular_matrix, weyl_count

PI2 = math.pi ** 2


def assert_spectrum(result, expected, tol):
    assert len(result.eigenvalues) == len(expected)
    for (value, multiplicity), (want, want_multiplicity) in zip(result.eigenvalues, expected):
        assert value == pytest.approx(want, abs=tol)
        assert multiplicity == want_multiplicity


def test_loop_spectrum(loop):
    result = eigenvalues(loop, 180.0)
    assert result.method == 'secular'
    assert_spectrum(result, [(0.0, 1), (4 * PI2, 2), (16 * PI2, 2)], 1e-10)


def test_interval_spectrum(interval):
    assert_spectrum(eigenvalues(interval, 100.0),
                    [(0.0, 1), (PI2, 1), (4 * PI2, 1), (9 * PI2, 1)], 1e-10)


@pytest.mark.parametrize('n', [1, 2, 3])
def test_eigenvalue_on_the_window_edge_is_kept(interval, loop, n):
    edge = (n * math.pi) ** 2
    assert eigenvalues(interval, edge).distinct()[-1] == pytest.approx(edge, abs=1e-9)
    result = eigenvalues(loop, 4 * edge)
    assert result.eigenvalues[-1][0] == pytest.approx(4 * edge, abs=1e-9)
    assert result.eigenvalues[-1][1] == 2


def test_star_spectrum_has_double_levels(star3):
    # cos k = 0 gives two-dimensional eigenspaces, k = n pi simple ones
    assert_spectrum(eigenvalues(star3, 45.0),
                    [(0.0, 1), (PI2 / 4, 2), (PI2, 1), (9 * PI2 / 4, 2), (4 * PI2, 1)], 1e-9)


def test_scaling_multiplies_eigenvalues(loop):
    small = eigenvalues(loop.scaled(0.5), 200.0)
    assert_spectrum(small, [(0.0, 1), (16 * PI2, 2)], 1e-8)


def test_rows_count_multiplicities(loop):
    result = eigenvalues(loop, 180.0)
    assert result.count() == 5
    assert [row[0] for row in result.rows()] == [1, 2, 4]
    assert result.below(50.0).count() == 3


def test_thread_count_does_not_change_roots(loop):
    single = eigenvalues(loop, 180.0, threads=1).values()
    pooled = eigenvalues(loop, 180.0, threads=3).values()
    np.testing.assert_allclose(single, pooled, atol=1e-12)


def test_secular_matrix_rejects_zero(loop):
    with pytest.raises(ValueError):
        secular_matrix(loop, 0.0)
    assert secular_matrix(loop, 1.0).shape == (2, 2)


def test_secular_spectrum_needs_compact_graph(loop_lead):
    with pytest.raises(GraphValidationError):
        eigenvalues(loop_lead, 50.0)


def test_eigenfunctions_are_normalized(loop, interval):
    for graph, k in ((loop, 2 * math.pi), (interval, math.pi), (interval, 3 * math.pi)):
        f = eigenfunction(graph, k)
        assert f.norm() == pytest.approx(1.0, abs=1e-8)
        assert rayleigh(f) == pytest.approx(k * k, rel=1e-6)


def test_double_eigenvalue_gives_orthonormal_pair(loop):
    first = eigenfunction(loop, 2 * math.pi, 0)
    second = eigenfunction(loop, 2 * math.pi, 1)
    assert abs(first.inner(second)) < 1e-8
    with pytest.raises(ValueError):
        eigenfunction(loop, 2 * math.pi, 2)


def test_constant_eigenfunction(star3):
    f = eigenfunction(star3, 0.0)
    assert f.norm() == pytest.approx(1.0)
    assert f.vertex_values['c'] == pytest.approx(1.0 / math.sqrt(3.0))


def test_weyl_term(loop):
    assert weyl_count(loop, 400 * PI2) == pytest.approx(20.0)


@pytest.mark.slow
@pytest.mark.parametrize('seed', range(5))
def test_random_graphs_match_oracle(seed):
    graph = random_compact_graph(seed)
    secular = eigenvalues(graph, 50.0)
    oracle = fd_oracle_spectrum(graph, 50.0)
    assert oracle.method == 'fd-oracle'
    assert len(secular.eigenvalues) == len(oracle.eigenvalues)
    for (value, multiplicity), (reference, reference_multiplicity) in zip(secular.eigenvalues, oracle.eigenvalues):
        assert value == pytest.approx(reference, abs=1e-6)
        assert multiplicity == reference_multiplicity


def test_comparison_bracket():
    assert comparison_bounds(0.0, 0.0, 0.0) == (0.0, 0.0)
    lower, upper = comparison_bounds(1.0, 0.1, 0.1)
    assert upper == pytest.approx(0.5)
    assert lower == pytest.approx(-0.44 / 0.58)
    with pytest.raises(ValueError):
        comparison_bounds(1.0, -0.1, 0.0)
    with pytest.raises(BoundNotApplicableError):
        comparison_bounds(10.0, 0.1, 0.1)
