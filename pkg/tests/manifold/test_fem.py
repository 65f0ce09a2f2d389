import math

import numpy as np
import pytest

from manifold.fem import assemble_p1, p1_integral, triangle_areas
from manifold.neumann import constant_in_kernel, neumann_eigs
from manifold.vertex_template import (RectangleRegion, build_vertex_template, cell_count, shoelace,
                                      template_constants, tensor_grid)

PI2 = math.pi ** 2


def test_unit_square_assembly():
    nodes, triangles = tensor_grid((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), 4, 4)
    A, B = assemble_p1(nodes, triangles)
    assert constant_in_kernel(A)
    assert B.sum() == pytest.approx(1.0)
    assert triangle_areas(nodes, triangles).sum() == pytest.approx(1.0)
    np.testing.assert_allclose((A - A.T).toarray(), 0.0, atol=1e-14)
    # x is harmonic with unit gradient: energy equals the area
    x = nodes[:, 0]
    assert x @ (A @ x) == pytest.approx(1.0)
    assert p1_integral(nodes, triangles, x) == pytest.approx(0.5)


def test_degenerate_triangle_is_rejected():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(ValueError):
        assemble_p1(nodes, np.array([[0, 1, 2]]))


def test_unit_square_spectrum():
    mesh = RectangleRegion(1.0, 1.0).triangulate(1.0 / 40)
    result = neumann_eigs(mesh, 15.0)
    assert result.method == 'fem'
    values = result.values()
    assert values.size == 3
    assert values[0] == 0.0
    np.testing.assert_allclose(values[1:], [PI2, PI2], rtol=1e-3)
    assert result.vectors.shape[1] == 3


def test_negative_window_is_rejected():
    mesh = RectangleRegion(1.0, 1.0).triangulate(0.25)
    with pytest.raises(ValueError):
        neumann_eigs(mesh, -1.0)


def test_rectangle_constants():
    vol, lambda2 = template_constants(RectangleRegion(1.0, 1.0))
    assert vol == 1.0
    assert lambda2 == pytest.approx(PI2, rel=1e-4)
    vol, lambda2 = template_constants(RectangleRegion(2.0, 1.0))
    assert vol == 2.0
    assert lambda2 == pytest.approx(PI2 / 4, rel=1e-4)


def test_helpers():
    assert cell_count(1.0, 0.25) == 4
    assert cell_count(1.0, 0.3) == 4
    assert cell_count(0.01, 0.25) == 1
    assert shoelace(np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]])) == pytest.approx(2.0)
