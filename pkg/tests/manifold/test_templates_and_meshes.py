import logging
import math

import numpy as np
import pytest

from graphs.errors import GraphValidationError
from graphs.library import random_compact_graph, star, unit_interval, unit_loop
from manifold.fat_mesh import (HEAD, TAIL, build_mesh, expected_area, interface_length_ok, strip_cell_counts,
                               transverse_threshold, vertex_ends)
from manifold.neumann import constant_in_kernel, neumann_eigs
from manifold.vertex_template import build_vertex_template


@pytest.mark.parametrize('deg, volume', [(1, 1.5), (2, 2.0)])
def test_rectangular_templates(deg, volume):
    template = build_vertex_template(deg, 1.0, constants=False)
    assert template.volume == pytest.approx(volume)
    mesh = template.triangulate(1.0 / 8)
    assert len(mesh.interfaces) == deg
    assert mesh.area == pytest.approx(volume)


@pytest.mark.parametrize('deg', [3, 4, 5, 8])
def test_polygon_templates(deg):
    template = build_vertex_template(deg, 1.0, constants=False)
    mesh = template.triangulate(1.0 / 8)
    assert mesh.area == pytest.approx(template.volume, rel=1e-10)
    assert len(mesh.interfaces) == deg
    for interface in mesh.interfaces:
        assert interface.size == 9
        points = mesh.nodes[interface]
        assert np.linalg.norm(points[-1] - points[0]) == pytest.approx(1.0)
    A, _ = mesh.assemble()
    assert constant_in_kernel(A)


def test_template_arguments():
    with pytest.raises(ValueError):
        build_vertex_template(0, 1.0)
    with pytest.raises(ValueError):
        build_vertex_template(3, 1.5)


def test_template_constants_are_cached_on_the_template():
    template = build_vertex_template(3, 1.0)
    assert template.lambda2 is not None and template.lambda2 > 0
    assert template.step == pytest.approx(1.0 / 16)


def test_loop_mesh_geometry(loop_mesh):
    assert loop_mesh.area == pytest.approx(expected_area(loop_mesh), rel=1e-12)
    assert loop_mesh.area == pytest.approx(1.0 * 0.1 + 2.0 * 0.01)
    assert loop_mesh.is_connected()
    # the fat loop is an annulus
    assert loop_mesh.euler_characteristic() == 0
    assert interface_length_ok(loop_mesh)
    assert strip_cell_counts(loop_mesh) == {'e': 40}


def test_star_mesh_geometry(star_mesh):
    assert star_mesh.area == pytest.approx(expected_area(star_mesh), rel=1e-10)
    assert star_mesh.is_connected()
    assert star_mesh.euler_characteristic() == 1
    assert interface_length_ok(star_mesh)
    assert star_mesh.region_area(('edge', 'e0')) == pytest.approx(0.1)


def test_random_graph_mesh():
    graph = random_compact_graph(2)
    mesh = build_mesh(graph, 0.2, 0.05)
    assert mesh.is_connected()
    cycles = len(graph.edges) - len(graph.vertices) + 1
    assert mesh.euler_characteristic() == 1 - cycles
    assert mesh.area == pytest.approx(expected_area(mesh), rel=1e-10)


def test_vertex_ends_list_loop_twice(loop, star3):
    assert vertex_ends(loop, 'v') == [('e', TAIL), ('e', HEAD)]
    assert vertex_ends(star3, 'p1') == [('e1', HEAD)]


def test_broken_and_conforming_numbering(loop_mesh):
    assert loop_mesh.n_nodes < loop_mesh.n_broken
    u = np.arange(loop_mesh.n_nodes, dtype=float)
    broken = loop_mesh.as_broken(u)
    assert broken.shape == (loop_mesh.n_broken,)
    np.testing.assert_array_equal(broken, u[loop_mesh.conforming])
    with pytest.raises(ValueError):
        loop_mesh.as_broken(np.zeros(3))


def test_mesh_tables(star_mesh):
    nodes, triangles, regions = star_mesh.tables()
    assert len(nodes) == star_mesh.n_broken
    assert len(triangles) == star_mesh.triangles.shape[0]
    assert sum(row[3] for row in regions) == pytest.approx(star_mesh.area)


def test_build_mesh_limits(loop_lead):
    with pytest.raises(ValueError):
        build_mesh(unit_loop(), 0.6, 0.1)
    with pytest.raises(ValueError):
        build_mesh(unit_loop(), 0.1, 0.05)
    with pytest.raises(GraphValidationError):
        build_mesh(loop_lead, 0.1, 0.025)


def test_nested_refinement_keeps_area():
    coarse = build_mesh(unit_interval(), 0.2, 0.05)
    fine = build_mesh(unit_interval(), 0.2, 0.05, refine=2)
    assert fine.n_nodes > coarse.n_nodes
    assert fine.area == pytest.approx(coarse.area, rel=1e-12)


def test_fat_loop_spectrum_starts_with_constants(loop_mesh):
    result = neumann_eigs(loop_mesh, 100.0)
    assert result.eigenvalues[0] == (0.0, 1)
    # vertex regions add mass, so the first level drops below 4 pi^2
    assert 0.0 < result.distinct()[1] < 4 * math.pi ** 2
    assert not any('untrusted' in flag for flag in result.flags)


def test_transverse_guard(caplog):
    mesh = build_mesh(star(3), 0.2, 0.05)
    guard = 0.5 * transverse_threshold(0.2)
    assert guard == pytest.approx(0.5 * math.pi ** 2 / 0.04)
    with caplog.at_level(logging.WARNING):
        result = neumann_eigs(mesh, guard + 20.0)
    assert 'transverse guard' in caplog.text
    untrusted = bool(np.any(result.values() > guard))
    assert untrusted == any('untrusted' in flag for flag in result.flags)
