import math

import numpy as np
import pytest

from coupling.cutoff import Cutoff
from coupling.identification import (apply_J, apply_J1, apply_J1prime, column_averages, identification,
                                     transverse_average, vertex_average)
from graphs.errors import GraphValidationError
from graphs.graph_function import GraphFunction
from graphs.library import unit_interval


def wave(graph, per_unit=40):
    return GraphFunction.from_callables(graph, {'e': lambda x: np.cos(2 * math.pi * x) + 0.5},
                                        samples_per_unit=per_unit)


def is_continuous(mesh, u):
    merged = np.zeros(mesh.n_nodes)
    merged[mesh.conforming] = u
    return np.allclose(u, merged[mesh.conforming], atol=1e-12)


def test_J_is_an_isometry(loop_mesh):
    ident = identification(loop_mesh)
    _, M_b = loop_mesh.broken_matrices()
    gram = (ident.J.T @ M_b @ ident.J - ident.M0).toarray()
    assert np.max(np.abs(gram)) < 1e-12


def test_adjoint_inverts_J(star_mesh):
    ident = identification(star_mesh)
    f = np.random.default_rng(4).standard_normal(ident.dofmap.n_dofs)
    np.testing.assert_allclose(ident.adjoint(ident.J @ f), f, atol=1e-10)
    g = f + 1j * f[::-1]
    np.testing.assert_allclose(ident.adjoint(ident.J @ g), g, atol=1e-10)


def test_identification_is_cached(loop_mesh):
    assert identification(loop_mesh) is identification(loop_mesh)


def test_apply_J_norm(loop, loop_mesh):
    f = wave(loop)
    ident = identification(loop_mesh)
    vector = ident.graph_vector(f)
    _, M_b = loop_mesh.broken_matrices()
    u = apply_J(f, loop_mesh)
    assert u @ (M_b @ u) == pytest.approx(vector @ (ident.M0 @ vector), rel=1e-12)
    # zero on the vertex region, so the interface copies disagree
    assert not is_continuous(loop_mesh, u)


def test_apply_J1_is_continuous(loop, loop_mesh):
    u = apply_J1(wave(loop), loop_mesh)
    assert is_continuous(loop_mesh, u)
    region = loop_mesh.vertex_regions['v'].indices()
    np.testing.assert_allclose(u[region], 1.5 / math.sqrt(0.1))


def test_grid_must_refine_the_strips(loop, loop_mesh, star3):
    with pytest.raises(ValueError):
        apply_J(wave(loop, per_unit=30), loop_mesh)
    with pytest.raises(GraphValidationError):
        apply_J(GraphFunction.constant(star3), loop_mesh)


def test_averaging_map_undoes_J1(loop, loop_mesh):
    f = wave(loop)
    back = apply_J1prime(apply_J1(f, loop_mesh), loop_mesh)
    np.testing.assert_allclose(back.values['e'], f.values['e'], atol=1e-10)
    assert back.vertex_values['v'] == pytest.approx(f.vertex_values['v'])


def test_averaging_map_of_constants(star_mesh):
    back = apply_J1prime(np.full(star_mesh.n_nodes, 2.0), star_mesh)
    for samples in back.values.values():
        np.testing.assert_allclose(samples, 2.0 * math.sqrt(0.1))


def test_averaging_map_is_continuous(star_mesh):
    u = np.random.default_rng(9).standard_normal(star_mesh.n_nodes)
    back = apply_J1prime(u, star_mesh)
    for e in star_mesh.graph.internal_edges:
        assert back.values[e.id][0] == back.vertex_values[e.tail]
        assert back.values[e.id][-1] == back.vertex_values[e.head]
    center = vertex_average(u, star_mesh, 'c')
    assert back.vertex_values['c'] == pytest.approx(math.sqrt(0.1) * center)


def test_transverse_average(loop, loop_mesh):
    f = wave(loop)
    u = apply_J1(f, loop_mesh)
    for x in (0.0, 0.3, 0.61, 1.0):
        expected = float(f.evaluate('e', x)) / math.sqrt(0.1)
        assert transverse_average(u, loop_mesh, 'e', x) == pytest.approx(expected, abs=1e-10)
    np.testing.assert_allclose(column_averages(u, loop_mesh, 'e'), f.values['e'] / math.sqrt(0.1))
    with pytest.raises(ValueError):
        transverse_average(u, loop_mesh, 'e', 1.5)


def test_cutoff_profile():
    rho = Cutoff(1.0)
    assert rho(0.0) == 1.0
    assert rho(0.25) == pytest.approx(0.5)
    assert rho(0.5) == pytest.approx(0.0)
    assert rho(0.9) == pytest.approx(0.0)
    assert rho.derivative(0.0) == 0.0
    assert rho.derivative(0.5) == pytest.approx(0.0)
    assert rho.support == 0.5
    with pytest.raises(ValueError):
        Cutoff(0.0)


def test_custom_cutoff_is_used():
    from manifold.fat_mesh import build_mesh
    mesh = build_mesh(unit_interval(), 0.2, 0.05)
    u = np.linspace(0.0, 1.0, mesh.n_nodes)
    narrow = apply_J1prime(u, mesh, Cutoff(0.2))
    wide = apply_J1prime(u, mesh)
    assert narrow.values['e'][0] == wide.values['e'][0]
    assert not np.allclose(narrow.values['e'], wide.values['e'])
