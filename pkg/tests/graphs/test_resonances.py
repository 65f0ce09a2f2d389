import math

import numpy as np
import pytest

from graphs.errors import GraphValidationError
from graphs.resonance.contour import KWindow, Resonance, classify, find_resonances
from graphs.resonance.dilation import (DilationParams, dilated_fd_matrix, dilated_oracle_eigenvalue, essential_ray,
                                       theta_independence)
from graphs.resonance.outgoing import outgoing_secular, reflection_partner

LN3 = math.log(3.0)
WINDOW = KWindow(0.1, 20.0, -2.0, 0.0)


@pytest.fixture(scope='module')
def loop_lead_roots():
    from graphs.library import loop_with_lead
    return find_resonances(loop_with_lead(), WINDOW)


def test_loop_with_lead_roots(loop_lead_roots):
    assert sum(r.multiplicity for r in loop_lead_roots) == 6
    embedded = sorted(r.k.real for r in loop_lead_roots if r.kind == 'embedded')
    resonances = sorted((r.k for r in loop_lead_roots if r.kind == 'resonance'), key=lambda k: k.real)
    np.testing.assert_allclose(embedded, [2 * math.pi * n for n in (1, 2, 3)], atol=1e-8)
    assert len(resonances) == 3
    for n, k in zip((1, 2, 3), resonances):
        assert k == pytest.approx(complex(2 * math.pi * n, -LN3), abs=1e-8)


def test_roots_have_small_residual(loop_lead_roots):
    for root in loop_lead_roots:
        assert root.residual <= 1e-6
        assert root.method == 'secular'
        assert root.lam == pytest.approx(root.k ** 2)


def test_embedded_values_are_real(loop_lead_roots):
    for root in loop_lead_roots:
        if root.kind == 'embedded':
            assert abs(root.lam.imag) <= 1e-7


def test_window_must_avoid_origin_and_upper_half_plane(loop_lead):
    with pytest.raises(ValueError):
        find_resonances(loop_lead, KWindow(-1.0, 5.0, -1.0, 0.0))
    with pytest.raises(ValueError):
        find_resonances(loop_lead, KWindow(1.0, 5.0, -1.0, 0.5))


def test_compact_graph_has_no_outgoing_matrix(loop):
    with pytest.raises(GraphValidationError):
        outgoing_secular(loop, 1.0)


def test_reflection_symmetry(loop_lead):
    for k in (complex(3.0, -0.4), complex(7.5, -1.2), complex(1.1, -0.05)):
        partner = reflection_partner(k)
        assert partner == complex(-k.real, k.imag)
        det = np.linalg.det(outgoing_secular(loop_lead, k))
        det_partner = np.linalg.det(outgoing_secular(loop_lead, partner))
        assert abs(det_partner) == pytest.approx(abs(det), rel=1e-10)


def test_classify():
    assert classify(complex(2 * math.pi, 0.0)) == 'embedded'
    assert classify(complex(2 * math.pi, -LN3)) == 'resonance'
    assert classify(complex(10.0, -1e-7)) == 'borderline'


def test_window_parsing():
    window = KWindow.parse('0.1,20,-2,0')
    assert window == WINDOW
    assert window.contains(complex(2 * math.pi, -LN3))
    assert not window.contains(complex(21.0, -1.0))
    assert window.corners()[0] == complex(0.1, -2.0)
    with pytest.raises(ValueError):
        KWindow.parse('1,2,3')
    with pytest.raises(ValueError):
        KWindow(2.0, 1.0, -1.0, 0.0)


def test_essential_ray():
    ray = essential_ray(0.5j, 100.0)
    assert ray.angle == pytest.approx(-1.0)
    assert ray.reveals(complex(2 * math.pi, -LN3) ** 2)
    assert not ray.reveals(10.0 * np.exp(-1.2j))
    assert ray.distance(-3.0) == pytest.approx(3.0)


def test_dilation_parameters():
    with pytest.raises(ValueError):
        DilationParams(0.5j, 0.5)
    assert DilationParams(0.2j, 0.5).in_sector(np.exp(0.3j))


def test_dilated_matrix_checks(loop_lead):
    with pytest.raises(ValueError):
        dilated_fd_matrix(loop_lead, -0.5j, 20.0, 1.0 / 64)
    with pytest.raises(ValueError):
        dilated_fd_matrix(loop_lead, 0.5j, 5.0, 1.0 / 64)
    with pytest.raises(ValueError):
        dilated_fd_matrix(loop_lead, 0.5j, 20.0, 0.25)


@pytest.mark.slow
def test_dilated_oracle_finds_resonance_and_embedded_value(loop_lead):
    target = complex(2 * math.pi, -LN3) ** 2
    value = dilated_oracle_eigenvalue(loop_lead, 0.5j, target, 20.0, 1.0 / 64)
    assert abs(value - target) <= 1e-3
    embedded = dilated_oracle_eigenvalue(loop_lead, 0.5j, 4 * math.pi ** 2, 20.0, 1.0 / 64)
    assert abs(embedded - 4 * math.pi ** 2) <= 1e-3


@pytest.mark.slow
def test_resonance_does_not_depend_on_theta(loop_lead):
    resonance = Resonance(complex(2 * math.pi, -LN3), 1, 0.0)
    sweep = theta_independence(loop_lead, resonance, [0.4j, 0.6j, 0.8j])
    assert not sweep.skipped
    assert len(sweep.values) == 3
    assert float(sweep) <= 1e-5


@pytest.mark.slow
def test_masked_resonance_is_skipped(loop_lead):
    resonance = Resonance(complex(2 * math.pi, -LN3), 1, 0.0)
    sweep = theta_independence(loop_lead, resonance, [0.1j, 0.5j])
    assert sweep.skipped == [0.1j]
    assert list(sweep.values) == [0.5j]
    assert sweep.deviation == 0.0
