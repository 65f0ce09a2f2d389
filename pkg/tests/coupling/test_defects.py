import logging
import math

import numpy as np
import pytest

from coupling.defects import (DefectReport, hausdorff_distance, isolating_interval,
                              projection_and_eigenfunction_defect, quasi_unitarity_defect, quasi_unitarity_profile,
                              sandwich_defect)
from graphs.library import star
from graphs.secular import eigenvalues
from graphs.spectral_result import SpectralResult
from manifold.fat_mesh import build_mesh

PI2 = math.pi ** 2


def test_constant_mode_defect_on_the_loop(loop, loop_mesh):
    # vertex mass eps^2 * 2 against total mass eps + eps^2 * 2
    profile = quasi_unitarity_profile(loop, loop_mesh, 5)
    assert profile.shape == (5,)
    assert profile[0] == pytest.approx(math.sqrt(1.0 / 6.0), rel=1e-6)
    assert quasi_unitarity_defect(loop, loop_mesh) == pytest.approx(float(np.max(profile)))
    assert np.all(profile <= 1.0)


def test_quasi_unitarity_needs_enough_modes(loop, loop_mesh):
    with pytest.raises(ValueError):
        quasi_unitarity_defect(loop, loop_mesh, 4)


def test_sandwich_defect_is_a_contraction(loop, loop_mesh):
    delta = sandwich_defect(loop, loop_mesh)
    assert 0.0 < delta <= 1.0 + 1e-8
    assert sandwich_defect(loop, loop_mesh, seed=0) == pytest.approx(delta, rel=1e-6)


def star_interval(graph):
    # pi^2 is the first simple nonzero level of the 3-star
    return isolating_interval(eigenvalues(graph, 30.0).eigenvalues, 2)


def test_projection_and_eigenfunction_on_the_star(star3, star_mesh):
    a, b = star_interval(star3)
    assert a < PI2 < b
    proj, eigfun = projection_and_eigenfunction_defect(star3, star_mesh, (a, b))
    assert 0.0 <= proj <= 2.0
    assert 0.0 <= eigfun <= 2.0


def test_projection_only(star3, star_mesh):
    a, b = star_interval(star3)
    proj, eigfun = projection_and_eigenfunction_defect(star3, star_mesh, (a, b), eigenfunction=False)
    assert math.isnan(eigfun)
    assert proj >= 0.0


def test_interval_away_from_all_spectra(star3, star_mesh):
    proj, _ = projection_and_eigenfunction_defect(star3, star_mesh, (14.0, 15.0), eigenfunction=False)
    assert proj == 0.0


def test_double_level_has_no_eigenfunction_defect(loop, loop_mesh):
    interval = (2 * PI2, 6 * PI2)
    proj, eigfun = projection_and_eigenfunction_defect(loop, loop_mesh, interval, eigenfunction=False)
    assert proj >= 0.0 and math.isnan(eigfun)
    with pytest.raises(ValueError):
        projection_and_eigenfunction_defect(loop, loop_mesh, interval)


def test_interval_checks(star3, star_mesh):
    with pytest.raises(ValueError):
        projection_and_eigenfunction_defect(star3, star_mesh, (5.0, 5.0))
    with pytest.raises(ValueError):
        projection_and_eigenfunction_defect(star3, star_mesh, (0.0, 5.0))


@pytest.mark.slow
def test_eigenfunction_defect_shrinks_with_eps(star3):
    a, b = star_interval(star3)
    defects = []
    for eps in (0.2, 0.1):
        mesh = build_mesh(star(3), eps, eps / 4)
        defects.append(projection_and_eigenfunction_defect(star3, mesh, (a, b))[1])
    assert defects[1] < defects[0]


def test_isolating_interval():
    values = [(0.0, 1), (10.0, 2), (30.0, 1)]
    assert isolating_interval(values, 1) == (5.0, 15.0)
    assert isolating_interval(values, 0) == (-0.5, 0.5)
    assert isolating_interval(values, 2) == (20.0, 40.0)


def test_hausdorff_distance(caplog):
    a = SpectralResult([(0.0, 1), (4 * PI2, 1)], 'secular')
    b = SpectralResult([(0.0, 1), (4 * PI2 + 0.1, 2)], 'fem')
    assert hausdorff_distance(a, b, 50.0) == pytest.approx(0.1)
    assert hausdorff_distance(a, b, 10.0) == 0.0
    high = SpectralResult([(60.0, 1)], 'fem')
    with caplog.at_level(logging.WARNING):
        assert hausdorff_distance(a, high, 50.0) == 50.0
    assert 'empty spectrum' in caplog.text


def test_defect_report():
    report = DefectReport(0.1, {'quasi_unitarity': 0.3, 'eigenfunction': math.nan})
    eps, quasi, sandwich, proj, eigfun = report.row()
    assert (eps, quasi) == (0.1, 0.3)
    assert math.isnan(sandwich) and math.isnan(proj) and math.isnan(eigfun)
    with pytest.raises(ValueError):
        DefectReport(0.1, {'quasi_unitarity': -1.0})
    with pytest.raises(ValueError):
        DefectReport(0.1, {'spectral_gap': 0.1})
