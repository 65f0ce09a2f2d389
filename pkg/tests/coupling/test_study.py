import math

import numpy as np
import pytest

from cli.event_manager import EventManager
from coupling.coupling_config import SLOPE_THRESHOLD
from coupling.defects import DefectReport
from coupling.study import (EpsilonRecord, StudyResult, _fit_slopes, convergence_study, default_h_rule,
                            defect_interval, fit_loglog_slope, graph_reference, pairwise_rates, zero_levels)

PI2 = math.pi ** 2


def test_fit_loglog_slope():
    x = [0.2, 0.1, 0.05]
    assert fit_loglog_slope(x, [3 * v ** 2 for v in x]) == pytest.approx(2.0)
    assert math.isnan(fit_loglog_slope(x, [0.0, 0.0, 1.0]))
    assert fit_loglog_slope(x, [0.0, 0.1, 0.05]) == pytest.approx(1.0)


def test_pairwise_rates():
    rates = pairwise_rates([0.4, 0.2, 0.1], [0.4, 0.2, 0.0])
    assert rates[0] == pytest.approx(1.0)
    assert math.isnan(rates[1])


def test_default_h_rule():
    assert default_h_rule(0.2) == pytest.approx(0.025)


def test_graph_reference(loop, star3):
    np.testing.assert_allclose(graph_reference(loop, 3), [0.0, 4 * PI2, 4 * PI2], atol=1e-9)
    np.testing.assert_allclose(graph_reference(star3, 4), [0.0, PI2 / 4, PI2 / 4, PI2], atol=1e-9)


def test_single_eps_gives_a_table_only(loop):
    events = EventManager()
    seen = []
    events.register_hook('epsilon_started', lambda eps, h: seen.append(('started', eps, h)))
    events.register_hook('epsilon_completed', lambda record, result: seen.append(('completed', record.eps)))
    events.register_hook('study_completed', lambda result: seen.append(('done', len(result.records))))

    result = convergence_study(loop, [0.1], 2, h_rule=lambda eps: eps / 4, events=events, defects=False)

    assert seen == [('started', 0.1, 0.025), ('completed', 0.1), ('done', 1)]
    assert all(math.isnan(s) for s in result.slopes.values())
    assert any('table only' in flag for flag in result.flags)
    record = result.records[0]
    assert record.fine.shape == (2,)
    assert record.fine[0] == pytest.approx(0.0, abs=1e-8)
    # vertex regions lower the first loop level
    assert 0.0 < record.fine[1] < 4 * PI2
    assert len(result.rows()) == 2
    assert result.rows()[1][:3] == (0.1, 2, pytest.approx(4 * PI2))
    assert math.isnan(result.defect_rows()[0][1])


@pytest.mark.parametrize('eps_list, k_max', [([], 2), ([0.1, 0.2], 2), ([0.1, 0.1], 2), ([0.1], 0)])
def test_study_arguments(loop, eps_list, k_max):
    with pytest.raises(ValueError):
        convergence_study(loop, eps_list, k_max)


def test_zero_levels():
    np.testing.assert_array_equal(zero_levels([0.0, 1e-9, 4 * PI2]), [True, True, False])
    np.testing.assert_array_equal(zero_levels([1e-9, 1e-3]), [True, False])
    assert zero_levels([]).size == 0


def test_defect_interval_prefers_a_simple_level(loop, interval, star3):
    # pi^2 is the first simple level of the 3-star
    (low, high), simple = defect_interval(star3, graph_reference(star3, 4))
    assert simple
    assert low == pytest.approx(PI2 - 3 * PI2 / 8)
    assert high == pytest.approx(PI2 + 3 * PI2 / 8)

    (low, high), simple = defect_interval(interval, graph_reference(interval, 2))
    assert simple
    assert (low, high) == (pytest.approx(PI2 / 2), pytest.approx(1.5 * PI2))

    # loop levels are all double above zero
    (low, high), simple = defect_interval(loop, graph_reference(loop, 3))
    assert not simple
    assert (low, high) == (pytest.approx(2 * PI2), pytest.approx(6 * PI2))


def _record(eps, reference, shift, deltas):
    values = np.asarray(reference) + shift
    return EpsilonRecord(eps, eps / 4, values, values, values, DefectReport(eps, deltas))


def test_slopes_skip_zero_modes_and_flag_slow_defects():
    reference = np.array([0.0, 4 * PI2])
    result = StudyResult(None, 2, reference)
    for eps, noise in ((0.2, 3e-11), (0.1, 2e-11), (0.05, 9e-11)):
        deltas = {'quasi_unitarity': math.sqrt(eps), 'sandwich': eps ** 0.2,
                  'projection': math.nan, 'eigenfunction': math.nan}
        result.records.append(_record(eps, reference, np.array([noise, -2.0 * eps]), deltas))

    _fit_slopes(result)

    assert math.isnan(result.slopes[1])
    assert result.slopes[2] == pytest.approx(1.0)
    assert result.defect_slopes['quasi_unitarity'] == pytest.approx(0.5)
    assert result.defect_slopes['sandwich'] == pytest.approx(0.2)
    assert math.isnan(result.defect_slopes['projection'])
    assert not any('lambda_' in flag for flag in result.flags)
    assert result.flags == [f"defect sandwich slope 0.200 below {SLOPE_THRESHOLD}"]


def test_loop_zero_mode_is_not_fitted(loop):
    result = convergence_study(loop, [0.2, 0.1, 0.05], 2, h_rule=lambda eps: eps / 4, defects=False)
    assert math.isnan(result.slopes[1])
    assert not math.isnan(result.slopes[2])
    assert not any('lambda_1 ' in flag for flag in result.flags)


@pytest.mark.slow
def test_loop_study_converges(loop):
    result = convergence_study(loop, [0.02, 0.01, 0.005], 3, h_rule=lambda eps: eps / 4, gate=False)
    assert len(result.records) == 3
    assert math.isnan(result.slopes[1])
    for k in (2, 3):
        assert result.slopes[k] >= SLOPE_THRESHOLD
        diffs = result.differences(k)
        assert diffs[-1] < diffs[0]
    for record in result.records:
        assert np.all(record.extrapolated <= result.reference + 1e-6)
    assert result.defect_slopes['projection'] >= SLOPE_THRESHOLD
    # no simple level on the loop
    assert math.isnan(result.defect_slopes['eigenfunction'])
    quasi = [row[1] for row in result.defect_rows()]
    assert quasi[-1] < quasi[0]


@pytest.mark.slow
def test_star_study_measures_eigenfunction_defect(star3):
    result = convergence_study(star3, [0.02, 0.01, 0.005], 4, h_rule=lambda eps: eps / 4, gate=False)
    for k in (2, 3, 4):
        assert result.slopes[k] >= SLOPE_THRESHOLD
    eigenfunction = [record.defects.deltas['eigenfunction'] for record in result.records]
    assert all(math.isfinite(value) for value in eigenfunction)
    assert result.defect_slopes['projection'] >= SLOPE_THRESHOLD
    assert result.defect_slopes['eigenfunction'] >= SLOPE_THRESHOLD
