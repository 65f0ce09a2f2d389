import math

import pytest

from graphs.errors import GraphFormatError, GraphValidationError, UnknownVertexError
from graphs.library import loop_with_lead, random_compact_graph, star, unit_loop
from graphs.metric_graph import (Edge, MetricGraph, dumps_graph, graph_hash, incidence, load_graph,
                                 loads_graph, require_valid, validate)


def test_library_graphs_are_admissible(loop, interval, star3, loop_lead):
    for graph in (loop, interval, star3, loop_lead, random_compact_graph(7)):
        assert validate(graph).ok


def test_short_edge_violates_l0():
    graph = MetricGraph(['a', 'b'], [Edge('e', 'a', 'b', 0.5)], d0=1, l0=1.0)
    report = validate(graph)
    assert not report.ok
    assert any('length < l0' in v for v in report.violations)


def test_disconnected_graph_is_rejected():
    graph = MetricGraph(['a', 'b', 'c', 'd'],
                        [Edge('e1', 'a', 'b', 1.0), Edge('e2', 'c', 'd', 1.0)], d0=1, l0=1.0)
    with pytest.raises(GraphValidationError) as info:
        require_valid(graph)
    assert 'not connected' in info.value.violations


def test_degree_above_d0_and_duplicate_ids():
    graph = MetricGraph(['c', 'a', 'b'],
                        [Edge('e', 'c', 'a', 1.0), Edge('e', 'c', 'b', 1.0)], d0=1, l0=1.0)
    violations = validate(graph).violations
    assert 'duplicate edge ids' in violations
    assert any('deg 2 > d0' in v for v in violations)


def test_lead_with_finite_length_is_invalid():
    graph = MetricGraph(['v'], [Edge('lead', 'v', None, 3.0)], d0=1, l0=1.0)
    assert any('infinite length' in v for v in validate(graph).violations)


def test_incidence_counts_loop_twice(loop, loop_lead):
    assert incidence(loop, 'v') == (['e'], ['e'])
    assert loop.degree('v') == 2
    assert incidence(loop_lead, 'v') == (['loop', 'lead'], ['loop'])
    assert loop_lead.degree('v') == 3
    with pytest.raises(UnknownVertexError):
        incidence(loop, 'nowhere')


def test_properties(loop_lead, star3):
    assert not loop_lead.is_compact
    assert [e.id for e in loop_lead.external_edges] == ['lead']
    assert loop_lead.total_length == 1.0
    assert star3.is_compact
    assert star3.total_length == 3.0
    assert star3.vertex_index()['c'] == 0


def test_scaled_graph_keeps_leads_infinite(loop_lead):
    scaled = loop_lead.scaled(0.5)
    assert scaled.edge('loop').length == 0.5
    assert math.isinf(scaled.edge('lead').length)
    assert scaled.l0 == 0.5
    with pytest.raises(ValueError):
        loop_lead.scaled(0.0)


def test_json_description_survives_reload(tmp_path):
    for graph in (loop_with_lead(), star(4, [1.0, 1.5, 2.0, 2.5]), random_compact_graph(3)):
        again = loads_graph(dumps_graph(graph))
        assert again == graph
        assert graph_hash(again) == graph_hash(graph)

    path = tmp_path / 'loop.json'
    path.write_text(dumps_graph(unit_loop()))
    assert load_graph(str(path)) == unit_loop()


def test_hash_changes_with_lengths():
    assert graph_hash(unit_loop()) != graph_hash(unit_loop(1.5))
    assert len(graph_hash(unit_loop())) == 64


def test_invalid_json_reports_position():
    with pytest.raises(GraphFormatError) as info:
        loads_graph('{\n  "vertices": ["a",\n')
    assert info.value.line is not None and info.value.line >= 2
    assert 'line' in str(info.value)


@pytest.mark.parametrize('text', [
    '[1, 2, 3]',
    '{"vertices": ["v"], "d0": 2, "l0": 1.0}',
    '{"vertices": ["v"], "edges": [{"id": "e", "from": "v", "to": "v", "length": "long"}], "d0": 2, "l0": 1}',
    '{"vertices": ["v"], "edges": [{"id": "e", "from": "v", "to": "v", "length": 1}], "d0": "2", "l0": 1}',
])
def test_malformed_descriptions(text):
    with pytest.raises(GraphFormatError):
        loads_graph(text)


@pytest.mark.parametrize('edges, where', [
    ('[{"id": "a", "from": "v", "to": "v", "length": 1}, {"id": "b", "from": "v", "length": 1}]', 'edges[1]'),
    ('[{"id": "a", "from": "v", "to": "v", "length": [1]}]', 'edges[0].length'),
    ('[{"id": ["a"], "from": "v", "to": "v", "length": 1}]', 'edges[0].id'),
])
def test_schema_errors_name_the_entry(edges, where):
    text = f'{{"vertices": ["v"], "edges": {edges}, "d0": 2, "l0": 1}}'
    with pytest.raises(GraphFormatError) as info:
        loads_graph(text)
    assert where in str(info.value)


def test_missing_top_level_key_is_named():
    with pytest.raises(GraphFormatError) as info:
        loads_graph('{"vertices": ["v"], "edges": [], "l0": 1}')
    assert 'd0' in str(info.value)


def test_infinite_length_spellings():
    text = ('{"vertices": ["v"], "edges": [{"id": "lead", "from": "v", "external": true, '
            '"length": "Infinity"}], "d0": 1, "l0": 1}')
    graph = loads_graph(text)
    assert graph.edges[0].is_external
    assert math.isinf(graph.edges[0].length)
