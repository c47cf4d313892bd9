import json

import pytest

from config import (apply_overrides, build_config, expand_seeds, load_config, serialize_config,
                    worker_count)
from errors import ConfigError
from models import STANDARD_CATEGORY_SIZES, CompleteTopology, ScaleFreeTopology


def _field(document):
    with pytest.raises(ConfigError) as excinfo:
        build_config(document)
    return excinfo.value.field


class TestBuildConfig:
    def test_minimal_document_gets_defaults(self):
        config = build_config({'graph': {'n': 10000, 'f': 0.3}, 'workload': {'lambda': 500}})
        assert config.workload.read_parameter == 0.4
        assert config.workload.write_delay == 0.005
        assert config.solver.gamma == 0.1
        assert config.sim.gamma == 0.1
        assert config.graph.n_edges == 10000
        assert isinstance(config.graph.topology, CompleteTopology)

    def test_empty_document_is_full_scale(self):
        config = build_config({})
        assert config.graph.n_edges == 10 ** 10
        assert config.workload.arrival_rate == 1000.0
        assert config.sim.horizon == 3600.0
        assert config.seeds == ()
        assert config.sweep is None

    def test_distributed_fraction_out_of_range(self):
        assert _field({'graph': {'n': 10000, 'f': 1.5}}) == 'graph.f'

    def test_error_message_names_field(self):
        with pytest.raises(ConfigError) as excinfo:
            build_config({'solver': {'gamma': 1.0}})
        assert str(excinfo.value).startswith('solver.gamma')

    def test_unknown_keys_rejected(self):
        assert _field({'graph': {'n': 100, 'colour': 'red'}}) == 'graph'
        assert _field({'extras': {}}) == 'config'

    def test_fractional_edge_count_rejected(self):
        assert _field({'graph': {'n': 100.5}}) == 'graph.n'

    def test_lambda_and_tps_are_exclusive(self):
        assert _field({'workload': {'lambda': 100, 'tps': 1000}}) == 'workload'

    def test_tps_gives_update_rate(self):
        config = build_config({'workload': {'tps': 10000}})
        assert config.workload.arrival_rate == pytest.approx(1000.0)
        assert config.workload.tps == 10000

    def test_linear_sweep_grid(self):
        config = build_config({'sweep': {'parameter': 'lambda', 'from': 1000, 'to': 10000,
                                         'steps': 10, 'scale': 'linear'}})
        assert config.sweep.values() == pytest.approx([1000.0 * k for k in range(1, 11)])

    def test_log_sweep_grid(self):
        config = build_config({'sweep': {'parameter': 'gamma', 'from': 0.05, 'to': 0.2,
                                         'steps': 3, 'scale': 'log'}})
        assert config.sweep.values() == pytest.approx([0.05, 0.1, 0.2])

    def test_degenerate_sweep_rejected(self):
        assert _field({'sweep': {'parameter': 'lambda', 'from': 1000, 'to': 1000, 'steps': 2}}) == 'sweep.to'
        assert _field({'sweep': {'parameter': 'lambda', 'from': 1000, 'to': 2000, 'steps': 1}}) == 'sweep.steps'
        assert _field({'sweep': {'parameter': 'n', 'from': 1, 'to': 2, 'steps': 2}}) == 'sweep.parameter'

    @pytest.mark.parametrize('parameter, stop', [('f', 1.5), ('gamma', 1.0), ('r', 1.2)])
    def test_sweep_beyond_parameter_range_rejected(self, parameter, stop):
        document = {'sweep': {'parameter': parameter, 'from': 0.1, 'to': stop, 'steps': 3}}
        assert _field(document) == 'sweep.to'

    def test_sweep_may_end_at_inclusive_limit(self):
        config = build_config({'sweep': {'parameter': 'f', 'from': 0.5, 'to': 1.0, 'steps': 2}})
        assert config.sweep.values() == pytest.approx([0.5, 1.0])

    def test_seed_forms(self):
        assert build_config({'sim': {'seeds': [3, 1, 2]}}).seeds == (3, 1, 2)
        assert build_config({'sim': {'seeds': {'base': 5, 'count': 3}}}).seeds == (5, 6, 7)

    def test_scale_free_standard_table_at_full_size(self):
        config = build_config({'graph': {'n': sum(STANDARD_CATEGORY_SIZES), 'topology': {'kind': 'scale-free'}}})
        assert config.graph.topology == ScaleFreeTopology.standard()

    def test_scale_free_scaled_at_desk_size(self):
        config = build_config({'graph': {'n': 1000, 'topology': {'kind': 'scale-free'}}})
        topology = config.graph.topology
        assert topology.n_edges == 1000
        assert [c.probability for c in topology.categories] == [0.50, 0.25, 0.13, 0.06, 0.03, 0.02, 0.01]
        sizes = [c.edges for c in topology.categories]
        assert sizes == sorted(sizes)

    def test_scale_free_probabilities_must_sum_to_one(self):
        document = {'graph': {'n': 20, 'topology': {'kind': 'scale-free', 'categories': [
            {'edges': 10, 'probability': 0.5}, {'edges': 10, 'probability': 0.4}]}}}
        assert _field(document) == 'graph.topology.categories'

    def test_scale_free_sizes_must_match_graph(self):
        document = {'graph': {'n': 30, 'topology': {'kind': 'scale-free', 'categories': [
            {'edges': 10, 'probability': 0.5}, {'edges': 10, 'probability': 0.5}]}}}
        assert _field(document) == 'graph.topology.categories'


class TestFiles:
    def test_load_config(self, tmp_path, desk_document):
        path = tmp_path / 'desk.json'
        path.write_text(json.dumps(desk_document))
        config = load_config(str(path))
        assert config.workload.arrival_rate == 500.0

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as excinfo:
            load_config(str(tmp_path / 'absent.json'))
        assert excinfo.value.field == 'config'

    def test_invalid_json(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"graph": ')
        with pytest.raises(ConfigError) as excinfo:
            load_config(str(path))
        assert excinfo.value.field == 'config'

    @pytest.mark.parametrize('document', [
        {'graph': {'n': 10000, 'f': 0.3}, 'workload': {'lambda': 500}},
        {'graph': {'n': 1000, 'f': 0.2, 'topology': {'kind': 'scale-free'}},
         'workload': {'tps': 20000, 'delta': 0.01},
         'sim': {'seeds': {'base': 0, 'count': 4}, 'dirty_reads': False},
         'sweep': {'parameter': 'delta', 'from': 0.001, 'to': 0.01, 'steps': 4, 'scale': 'log'}},
    ])
    def test_round_trip(self, tmp_path, document):
        config = build_config(document)
        path = tmp_path / 'config.json'
        path.write_text(json.dumps(serialize_config(config)))
        assert load_config(str(path)) == config


class TestOverrides:
    def test_nested_override(self, desk_document):
        document = apply_overrides(desk_document, {'graph.f': 0.5, 'sim.horizon': None})
        assert document['graph']['f'] == 0.5
        assert 'sim' not in document
        assert desk_document['graph']['f'] == 0.3

    def test_tps_replaces_lambda(self, desk_document):
        document = apply_overrides(desk_document, {'workload.tps': 9000})
        assert 'lambda' not in document['workload']
        assert build_config(document).workload.arrival_rate == pytest.approx(900.0)

    def test_overrides_are_validated(self, desk_document):
        assert _field(apply_overrides(desk_document, {'workload.r': 0})) == 'workload.r'


class TestEnvironment:
    def test_worker_count(self, monkeypatch):
        monkeypatch.setenv('CORRODE_WORKERS', '3')
        assert worker_count() == 3

    @pytest.mark.parametrize('raw', ['0', 'many'])
    def test_invalid_worker_count(self, monkeypatch, raw):
        monkeypatch.setenv('CORRODE_WORKERS', raw)
        with pytest.raises(ConfigError) as excinfo:
            worker_count()
        assert excinfo.value.field == 'CORRODE_WORKERS'

    def test_expand_seeds_none(self):
        assert expand_seeds(None) == ()
