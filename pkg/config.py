"""
Experiment Configuration
Loads, validates, overrides and serializes experiment config documents
"""

import copy
import json
import logging
import os

from jsonschema import Draft202012Validator

from errors import ConfigError, InvalidInputError
from models import (STANDARD_CATEGORY_SIZES, Category, CompleteTopology, ExperimentConfig,
                    GraphSpec, ScaleFreeTopology, SimConfig, SolverConfig, SweepSpec,
                    SWEEP_PARAMETERS, WorkloadSpec)

logger = logging.getLogger(__name__)

# Filled in when a document leaves them out
DEFAULTS = {
    'graph': {'n': 1e10, 'f': 0.3},
    'workload': {'lambda': 1000.0, 'r': 0.4, 'delta': 0.005},
    'solver': {'gamma': 0.1, 'fp_tolerance': 1e-8, 'max_iterations': 10000,
               'damping': 1.0, 'seed_state2': 1.0},
    'sim': {'seed': 0, 'horizon': 3600.0, 'sample_interval': 1.0,
            'debug_assertions': True, 'dirty_reads': True},
    'validation': {'tolerance': 0.10},
}

_POSITIVE = {'type': 'number', 'exclusiveMinimum': 0}
_FRACTION = {'type': 'number', 'exclusiveMinimum': 0, 'exclusiveMaximum': 1}

SCHEMA = {
    'type': 'object',
    'additionalProperties': False,
    'properties': {
        'graph': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {
                'n': {'type': 'number', 'minimum': 1},
                'f': {'type': 'number', 'minimum': 0, 'maximum': 1},
                'topology': {
                    'type': 'object',
                    'additionalProperties': False,
                    'required': ['kind'],
                    'properties': {
                        'kind': {'enum': ['complete', 'scale-free']},
                        'categories': {
                            'type': 'array',
                            'minItems': 1,
                            'items': {
                                'type': 'object',
                                'additionalProperties': False,
                                'required': ['edges', 'probability'],
                                'properties': {
                                    'edges': {'type': 'number', 'minimum': 1},
                                    'probability': _POSITIVE,
                                },
                            },
                        },
                    },
                },
            },
        },
        'workload': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {
                'lambda': _POSITIVE,
                'tps': _POSITIVE,
                'r': {'type': 'number', 'exclusiveMinimum': 0, 'maximum': 1},
                'delta': {'type': 'number', 'minimum': 0},
            },
            'not': {'required': ['lambda', 'tps']},
        },
        'solver': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {
                'gamma': _FRACTION,
                'fp_tolerance': _POSITIVE,
                'max_iterations': {'type': 'integer', 'minimum': 1},
                'damping': {'type': 'number', 'exclusiveMinimum': 0, 'maximum': 1},
                'seed_state2': _POSITIVE,
            },
        },
        'sim': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {
                'seed': {'type': 'integer', 'minimum': 0},
                'seeds': {
                    'oneOf': [
                        {'type': 'array', 'items': {'type': 'integer', 'minimum': 0}, 'minItems': 1},
                        {
                            'type': 'object',
                            'additionalProperties': False,
                            'required': ['base', 'count'],
                            'properties': {
                                'base': {'type': 'integer', 'minimum': 0},
                                'count': {'type': 'integer', 'minimum': 1},
                            },
                        },
                    ],
                },
                'horizon': _POSITIVE,
                'sample_interval': _POSITIVE,
                'debug_assertions': {'type': 'boolean'},
                'dirty_reads': {'type': 'boolean'},
            },
        },
        'sweep': {
            'type': 'object',
            'additionalProperties': False,
            'required': ['parameter', 'from', 'to', 'steps'],
            'properties': {
                'parameter': {'enum': list(SWEEP_PARAMETERS)},
                'from': _POSITIVE,
                'to': _POSITIVE,
                'steps': {'type': 'integer', 'minimum': 2},
                'scale': {'enum': ['linear', 'log']},
            },
        },
        'validation': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {'tolerance': _FRACTION},
        },
    },
}

_VALIDATOR = Draft202012Validator(SCHEMA)


def load_config(path):
    """
    Load and validate an experiment config file

    Args:
        path: path to a JSON document

    Returns:
        ExperimentConfig with defaults applied

    Raises:
        ConfigError naming the offending field
    """
    return build_config(read_document(path))


def read_document(path):
    """Raw JSON document of a config file"""
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError('config', f"file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError('config', f"invalid JSON in {path}: {e}")


def build_config(document):
    """Validate a raw document and turn it into an ExperimentConfig"""
    if not isinstance(document, dict):
        raise ConfigError('config', "top level must be an object")
    errors = sorted(_VALIDATOR.iter_errors(document),
                    key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        error = errors[0]
        field = '.'.join(str(p) for p in error.absolute_path) or 'config'
        raise ConfigError(field, error.message)

    sections = {name: {**DEFAULTS.get(name, {}), **document.get(name, {})}
                for name in ('graph', 'workload', 'solver', 'sim', 'validation')}
    try:
        graph = _build_graph(sections['graph'])
        workload = _build_workload(sections['workload'], document.get('workload', {}))
        solver = SolverConfig(
            gamma=float(sections['solver']['gamma']),
            fp_tolerance=float(sections['solver']['fp_tolerance']),
            max_iterations=int(sections['solver']['max_iterations']),
            damping=float(sections['solver']['damping']),
            seed_state2=float(sections['solver']['seed_state2']),
        )
        sim_section = sections['sim']
        sim = SimConfig(
            seed=int(sim_section['seed']),
            horizon=float(sim_section['horizon']),
            sample_interval=float(sim_section['sample_interval']),
            gamma=solver.gamma,
            debug_assertions=bool(sim_section['debug_assertions']),
            dirty_reads=bool(sim_section['dirty_reads']),
        )
        sweep = None
        if 'sweep' in document:
            s = document['sweep']
            sweep = SweepSpec(parameter=s['parameter'], start=float(s['from']), stop=float(s['to']),
                              steps=int(s['steps']), scale=s.get('scale', 'linear'))
    except ConfigError:
        raise
    except InvalidInputError as e:
        raise ConfigError(e.field or 'config', str(e))

    return ExperimentConfig(graph=graph, workload=workload, solver=solver, sim=sim, sweep=sweep,
                            seeds=expand_seeds(sim_section.get('seeds')),
                            validation_tolerance=float(sections['validation']['tolerance']))


def _build_graph(section):
    n = section['n']
    if float(n) != int(n):
        raise ConfigError('graph.n', f"edge count must be a whole number, got {n}")
    n = int(n)
    topology_doc = section.get('topology', {'kind': 'complete'})
    if topology_doc['kind'] == 'complete':
        if 'categories' in topology_doc:
            raise ConfigError('graph.topology.categories', "only scale-free topologies take categories")
        topology = CompleteTopology()
    elif 'categories' in topology_doc:
        categories = []
        for j, c in enumerate(topology_doc['categories']):
            if float(c['edges']) != int(c['edges']):
                raise ConfigError(f'graph.topology.categories.{j}.edges', "must be a whole number")
            categories.append(Category(int(c['edges']), float(c['probability'])))
        topology = ScaleFreeTopology(tuple(categories))
    elif n == sum(STANDARD_CATEGORY_SIZES):
        topology = ScaleFreeTopology.standard()
    else:
        topology = ScaleFreeTopology.scaled(n)
    return GraphSpec(n_edges=n, distributed_fraction=float(section['f']), topology=topology)


def _build_workload(section, given):
    r = float(section['r'])
    delta = float(section['delta'])
    if 'tps' in given:
        return WorkloadSpec.from_tps(float(given['tps']), read_parameter=r, write_delay=delta)
    return WorkloadSpec(arrival_rate=float(section['lambda']), read_parameter=r, write_delay=delta)


def expand_seeds(seeds):
    """Seed list from either an explicit list or {base, count}"""
    if seeds is None:
        return ()
    if isinstance(seeds, dict):
        return tuple(range(seeds['base'], seeds['base'] + seeds['count']))
    return tuple(int(s) for s in seeds)


def apply_overrides(document, overrides):
    """
    Copy of `document` with dotted-path overrides applied

    Setting workload.tps drops workload.lambda and the other way round,
    since the two are alternative ways of giving the same rate.
    """
    document = copy.deepcopy(document)
    for path, value in overrides.items():
        if value is None:
            continue
        keys = path.split('.')
        node = document
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(path, f"cannot override inside non-object {key!r}")
        node[keys[-1]] = value
        if path == 'workload.tps':
            document['workload'].pop('lambda', None)
        elif path == 'workload.lambda':
            document['workload'].pop('tps', None)
    return document


def serialize_config(config):
    """Document that build_config turns back into an equal ExperimentConfig"""
    sim = config.sim.to_dict()
    if config.seeds:
        sim['seeds'] = list(config.seeds)
    document = {
        'graph': config.graph.to_dict(),
        'workload': config.workload.to_dict(),
        'solver': config.solver.to_dict(),
        'sim': sim,
        'validation': {'tolerance': config.validation_tolerance},
    }
    if config.sweep is not None:
        document['sweep'] = config.sweep.to_dict()
    return document


def worker_count():
    """Harness parallelism cap from CORRODE_WORKERS (default: CPU count)"""
    raw = os.getenv('CORRODE_WORKERS')
    if raw is None or raw == '':
        return os.cpu_count() or 1
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError('CORRODE_WORKERS', f"must be a positive integer, got {raw!r}")
    if workers < 1:
        raise ConfigError('CORRODE_WORKERS', f"must be a positive integer, got {raw!r}")
    return workers


def log_level():
    return os.getenv('CORRODE_LOG_LEVEL', 'WARNING').upper()


def default_output_dir():
    return os.getenv('CORRODE_OUTPUT_DIR', 'results')
