import pytest

from models import (CompleteTopology, GraphSpec, SimConfig, SolverConfig, WorkloadSpec)


@pytest.fixture
def desk_graph():
    return GraphSpec(n_edges=10_000, distributed_fraction=0.3, topology=CompleteTopology())


@pytest.fixture
def desk_workload():
    return WorkloadSpec(arrival_rate=500.0, read_parameter=0.4, write_delay=0.005)


@pytest.fixture
def solver_config():
    return SolverConfig(gamma=0.1)


@pytest.fixture
def short_sim():
    return SimConfig(seed=7, horizon=50.0, sample_interval=1.0, gamma=0.1)


@pytest.fixture
def desk_document():
    return {
        'graph': {'n': 10000, 'f': 0.3},
        'workload': {'lambda': 500, 'r': 0.4, 'delta': 0.005},
        'solver': {'gamma': 0.1},
    }
