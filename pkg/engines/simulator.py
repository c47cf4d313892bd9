"""
Corruption Simulator
Discrete-event simulation of read-then-write queries on a partitioned graph
"""

import logging
from collections import Counter

import numpy as np

from engines.events import ARRIVAL, WRITE_COMPLETION, EventList
from errors import InvalidInputError
from models import (EdgeRecord, EdgeState, ScaleFreeTopology, SimResult, WriteInFlight,
                    check_transition)

logger = logging.getLogger(__name__)

LARGE_GRAPH_WARNING = 10 ** 7
ENDS = ('A', 'B')


def sample_read_count(rng, r):
    """Number of reads before the write: P(K=k) = r (1-r)^(k-2), k >= 2"""
    return 1 + int(rng.geometric(r))


def sample_edge(rng, topology, n_edges):
    """
    Index of the edge a read or write touches

    Complete access (and a Scale-Free table with a single category) is uniform
    over all edges. Otherwise the category is drawn first, then an edge
    uniformly inside it.
    """
    if not isinstance(topology, ScaleFreeTopology) or len(topology.categories) == 1:
        return min(int(rng.random() * n_edges), n_edges - 1)
    j = int(np.searchsorted(topology.cumulative, rng.random(), side='right'))
    j = min(j, len(topology.categories) - 1)
    size = topology.categories[j].edges
    return topology.offsets[j] + min(int(rng.random() * size), size - 1)


def execute_read(edge, rng):
    """True when the read is clean; a state-2 edge shows its wrong side half the time"""
    state = edge.state
    if state == EdgeState.SEMANTICALLY_CORRUPT:
        return False
    if state == EdgeState.RECIPROCALLY_INCONSISTENT:
        return rng.random() < 0.5
    return True


def begin_write(edge, index, now, writer_dirty, write_delay, rng):
    """
    Start a write on an edge

    Local edges (and zero-delay writes) complete at `now` and never overlap.
    A distributed write picks its remote end uniformly and lasts an
    exponential time with mean write_delay. It conflicts with the most recent
    write still in flight on the edge when it starts at that write's remote
    end; both writes are then marked and learn each other's dirtiness.

    Returns:
        The WriteInFlight; completion_time == start_time means apply immediately
    """
    if not edge.is_distributed or write_delay == 0:
        return WriteInFlight(index, now, now, '', writer_dirty)

    duration = float(rng.exponential(write_delay))
    remote_end = ENDS[0] if rng.random() < 0.5 else ENDS[1]
    write = WriteInFlight(index, now, now + duration, remote_end, writer_dirty)
    incumbent = edge.latest_write
    if incumbent is not None and write.start_end == incumbent.remote_end:
        write.conflicted = incumbent.conflicted = True
        write.partner_dirty = incumbent.writer_dirty
        incumbent.partner_dirty = writer_dirty
    if duration > 0:
        edge.in_flight.append(write)
    return write


def apply_write_outcome(edge, write):
    """
    State of the edge once the write lands

    State 3 never changes. Otherwise, in order of precedence: a dirty writer
    or a dirty conflicting partner corrupts the edge; a conflict between clean
    writers leaves it reciprocally inconsistent; a clean conflict-free write
    leaves a distributed edge clean (correcting state 2) and a local edge as is.
    """
    if edge.state == EdgeState.SEMANTICALLY_CORRUPT:
        return EdgeState.SEMANTICALLY_CORRUPT
    if write.writer_dirty or (write.conflicted and write.partner_dirty):
        return EdgeState.SEMANTICALLY_CORRUPT
    if write.conflicted:
        return EdgeState.RECIPROCALLY_INCONSISTENT
    if edge.is_distributed:
        return EdgeState.CLEAN_DISTRIBUTED
    return edge.state


class CorruptionSimulator:
    """One seeded run from a clean database until gamma N edges are corrupt"""

    def __init__(self, graph, workload, sim):
        if graph.n_edges < 1:
            raise InvalidInputError("cannot simulate an empty graph", field="graph.n")
        if graph.n_edges > LARGE_GRAPH_WARNING:
            logger.warning("simulating %d edges; expect a long run and a large memory footprint",
                           graph.n_edges)
        self.graph = graph
        self.workload = workload
        self.sim = sim
        self.rng = np.random.default_rng(sim.seed)
        self.edges, self.category_sizes = self._build_edges()
        distributed = sum(1 for edge in self.edges if edge.is_distributed)
        self.counts = [graph.n_edges - distributed, distributed, 0, 0]
        self.category_corrupt = [0] * len(self.category_sizes)
        self.category_onsets = [None] * len(self.category_sizes)
        self.event_counts = Counter()

    def _build_edges(self):
        """f is applied within every category; distributed edges come first in each block"""
        f = self.graph.distributed_fraction
        topology = self.graph.topology
        sizes = ([c.edges for c in topology.categories]
                 if isinstance(topology, ScaleFreeTopology) else [self.graph.n_edges])
        edges = []
        for j, size in enumerate(sizes):
            distributed = int(round(f * size))
            for i in range(size):
                if i < distributed:
                    edges.append(EdgeRecord(EdgeState.CLEAN_DISTRIBUTED, True, j))
                else:
                    edges.append(EdgeRecord(EdgeState.CLEAN_LOCAL, False, j))
        return edges, sizes

    def run(self):
        """
        Run the event loop

        The global first passage is recorded when n3 first reaches gamma N.
        With sim.until_category_onsets the run continues from there until every
        category has reached gamma internally or the horizon is hit.

        Returns:
            SimResult with u_gamma_estimate None when the horizon ran out first
        """
        sim = self.sim
        n = self.graph.n_edges
        threshold = sim.gamma * n
        events = EventList()
        events.insert(self._next_arrival(0.0), ARRIVAL)
        trajectory = []
        sample_index = 0
        u_gamma = None
        stopped_at = None
        now = 0.0

        logger.info("simulating N=%d f=%g lambda=%g seed=%d", n, self.graph.distributed_fraction,
                    self.workload.arrival_rate, sim.seed)
        while events:
            next_time = events.peek_time()
            if next_time > sim.horizon:
                break
            while sample_index * sim.sample_interval <= next_time:
                trajectory.append((sample_index * sim.sample_interval, *self.counts))
                sample_index += 1

            now, kind, payload = events.pop()
            if kind == ARRIVAL:
                self._run_query(now, events)
                events.insert(self._next_arrival(now), ARRIVAL)
            else:
                self._commit(payload, now)

            if u_gamma is None and self.counts[3] >= threshold:
                u_gamma = now
            if u_gamma is not None and not self._awaiting_onsets():
                stopped_at = now
                break

        end_time = stopped_at if stopped_at is not None else sim.horizon
        while sample_index * sim.sample_interval <= end_time:
            trajectory.append((sample_index * sim.sample_interval, *self.counts))
            sample_index += 1
        if trajectory[-1][0] != end_time:
            trajectory.append((end_time, *self.counts))

        if u_gamma is None:
            logger.info("seed %d: horizon %gs exceeded with n3=%d", sim.seed, sim.horizon, self.counts[3])
        else:
            logger.info("seed %d: n3 reached %g at t=%.6gs", sim.seed, threshold, u_gamma)
        return SimResult(seed=sim.seed, u_gamma_estimate=u_gamma, end_time=end_time,
                         trajectory=trajectory, event_counts=dict(self.event_counts),
                         final_state=tuple(self.counts), category_onsets=list(self.category_onsets))

    def _awaiting_onsets(self):
        return self.sim.until_category_onsets and None in self.category_onsets

    def _next_arrival(self, now):
        return now + float(self.rng.exponential(1.0 / self.workload.arrival_rate))

    def _run_query(self, now, events):
        rng = self.rng
        topology = self.graph.topology
        n = self.graph.n_edges
        reads = sample_read_count(rng, self.workload.read_parameter)
        dirty = False
        for _ in range(reads):
            if not execute_read(self.edges[sample_edge(rng, topology, n)], rng):
                dirty = True
        dirty = dirty and self.sim.dirty_reads

        counts = self.event_counts
        counts['queries'] += 1
        counts['reads'] += reads
        if dirty:
            counts['dirty_queries'] += 1

        target = sample_edge(rng, topology, n)
        edge = self.edges[target]
        write = begin_write(edge, target, now, dirty, self.workload.write_delay, rng)
        if edge.is_distributed:
            counts['distributed_writes'] += 1
        else:
            counts['local_writes'] += 1
        if write.completion_time == write.start_time:
            self._commit(write, now)
            return
        if write.conflicted:
            counts['conflicts'] += 1
        events.insert(write.completion_time, WRITE_COMPLETION, write)

    def _commit(self, write, now):
        edge = self.edges[write.edge]
        if write in edge.in_flight:
            edge.in_flight.remove(write)
        old = edge.state
        new = apply_write_outcome(edge, write)
        if new == old:
            return
        if self.sim.debug_assertions:
            check_transition(old, new, time=now, edge=write.edge)

        edge.state = new
        self.counts[old] -= 1
        self.counts[new] += 1
        arc = f"{int(old)}->{int(new)}"
        self.event_counts[arc] += 1
        if arc == '1->2' and self.event_counts[arc] == 1:
            logger.debug("first reciprocally inconsistent edge at t=%.6gs", now)
        if old == EdgeState.RECIPROCALLY_INCONSISTENT and new == EdgeState.CLEAN_DISTRIBUTED:
            self.event_counts['corrections'] += 1
        if new == EdgeState.SEMANTICALLY_CORRUPT:
            if not self.event_counts['corruptions']:
                logger.debug("first semantically corrupt edge at t=%.6gs", now)
            self.event_counts['corruptions'] += 1
            self._record_category_corruption(edge.category, now)

    def _record_category_corruption(self, category, now):
        self.category_corrupt[category] += 1
        if (self.category_onsets[category] is None
                and self.category_corrupt[category] >= self.sim.gamma * self.category_sizes[category]):
            self.category_onsets[category] = now


def run_simulation(graph, workload, sim):
    """Simulate one seed"""
    return CorruptionSimulator(graph, workload, sim).run()
