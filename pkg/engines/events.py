"""
Event List
Timestamp-ordered priority queue for the corruption simulator
"""

import heapq

ARRIVAL = 'arrival'
WRITE_COMPLETION = 'write-completion'


class EventList:
    """
    Min-heap of (time, sequence, kind, payload)

    Equal timestamps pop in insertion order; the sequence number makes the
    ordering total so runs are reproducible.
    """

    def __init__(self):
        self._heap = []
        self._sequence = 0
        self.last = float('-inf')

    def __len__(self):
        return len(self._heap)

    def insert(self, time, kind, payload=None):
        if time < self.last:
            raise ValueError(f"event {kind} at t={time:g} is in the past (last={self.last:g})")
        heapq.heappush(self._heap, (time, self._sequence, kind, payload))
        self._sequence += 1

    def peek_time(self):
        if not self._heap:
            raise IndexError("peek_time() on an empty event list")
        return self._heap[0][0]

    def pop(self):
        if not self._heap:
            raise IndexError("pop() on an empty event list")
        time, _, kind, payload = heapq.heappop(self._heap)
        self.last = time
        return time, kind, payload
