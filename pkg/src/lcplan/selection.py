"""Deterministic greedy argmax with optional lazy gain revalidation.

Both paths implement the same total order (largest gain first, ties broken by
smallest candidate id) so a solver produces identical selections with `lazy`
on or off.  The lazy path keeps stale gains in a max-heap and revalidates the
top entry on pop; this is valid whenever gains never increase as the solver's
state grows (diminishing returns) and infeasible candidates never become
feasible again, which holds for every solver in this package.
"""

from __future__ import annotations

import heapq
from typing import Callable, Iterable


class GainSelector:
    """Repeated argmax over a shrinking candidate pool.

    `select` must be called exactly once per solver state; once a candidate is
    returned it leaves the pool.
    """

    def __init__(self, candidates: Iterable[int], lazy: bool = False):
        self._remaining = sorted(candidates)
        self.lazy = lazy
        self._heap: list[tuple[float, int]] | None = None

    def __bool__(self) -> bool:
        if self.lazy and self._heap is not None:
            return bool(self._heap)
        return bool(self._remaining)

    def select(
        self,
        gain_fn: Callable[[int], float],
        feasible_fn: Callable[[int], bool] | None = None,
    ) -> tuple[int, float] | None:
        """Best remaining feasible candidate and its fresh gain, or None."""
        if self.lazy:
            return self._select_lazy(gain_fn, feasible_fn)
        return self._select_eager(gain_fn, feasible_fn)

    def _select_eager(self, gain_fn, feasible_fn):
        best = None
        best_gain = 0.0
        for cand in self._remaining:
            if feasible_fn is not None and not feasible_fn(cand):
                continue
            g = gain_fn(cand)
            if best is None or g > best_gain:
                best, best_gain = cand, g
        if best is None:
            return None
        self._remaining.remove(best)
        return best, best_gain

    def _select_lazy(self, gain_fn, feasible_fn):
        if self._heap is None:
            self._heap = [(-gain_fn(c), c) for c in self._remaining]
            heapq.heapify(self._heap)
            self._remaining = []
        heap = self._heap
        while heap:
            neg_gain, cand = heapq.heappop(heap)
            if feasible_fn is not None and not feasible_fn(cand):
                continue  # infeasibility is permanent in all our constraint families
            fresh = gain_fn(cand)
            entry = (-fresh, cand)
            if not heap or entry <= heap[0]:
                return cand, fresh
            heapq.heappush(heap, entry)
        return None
