"""Search budgets, node metering and mergeable search statistics."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

PRUNE_RULES = ("parity", "profile_bound", "point_degree", "codegree", "symmetry", "orthogonality")

# Workers draw node allowances from a shared counter in blocks of this size.
CHUNK = 4096
TIME_CHECK_MASK = (1 << 12) - 1


@dataclass(frozen=True)
class SearchBudget:
    max_nodes: int = 1_000_000
    max_seconds: float = 300.0
    thread_count: int = 1

    def __post_init__(self):
        if self.max_nodes <= 0 or self.max_seconds <= 0 or self.thread_count <= 0:
            raise ValueError(f"budget fields must be positive: {self}")


@dataclass
class SearchStats:
    """Counters for one search; ``a + b`` merges two runs."""

    nodes_visited: int = 0
    solutions_found: int = 0
    deepest_level: int = 0
    prunes: dict[str, int] = field(default_factory=lambda: dict.fromkeys(PRUNE_RULES, 0))
    truncated: bool = False
    stopped_early: bool = False
    seconds: float = 0.0

    @property
    def complete(self) -> bool:
        return not (self.truncated or self.stopped_early)

    def __add__(self, other: "SearchStats") -> "SearchStats":
        prunes = {k: self.prunes.get(k, 0) + other.prunes.get(k, 0) for k in PRUNE_RULES}
        return SearchStats(
            nodes_visited=self.nodes_visited + other.nodes_visited,
            solutions_found=self.solutions_found + other.solutions_found,
            deepest_level=max(self.deepest_level, other.deepest_level),
            prunes=prunes,
            truncated=self.truncated or other.truncated,
            stopped_early=self.stopped_early or other.stopped_early,
            seconds=self.seconds + other.seconds,
        )

    def deterministic(self) -> tuple:
        """Everything except timing."""
        return (self.nodes_visited, self.solutions_found, self.deepest_level,
                tuple(self.prunes[k] for k in PRUNE_RULES), self.truncated, self.stopped_early)

    def lines(self) -> list[str]:
        out = [
            f"nodes_visited = {self.nodes_visited}",
            f"solutions_found = {self.solutions_found}",
            f"deepest_level = {self.deepest_level}",
        ]
        out += [f"prune_{k} = {self.prunes[k]}" for k in PRUNE_RULES]
        out.append(f"truncated = {'true' if self.truncated else 'false'}")
        out.append(f"complete = {'true' if self.complete else 'false'}")
        return out


class BudgetExhausted(Exception):
    pass


class StopSearch(Exception):
    """Raised by a solution callback to end the search early."""


class Meter:
    """Charges search nodes against a budget.

    ``shared`` is an optional ``multiprocessing.Value`` holding the number of
    nodes still unallocated; when given, nodes are drawn from it in chunks.
    """

    def __init__(self, budget: SearchBudget, shared=None, start: float | None = None):
        self.budget = budget
        self.shared = shared
        self.start = time.monotonic() if start is None else start
        self.nodes = 0
        self.limit = 0 if shared is not None else budget.max_nodes
        self.truncated = False

    def _refill(self) -> bool:
        with self.shared.get_lock():
            take = min(CHUNK, self.shared.value)
            self.shared.value -= take
        self.limit += take
        return take > 0

    def charge(self) -> None:
        self.nodes += 1
        if self.nodes > self.limit or not self.nodes & TIME_CHECK_MASK:
            self.check()

    def check(self) -> None:
        """Slow path of :meth:`charge`; hot loops inline the fast path."""
        if self.nodes > self.limit:
            if self.shared is None or not self._refill() or self.nodes > self.limit:
                self.nodes = self.limit
                self.truncated = True
                raise BudgetExhausted
        if not self.nodes & TIME_CHECK_MASK:
            self.check_time()

    def check_time(self) -> None:
        if time.monotonic() - self.start > self.budget.max_seconds:
            self.truncated = True
            raise BudgetExhausted

    def elapsed(self) -> float:
        return time.monotonic() - self.start

    def give_back(self) -> None:
        """Return unused allowance to the shared pool."""
        if self.shared is not None and self.limit > self.nodes:
            with self.shared.get_lock():
                self.shared.value += self.limit - self.nodes
            self.limit = self.nodes
