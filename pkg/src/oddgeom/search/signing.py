"""Signing a zero pattern into a weighing matrix, and the two-phase pipeline."""

from __future__ import annotations

import sys
from dataclasses import dataclass

from ..geometry import LineSystem, OddGeometryParams
from ..matrix import WeighingMatrix, verify, zero_pattern
from .budget import (BudgetExhausted, Meter, SearchBudget, SearchStats, StopSearch,
                     TIME_CHECK_MASK)
from .canon import canonical_key
from .geometry_search import enumerate_geometries, run_search


class PatternMismatch(ValueError):
    pass


def supports(ls: LineSystem, n: int, k: int) -> list[int]:
    """Nonzero-column masks of each row; raises PatternMismatch on bad sizes."""
    if ls.v != n or ls.b != n:
        raise PatternMismatch(f"geometry is {ls.b} lines on {ls.v} points, expected {n} x {n}")
    full = (1 << n) - 1
    out = []
    for i, m in enumerate(ls.lines):
        if m.bit_count() != n - k:
            raise PatternMismatch(f"line {i + 1} has {m.bit_count()} points, expected {n - k}")
        out.append(full & ~m)
    return out


def gauge_cells(supp: list[int]) -> list[tuple[int, int]]:
    """Cells (row, col), 0-based, that may all be fixed to +1.

    Scanning nonzero cells in row-major order and keeping those that join two
    components of the row/column graph gives a spanning forest. Row and
    column negations act on the signs of a forest's cells freely, so fixing
    them to +1 loses no solution up to equivalence. The forest is row 1's
    support, the first shared column of every later row, and the topmost
    nonzero of each column outside row 1's support.
    """
    n = len(supp)
    parent = list(range(2 * n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    cells = []
    for i, s in enumerate(supp):
        for c in range(n):
            if s >> c & 1:
                a, b = find(i), find(n + c)
                if a != b:
                    parent[a] = b
                    cells.append((i, c))
    return cells


def parity_obstruction(supp: list[int]) -> tuple[int, int] | None:
    """First row pair (1-based) whose common support has odd size."""
    for i in range(len(supp)):
        for j in range(i + 1, len(supp)):
            if (supp[i] & supp[j]).bit_count() % 2:
                return i + 1, j + 1
    return None


@dataclass
class _Cell:
    col: int
    fixed: bool
    partners: list[int]        # earlier rows nonzero in this column
    left_after: list[int]      # per partner, common columns still to come


class _Signer:
    def __init__(self, supp: list[int], k: int, meter: Meter, stats: SearchStats):
        self.n = n = len(supp)
        self.k = k
        self.meter = meter
        self.stats = stats
        fixed = set(gauge_cells(supp))
        self.rows: list[list[_Cell]] = []
        for i in range(n):
            cols = [c for c in range(n) if supp[i] >> c & 1]
            cells = []
            for pos, c in enumerate(cols):
                partners = [j for j in range(i) if supp[j] >> c & 1]
                later = supp[i] & ~((1 << (c + 1)) - 1)
                left = [(later & supp[j]).bit_count() for j in partners]
                cells.append(_Cell(c, (i, c) in fixed, partners, left))
            self.rows.append(cells)
        self.signs = [[0] * n for _ in range(n)]
        self.dots = [[0] * n for _ in range(n)]
        self.result: WeighingMatrix | None = None

    def run(self) -> None:
        if sys.getrecursionlimit() < self.n * self.n + 100:
            sys.setrecursionlimit(self.n * self.n + 100)
        self._cell(0, 0)

    def _cell(self, i: int, pos: int) -> None:
        m = self.meter
        m.nodes += 1
        if m.nodes > m.limit or not m.nodes & TIME_CHECK_MASK:
            m.check()
        if i > self.stats.deepest_level:
            self.stats.deepest_level = i
        if i == self.n:
            mat = WeighingMatrix(self.n, self.k, tuple(tuple(r) for r in self.signs))
            if not verify(mat).is_valid:
                raise AssertionError("sign search produced a non-orthogonal matrix")
            self.result = mat
            self.stats.solutions_found += 1
            raise StopSearch
        row = self.rows[i]
        if pos == len(row):
            self._cell(i + 1, 0)
            return
        cell = row[pos]
        c = cell.col
        dots = self.dots[i]
        signs = self.signs
        for x in ((1,) if cell.fixed else (1, -1)):
            ok = True
            for j in cell.partners:
                dots[j] += x * signs[j][c]
            for j, left in zip(cell.partners, cell.left_after):
                if abs(dots[j]) > left:
                    ok = False
                    break
            if ok:
                signs[i][c] = x
                self._cell(i, pos + 1)
                signs[i][c] = 0
            else:
                self.stats.prunes["orthogonality"] += 1
            for j in cell.partners:
                dots[j] -= x * signs[j][c]


def _sign(ls: LineSystem, n: int, k: int, meter: Meter) -> tuple[WeighingMatrix | None, SearchStats]:
    supp = supports(ls, n, k)
    stats = SearchStats()
    if parity_obstruction(supp):
        stats.prunes["parity"] += 1
        return None, stats
    signer = _Signer(supp, k, meter, stats)
    start = meter.nodes
    try:
        signer.run()
    except StopSearch:
        pass
    except BudgetExhausted:
        stats.truncated = True
    stats.nodes_visited = meter.nodes - start
    return signer.result, stats


def sign_search(ls: LineSystem, n: int, k: int, budget: SearchBudget = SearchBudget()
                ) -> tuple[WeighingMatrix | None, SearchStats]:
    """Find signs on the complement of ``ls`` making the rows orthogonal.

    An exhausted search (no matrix, not truncated) proves no signing exists.
    """
    meter = Meter(budget)
    result, stats = _sign(ls, n, k, meter)
    if result is not None and zero_pattern(result) != ls:
        raise AssertionError("signed matrix has a different zero pattern")
    stats.seconds = meter.elapsed()
    return result, stats


def search_weighing(n: int, k: int, budget: SearchBudget = SearchBudget()
                    ) -> tuple[WeighingMatrix | None, SearchStats]:
    """Enumerate candidate zero patterns of a W(n, k) and try to sign each.

    Both phases draw on one node budget. Isomorphic patterns are signed once.
    """
    params = OddGeometryParams.for_weighing(n, k)
    if budget.thread_count > 1:
        return _search_weighing_partitioned(params, n, k, budget)
    meter = Meter(budget)
    seen: set[bytes] = set()
    found: list[WeighingMatrix] = []
    sign_stats = SearchStats()

    def on_geometry(ls: LineSystem) -> None:
        nonlocal sign_stats
        key = canonical_key(ls)
        if key in seen:
            return
        seen.add(key)
        mat, st = _sign(ls, n, k, meter)
        sign_stats = sign_stats + st
        if st.truncated:
            raise BudgetExhausted
        if mat is not None:
            found.append(mat)
            raise StopSearch

    geo_stats = run_search(params, meter, on_geometry)
    # sign-phase nodes were charged to the same meter inside the geometry run
    geo_stats.nodes_visited -= sign_stats.nodes_visited
    stats = geo_stats + sign_stats
    stats.solutions_found = len(found)
    stats.stopped_early = False
    stats.seconds = meter.elapsed()
    return (found[0] if found else None), stats


def _search_weighing_partitioned(params, n, k, budget):
    geometries, geo_stats = enumerate_geometries(params, budget)
    used = geo_stats.nodes_visited
    stats = geo_stats
    stats.solutions_found = 0
    seen: set[bytes] = set()
    for ls in geometries:
        key = canonical_key(ls)
        if key in seen:
            continue
        seen.add(key)
        left = budget.max_nodes - used
        if left <= 0:
            stats.truncated = True
            break
        mat, st = _sign(ls, n, k, Meter(SearchBudget(left, budget.max_seconds)))
        used += st.nodes_visited
        stats = stats + st
        if mat is not None:
            stats.solutions_found = 1
            return mat, stats
        if st.truncated:
            break
    return None, stats
