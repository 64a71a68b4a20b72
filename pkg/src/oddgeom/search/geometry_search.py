"""Backtracking enumeration of line systems with prescribed parameters.

New lines are generated in lexicographic order of their sorted point
tuples, so the next line must contain the smallest point that still lacks
lines. Lines are built one point at a time; every added point is one search
node. Intersection sizes of the growing line with the placed lines are kept
either as a single parity bitmask (when the allowed sizes are exactly one
parity class) or as bit-sliced counters.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from ..geometry import LineSystem, OddGeometryParams, odd_geometry_check
from .budget import (BudgetExhausted, Meter, SearchBudget, SearchStats, StopSearch,
                     TIME_CHECK_MASK)


@dataclass
class PartialGeometry:
    """Placed lines plus the running incidence data derived from them."""

    params: OddGeometryParams
    lines: list[int] = field(default_factory=list)

    def __post_init__(self):
        v = self.params.v
        self.lines = list(self.lines)
        self.degrees = [0] * v
        self.cols = [0] * v
        for i, m in enumerate(self.lines):
            for p in range(v):
                if m >> p & 1:
                    self.degrees[p] += 1
                    self.cols[p] |= 1 << i

    def intersections(self) -> dict[tuple[int, int], int]:
        ls = self.lines
        return {(i, j): (ls[i] & ls[j]).bit_count()
                for i in range(len(ls)) for j in range(i + 1, len(ls))}


def prune_reason(pg: PartialGeometry) -> str | None:
    """Name of the first rule showing ``pg`` has no completion, else None."""
    p = pg.params
    v, b, r, d = p.v, p.b, p.r, p.d
    allowed = p.allowed
    amin, amax = (min(allowed), max(allowed)) if allowed else (0, -1)
    parity = parity_class(p)
    lines = pg.lines
    remaining = b - len(lines)
    if remaining < 0 or any(m.bit_count() != r or m >> v for m in lines):
        return "point_degree"
    for s in pg.intersections().values():
        if s not in allowed:
            return "parity"
    if any(x > d for x in pg.degrees):
        return "point_degree"
    if sum(d - x for x in pg.degrees) != r * remaining:
        return "point_degree"
    for m in lines:
        cap = sum(d - pg.degrees[q] for q in range(v) if m >> q & 1)
        if not remaining * amin <= cap <= remaining * amax:
            return "profile_bound"
    cols = pg.cols
    for q in range(v):
        if pg.degrees[q] == d:
            for x in range(v):
                if x != q and (cols[q] & cols[x]).bit_count() not in allowed:
                    return "codegree"
            continue
        flips = (d - pg.degrees[q]) * max(r - 1, 0)
        if amin > 0:
            uncovered = sum(1 for x in range(v) if x != q and not cols[q] & cols[x])
            if flips < uncovered * amin:
                return "codegree"
        if parity is not None:
            wrong = sum(1 for x in range(v)
                        if x != q and (cols[q] & cols[x]).bit_count() % 2 != parity)
            if wrong > flips or (wrong - flips) % 2:
                return "codegree"
    return None


def parity_class(params: OddGeometryParams) -> int | None:
    """The common parity when the allowed sizes are every size of one parity
    from 0 to r, else None."""
    parities = {a % 2 for a in params.allowed}
    if len(parities) != 1:
        return None
    par = parities.pop()
    full = {a for a in range(params.r + 1) if a % 2 == par}
    return par if params.allowed == full else None


def prune_partial(pg: PartialGeometry) -> bool:
    """True when ``pg`` may still have a completion (the rules are sound)."""
    return prune_reason(pg) is None


def lex_le(a: int, b: int) -> bool:
    """Lexicographic order of the sorted point tuples of two equal-size lines."""
    if a == b:
        return True
    x = a ^ b
    return bool(a & x & -x)


def _bits(m: int) -> list[int]:
    out = []
    while m:
        low = m & -m
        out.append(low.bit_length() - 1)
        m ^= low
    return out


class _Engine:
    def __init__(self, params: OddGeometryParams, meter: Meter, stats: SearchStats,
                 on_solution: Callable[[LineSystem], None], *, symmetry: bool = True,
                 stop_depth: int | None = None, on_frontier: Callable[[list[int]], None] | None = None):
        self.params = params
        self.v, self.b, self.r, self.d = params.v, params.b, params.r, params.d
        self.allowed = params.allowed
        self.amin = min(self.allowed) if self.allowed else 0
        self.amax = max(self.allowed) if self.allowed else -1
        self.meter = meter
        self.stats = stats
        self.prunes = stats.prunes
        self.on_solution = on_solution
        self.symmetry = symmetry
        self.stop_depth = stop_depth
        self.on_frontier = on_frontier

        v, r = self.v, self.r
        par = parity_class(params)
        self.parity_mode = par is not None
        self.parity = par or 0
        self.nplanes = max(1, r.bit_length())
        # dead[s]: counts that cannot reach an allowed size with s more hits
        self.dead = [[c for c in range(r + 1)
                      if not any(c <= a <= c + s for a in self.allowed)]
                     for s in range(r + 1)]

        self.lines: list[int] = []
        self.cols = [0] * v
        self.deg = [0] * v
        self.cover = [0] * v
        # bit q of xcover[p] is the parity of the number of lines through p and q
        self.xcover = [0] * v
        self.caps: list[int] = []
        self.open = (1 << v) - 1 if self.d > 0 else 0
        self.placed = 0
        # Index into self.lines of the first line generated in order; lines
        # before it are a seed and do not constrain the lexicographic order.
        self.order_start = 0
        self.must_pts = self.forbid_pts = 0
        self.prev_pts: list[int] | None = None

    # -- state updates -------------------------------------------------

    def place(self, mask: int) -> list[tuple[int, int]]:
        t = len(self.lines)
        bit = 1 << t
        d = self.d
        undo = []
        caps = self.caps
        cap_new = 0
        for p in _bits(mask):
            before = self.cols[p]
            for i in _bits(before):
                caps[i] -= 1
            undo.append((p, self.cover[p]))
            self.cols[p] = before | bit
            self.cover[p] |= mask
            self.xcover[p] ^= mask
            self.deg[p] += 1
            cap_new += d - self.deg[p]
            if self.deg[p] == d:
                self.open &= ~(1 << p)
        caps.append(cap_new)
        self.lines.append(mask)
        self.placed |= bit
        return undo

    def unplace(self, undo: list[tuple[int, int]]) -> None:
        mask = self.lines.pop()
        t = len(self.lines)
        bit = 1 << t
        self.placed &= ~bit
        self.caps.pop()
        caps = self.caps
        for p, cov in undo:
            self.cols[p] &= ~bit
            self.cover[p] = cov
            self.xcover[p] ^= mask
            self.deg[p] -= 1
            self.open |= 1 << p
            for i in _bits(self.cols[p]):
                caps[i] += 1

    def line_checks(self, mask: int) -> str | None:
        """Rules applied right after ``mask`` became the newest line."""
        allowed, cols, deg, d, v = self.allowed, self.cols, self.deg, self.d, self.v
        remaining = self.b - len(self.lines)
        lo, hi = remaining * self.amin, remaining * self.amax
        for c in self.caps:
            if c < lo or c > hi:
                return "profile_bound"
        r1 = self.r - 1
        for p in _bits(mask):
            cp = cols[p]
            if deg[p] == d:
                for q in range(v):
                    if q != p and (cp & cols[q]).bit_count() not in allowed:
                        return "codegree"
                continue
            flips = (d - deg[p]) * r1
            if self.amin:
                uncovered = v - self.cover[p].bit_count()
                if flips < uncovered * self.amin:
                    return "codegree"
            if self.parity_mode:
                odd = (self.xcover[p] & ~(1 << p)).bit_count()
                wrong = v - 1 - odd if self.parity else odd
                if wrong > flips or (wrong - flips) % 2:
                    return "codegree"
        return None

    # -- search --------------------------------------------------------

    def run(self, seed: Sequence[int] = (), seed_ordered: bool = True) -> None:
        need = self.b * (self.r + 3) + 100
        if sys.getrecursionlimit() < need:
            sys.setrecursionlimit(need)
        for m in seed:
            self.place(m)
        if seed_ordered:
            self.order_start = max(0, len(self.lines) - 1)
        else:
            self.order_start = len(self.lines)
            pg = PartialGeometry(self.params, list(seed))
            reason = prune_reason(pg)
            if reason:
                self.prunes[reason] += 1
                return
        self._line_level()

    def _line_level(self) -> None:
        t = len(self.lines)
        if t > self.stats.deepest_level:
            self.stats.deepest_level = t
        if self.stop_depth is not None and t >= self.stop_depth and t < self.b:
            self.on_frontier(list(self.lines))
            return
        if t == self.b:
            self._emit()
            return
        if self.r == 0:
            self._try_line(0)
            return
        if self.symmetry and t <= 1:
            for cand in self._fixed_candidates(t):
                m = self.meter
                m.nodes += 1
                if m.nodes > m.limit or not m.nodes & TIME_CHECK_MASK:
                    m.check()
                self._try_line(cand)
            return
        self._start_line()

    def _fixed_candidates(self, t: int) -> list[int]:
        r, v = self.r, self.v
        first = (1 << r) - 1
        if t == 0:
            return [first]
        # Up to relabeling inside and outside the first line, the second line
        # takes the lowest j points of the first line and the lowest r - j
        # points outside it.
        out = []
        for j in range(r, -1, -1):
            if 2 * r - j > v:
                break
            out.append(((1 << j) - 1) | (((1 << (r - j)) - 1) << r))
        return out

    def _try_line(self, mask: int) -> None:
        """Check a whole candidate line against the placed lines and recurse."""
        t = len(self.lines)
        if t > self.order_start and not lex_le(self.lines[-1], mask):
            self.prunes["symmetry"] += 1
            return
        if any(mask >> p & 1 and self.deg[p] >= self.d for p in range(self.v)):
            self.prunes["point_degree"] += 1
            return
        first_open = self.open & -self.open
        if mask and not mask & first_open:
            self.prunes["point_degree"] += 1
            return
        for m in self.lines:
            if (m & mask).bit_count() not in self.allowed:
                self.prunes["parity"] += 1
                return
        self._descend(mask)

    def _descend(self, mask: int) -> None:
        undo = self.place(mask)
        reason = self.line_checks(mask)
        if reason:
            self.prunes[reason] += 1
        else:
            self._line_level()
        self.unplace(undo)

    def _start_line(self) -> None:
        if not self.open:
            self.prunes["point_degree"] += 1
            return
        p0 = (self.open & -self.open).bit_length() - 1
        # Codegree constraints when this is the last line through p0.
        must_pts = forbid_pts = 0
        if self.deg[p0] == self.d - 1:
            allowed, cols = self.allowed, self.cols
            c0 = cols[p0]
            for q in range(self.v):
                if q == p0:
                    continue
                s = (c0 & cols[q]).bit_count()
                if s not in allowed:
                    must_pts |= 1 << q
                if s + 1 not in allowed:
                    forbid_pts |= 1 << q
            if must_pts & (forbid_pts | ~self.open) or must_pts.bit_count() > self.r - 1:
                self.prunes["codegree"] += 1
                return
        # deeper lines overwrite these, so restore them when this line is done
        saved = self.must_pts, self.forbid_pts, self.prev_pts
        self.must_pts = must_pts
        self.forbid_pts = forbid_pts
        t = len(self.lines)
        prev = None
        if t > self.order_start:
            prev = self.lines[-1]
            prev_pts = _bits(prev)
            if prev_pts[0] < p0:
                prev = None
        self.prev_pts = _bits(prev) if prev is not None else None
        tight = prev is not None
        bit0 = 1 << p0
        if self.parity_mode:
            self._pt_parity(bit0, p0 + 1, self.r - 1, tight, self.cols[p0])
        else:
            planes = self._inc((0,) * self.nplanes, self.cols[p0])
            self._pt_generic(bit0, p0 + 1, self.r - 1, tight, planes)
        self.must_pts, self.forbid_pts, self.prev_pts = saved

    def _candidates(self, cur: int, nxt: int, s: int, tight: bool) -> int:
        cand = self.open & ~((1 << nxt) - 1) & ((1 << (self.v - s + 1)) - 1)
        cand &= ~self.forbid_pts
        must = self.must_pts & ~cur
        if must:
            if must & ((1 << nxt) - 1) or must.bit_count() > s:
                return -1
            low = must & -must
            cand &= (low << 1) - 1
        if tight:
            lo = self.prev_pts[self.r - s]
            below = cand & ((1 << lo) - 1)
            if below:
                self.prunes["symmetry"] += below.bit_count()
                cand &= ~below
        return cand

    def _pt_parity(self, cur: int, nxt: int, s: int, tight: bool, par: int) -> None:
        m = self.meter
        m.nodes += 1
        if m.nodes > m.limit or not m.nodes & TIME_CHECK_MASK:
            m.check()
        placed = self.placed
        # lines whose intersection with cur has the wrong parity
        must = (placed & ~par) if self.parity else (placed & par)
        if s == 0:
            if must:
                self.prunes["parity"] += 1
                return
            self._descend(cur)
            return
        if must.bit_count() > s * (self.d - 1):
            self.prunes["parity"] += 1
            return
        cand = self._candidates(cur, nxt, s, tight)
        if cand < 0:
            self.prunes["codegree"] += 1
            return
        cols = self.cols
        if s == 1:
            while cand:
                low = cand & -cand
                q = low.bit_length() - 1
                cand ^= low
                if cols[q] != must:
                    self.prunes["parity"] += 1
                    continue
                self._pt_parity(cur | low, q + 1, 0, False, par ^ cols[q])
            return
        lo = self.prev_pts[self.r - s] if tight else -1
        while cand:
            low = cand & -cand
            q = low.bit_length() - 1
            cand ^= low
            self._pt_parity(cur | low, q + 1, s - 1, q == lo, par ^ cols[q])

    def _inc(self, planes: tuple[int, ...], x: int) -> tuple[int, ...]:
        out = []
        carry = x
        for p in planes:
            out.append(p ^ carry)
            carry &= p
        return tuple(out)

    def _eq(self, planes: tuple[int, ...], c: int) -> int:
        m = self.placed
        for i, p in enumerate(planes):
            m &= p if c >> i & 1 else ~p
        return m

    def _pt_generic(self, cur: int, nxt: int, s: int, tight: bool, planes: tuple[int, ...]) -> None:
        m = self.meter
        m.nodes += 1
        if m.nodes > m.limit or not m.nodes & TIME_CHECK_MASK:
            m.check()
        ok_now = 0
        for a in self.allowed:
            ok_now |= self._eq(planes, a)
        must = self.placed & ~ok_now
        if s == 0:
            if must:
                self.prunes["parity"] += 1
                return
            self._descend(cur)
            return
        dead = 0
        for c in self.dead[s]:
            dead |= self._eq(planes, c)
        if dead or must.bit_count() > s * (self.d - 1):
            self.prunes["parity"] += 1
            return
        cand = self._candidates(cur, nxt, s, tight)
        if cand < 0:
            self.prunes["codegree"] += 1
            return
        cols = self.cols
        if s == 1:
            ok_next = 0
            for a in self.allowed:
                if a >= 1:
                    ok_next |= self._eq(planes, a - 1)
            forbid = self.placed & ~ok_next
            if must & forbid:
                self.prunes["parity"] += 1
                return
            while cand:
                low = cand & -cand
                q = low.bit_length() - 1
                cand ^= low
                cq = cols[q]
                if cq & must != must or cq & forbid & ~must:
                    self.prunes["parity"] += 1
                    continue
                self._pt_generic(cur | low, q + 1, 0, False, self._inc(planes, cq))
            return
        lo = self.prev_pts[self.r - s] if tight else -1
        while cand:
            low = cand & -cand
            q = low.bit_length() - 1
            cand ^= low
            self._pt_generic(cur | low, q + 1, s - 1, q == lo, self._inc(planes, cols[q]))

    def _emit(self) -> None:
        ls = LineSystem(self.v, tuple(self.lines))
        report = odd_geometry_check(ls, self.params)
        if not report.ok:
            raise AssertionError(f"search emitted an invalid geometry: {report.failures[:3]}")
        self.stats.solutions_found += 1
        self.on_solution(ls)


def _check_params(params: OddGeometryParams) -> None:
    if params.v * params.d != params.b * params.r:
        raise ValueError(f"inconsistent parameters {params}")


def run_search(params: OddGeometryParams, meter: Meter, on_solution, *, symmetry: bool = True,
               seed: Sequence[int] = (), seed_ordered: bool = True,
               stop_depth: int | None = None, on_frontier=None) -> SearchStats:
    """Run one engine to completion, budget exhaustion or StopSearch."""
    stats = SearchStats()
    engine = _Engine(params, meter, stats, on_solution, symmetry=symmetry,
                     stop_depth=stop_depth, on_frontier=on_frontier)
    start_nodes = meter.nodes
    try:
        engine.run(seed, seed_ordered)
    except BudgetExhausted:
        stats.truncated = True
    except StopSearch:
        stats.stopped_early = True
    stats.nodes_visited = meter.nodes - start_nodes
    return stats


def enumerate_geometries(params: OddGeometryParams, budget: SearchBudget = SearchBudget(),
                         emit_limit: int | None = None, *, symmetry_breaking: bool = True,
                         split_depth: int = 2, checkpoint: str | None = None,
                         resume: str | None = None) -> tuple[list[LineSystem], SearchStats]:
    """All line systems with ``params``, up to the captured symmetry.

    Lines are emitted in lexicographic order. With symmetry breaking, the
    first line is {1..r} and the second is normalised under relabelings that
    fix the first; every geometry still has an isomorphic copy in the output
    of a complete run. ``thread_count > 1``, ``checkpoint`` or ``resume``
    switch to the partitioned driver in :mod:`.parallel`.
    """
    _check_params(params)
    if budget.thread_count > 1 or checkpoint or resume:
        from .parallel import partitioned_geometries
        return partitioned_geometries(params, budget, emit_limit, symmetry_breaking=symmetry_breaking,
                                      split_depth=split_depth, checkpoint=checkpoint, resume=resume)
    meter = Meter(budget)
    found: list[LineSystem] = []

    def sink(ls: LineSystem) -> None:
        found.append(ls)
        if emit_limit is not None and len(found) >= emit_limit:
            raise StopSearch

    stats = run_search(params, meter, sink, symmetry=symmetry_breaking)
    stats.seconds = meter.elapsed()
    return found, stats


def complete_partial(params: OddGeometryParams, lines: Iterable[int],
                     budget: SearchBudget = SearchBudget(), emit_limit: int | None = 1
                     ) -> tuple[list[LineSystem], SearchStats]:
    """Search for completions of an arbitrary set of placed lines."""
    _check_params(params)
    meter = Meter(budget)
    found: list[LineSystem] = []

    def sink(ls: LineSystem) -> None:
        found.append(ls)
        if emit_limit is not None and len(found) >= emit_limit:
            raise StopSearch

    stats = run_search(params, meter, sink, symmetry=False, seed=list(lines), seed_ordered=False)
    stats.seconds = meter.elapsed()
    return found, stats
