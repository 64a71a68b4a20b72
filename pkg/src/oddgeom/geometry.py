"""Line systems over a small point set and the counting quantities on them.

Points and lines are 1-based in every public function and in the file
format. Internally a line is an int bitmask with point p at bit p - 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Mapping


class GeometryFormatError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


def mask_of(points: Iterable[int]) -> int:
    """Bitmask of 1-based points."""
    m = 0
    for p in points:
        m |= 1 << (p - 1)
    return m


def points_of(mask: int) -> list[int]:
    """1-based points of a bitmask, increasing."""
    out = []
    p = 1
    while mask:
        if mask & 1:
            out.append(p)
        mask >>= 1
        p += 1
    return out


@dataclass(frozen=True)
class LineSystem:
    """An ordered family of lines (point subsets of {1..v}); repeats allowed."""

    v: int
    lines: tuple[int, ...]

    def __post_init__(self):
        lines = tuple(int(m) for m in self.lines)
        if self.v < 0:
            raise ValueError("number of points must be nonnegative")
        if not lines:
            raise ValueError("a line system needs at least one line")
        full = (1 << self.v) - 1
        for i, m in enumerate(lines):
            if m < 0 or m & ~full:
                raise ValueError(f"line {i + 1} uses points outside 1..{self.v}")
        object.__setattr__(self, "lines", lines)

    @classmethod
    def from_points(cls, v: int, lines: Iterable[Iterable[int]]) -> "LineSystem":
        return cls(v, tuple(mask_of(L) for L in lines))

    @property
    def b(self) -> int:
        return len(self.lines)

    def line_points(self, i: int) -> list[int]:
        return points_of(self.lines[_index(i, self.b, "line")])

    def as_point_lists(self) -> list[list[int]]:
        return [points_of(m) for m in self.lines]

    def sizes(self) -> list[int]:
        return [m.bit_count() for m in self.lines]


def _index(i: int, size: int, what: str) -> int:
    if not 1 <= i <= size:
        raise IndexError(f"{what} index {i} out of range 1..{size}")
    return i - 1


@dataclass(frozen=True)
class OddGeometryParams:
    """Target parameters: ``b`` lines of size ``r`` on ``v`` points, each point
    on ``d`` lines, every line pair and point pair meeting in an allowed size."""

    v: int
    b: int
    r: int
    d: int
    allowed: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "allowed", frozenset(self.allowed))
        if min(self.v, self.b, self.r, self.d) < 0 or self.b < 1:
            raise ValueError(f"bad parameters {self}")
        if self.r > self.v or self.d > self.b:
            raise ValueError(f"line size {self.r} / degree {self.d} exceed v={self.v} / b={self.b}")
        if self.v * self.d != self.b * self.r:
            raise ValueError(
                f"inconsistent parameters: v*d = {self.v * self.d} != b*r = {self.b * self.r}")

    @classmethod
    def for_weighing(cls, n: int, k: int) -> "OddGeometryParams":
        """Parameters every zero pattern of a W(n, k) satisfies.

        Two zero sets of size r = n - k meet in a number of points that has
        the parity of n and is at least 2r - n.
        """
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
        r = n - k
        lo = max(0, 2 * r - n)
        allowed = frozenset(a for a in range(lo, r + 1) if (a - n) % 2 == 0)
        return cls(n, n, r, r, allowed)

    @property
    def incidence_sum(self) -> int:
        """Sum of intersection sizes of one line with all the others."""
        return self.r * (self.d - 1)


W23_16 = OddGeometryParams(23, 23, 7, 7, frozenset({1, 3, 5, 7}))
FANO_PARAMS = OddGeometryParams(7, 7, 3, 3, frozenset({1, 3}))

FANO = LineSystem.from_points(7, [(1, 2, 3), (1, 4, 5), (1, 6, 7), (2, 4, 6),
                                  (2, 5, 7), (3, 4, 7), (3, 5, 6)])
I3_PATTERN = LineSystem.from_points(3, [(2, 3), (1, 3), (1, 2)])


def line_intersection_size(ls: LineSystem, i: int, j: int) -> int:
    a = _index(i, ls.b, "line")
    c = _index(j, ls.b, "line")
    if a == c:
        raise ValueError("line_intersection_size needs two distinct line indices")
    return (ls.lines[a] & ls.lines[c]).bit_count()


def sigma(ls: LineSystem, p: int, q: int) -> int:
    """Number of lines through both points ``p`` and ``q``."""
    _index(p, ls.v, "point")
    _index(q, ls.v, "point")
    if p == q:
        raise ValueError("sigma needs two distinct points")
    pair = (1 << (p - 1)) | (1 << (q - 1))
    return sum(1 for m in ls.lines if m & pair == pair)


def incidence_columns(ls: LineSystem) -> list[int]:
    """For each point (0-based), the bitmask of lines (0-based) through it."""
    cols = [0] * ls.v
    for i, m in enumerate(ls.lines):
        bit = 1 << i
        while m:
            low = m & -m
            cols[low.bit_length() - 1] |= bit
            m ^= low
    return cols


def counting_identity(ls: LineSystem) -> tuple[int, int]:
    """(sum over lines of C(|L|, 2), sum over point pairs of sigma).

    The two sides count the same (pair, line) incidences, so they agree for
    every line system; the right side is computed pair by pair on purpose.
    """
    lhs = sum(comb(m.bit_count(), 2) for m in ls.lines)
    cols = incidence_columns(ls)
    rhs = 0
    for p in range(ls.v):
        cp = cols[p]
        for q in range(p + 1, ls.v):
            rhs += (cp & cols[q]).bit_count()
    return lhs, rhs


def point_degrees(ls: LineSystem) -> list[int]:
    return [c.bit_count() for c in incidence_columns(ls)]


@dataclass(frozen=True)
class IntersectionProfile:
    """How many other lines meet a given line in each number of points."""

    counts: Mapping[int, int]

    def __post_init__(self):
        object.__setattr__(self, "counts", dict(sorted((a, c) for a, c in self.counts.items() if c)))
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("profile counts must be nonnegative")

    @classmethod
    def odd(cls, n1: int, n3: int, n5: int, n7: int) -> "IntersectionProfile":
        return cls({1: n1, 3: n3, 5: n5, 7: n7})

    def __getitem__(self, size: int) -> int:
        return self.counts.get(size, 0)

    @property
    def n1(self) -> int:
        return self[1]

    @property
    def n3(self) -> int:
        return self[3]

    @property
    def n5(self) -> int:
        return self[5]

    @property
    def n7(self) -> int:
        return self[7]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def weighted_sum(self) -> int:
        return sum(a * c for a, c in self.counts.items())

    def as_tuple(self, sizes=(1, 3, 5, 7)) -> tuple[int, ...]:
        return tuple(self[a] for a in sizes)


def intersection_profile(ls: LineSystem, i: int,
                         allowed: Iterable[int] = W23_16.allowed) -> IntersectionProfile:
    """Profile of line ``i``; raises ValueError naming the first bad pair."""
    allowed = frozenset(allowed)
    a = _index(i, ls.b, "line")
    base = ls.lines[a]
    counts: dict[int, int] = {}
    for j, m in enumerate(ls.lines):
        if j == a:
            continue
        s = (base & m).bit_count()
        if s not in allowed:
            lo, hi = sorted((a + 1, j + 1))
            raise ValueError(f"lines {lo} and {hi} meet in {s} points, not in {sorted(allowed)}")
        counts[s] = counts.get(s, 0) + 1
    return IntersectionProfile(counts)


def profile_identity_check(p: IntersectionProfile, params: OddGeometryParams = W23_16) -> bool:
    """At W(23,16) parameters: n1+n3+n5+n7 = 22 and n1+3n3+5n5+7n7 = 42."""
    return p.total == params.b - 1 and p.weighted_sum == params.incidence_sum


@dataclass(frozen=True)
class CheckFailure:
    clause: str
    detail: str
    witness: tuple[int, ...] = ()

    def __str__(self):
        return f"clause {self.clause}: {self.detail}"


@dataclass
class CheckReport:
    failures: list[CheckFailure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def failed_clauses(self) -> set[str]:
        return {f.clause for f in self.failures}


def odd_geometry_check(ls: LineSystem, params: OddGeometryParams) -> CheckReport:
    """Check line count and sizes (a), line intersections (b), point degrees
    (c) and point-pair codegrees (d). Every violation is listed."""
    report = CheckReport()
    fail = report.failures.append
    allowed = params.allowed
    if ls.v != params.v:
        fail(CheckFailure("a", f"{ls.v} points, expected {params.v}"))
    if ls.b != params.b:
        fail(CheckFailure("a", f"{ls.b} lines, expected {params.b}"))
    for i, m in enumerate(ls.lines):
        if m.bit_count() != params.r:
            fail(CheckFailure("a", f"line {i + 1} has {m.bit_count()} points, expected {params.r}", (i + 1,)))
    for i, j in combinations(range(ls.b), 2):
        s = (ls.lines[i] & ls.lines[j]).bit_count()
        if s not in allowed:
            fail(CheckFailure("b", f"lines {i + 1} and {j + 1} meet in {s} points", (i + 1, j + 1)))
    cols = incidence_columns(ls)
    for p, c in enumerate(cols):
        if c.bit_count() != params.d:
            fail(CheckFailure("c", f"point {p + 1} lies on {c.bit_count()} lines, expected {params.d}", (p + 1,)))
    for p, q in combinations(range(ls.v), 2):
        s = (cols[p] & cols[q]).bit_count()
        if s not in allowed:
            fail(CheckFailure("d", f"points {p + 1} and {q + 1} lie on {s} common lines", (p + 1, q + 1)))
    return report


def dual(ls: LineSystem) -> LineSystem:
    """Swap points and lines: dual line p is the set of lines through point p."""
    return LineSystem(ls.b, tuple(incidence_columns(ls)))


def distinct_lines(ls: LineSystem) -> list[tuple[int, int]]:
    """Pairs (i, j), i < j, of lines with identical point sets."""
    seen: dict[int, int] = {}
    dups = []
    for i, m in enumerate(ls.lines):
        if m in seen:
            dups.append((seen[m] + 1, i + 1))
        else:
            seen[m] = i
    return dups


def parse_geometry(text: str) -> LineSystem:
    header = None
    lines: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if header is None:
            if len(tokens) != 3 or tokens[0] != "G":
                raise GeometryFormatError(f"expected header 'G <v> <b>', got {line!r}", lineno)
            try:
                header = (int(tokens[1]), int(tokens[2]))
            except ValueError:
                raise GeometryFormatError(f"non-integer size in header {line!r}", lineno) from None
            if header[0] < 0 or header[1] < 1:
                raise GeometryFormatError(f"invalid header sizes {header}", lineno)
            continue
        v, b = header
        if len(lines) == b:
            raise GeometryFormatError(f"more than {b} lines after header", lineno)
        try:
            nums = [int(t) for t in tokens]
        except ValueError:
            raise GeometryFormatError(f"non-integer token in {line!r}", lineno) from None
        r, pts = nums[0], nums[1:]
        if r != len(pts):
            raise GeometryFormatError(f"line declares {r} points but lists {len(pts)}", lineno)
        if any(not 1 <= p <= v for p in pts):
            raise GeometryFormatError(f"point outside 1..{v}", lineno)
        if any(a >= c for a, c in zip(pts, pts[1:])):
            raise GeometryFormatError("points must be strictly increasing", lineno)
        lines.append(mask_of(pts))
    if header is None:
        raise GeometryFormatError("missing header 'G <v> <b>'")
    if len(lines) != header[1]:
        raise GeometryFormatError(f"header declares {header[1]} lines, body has {len(lines)}")
    return LineSystem(header[0], tuple(lines))


def serialize_geometry(ls: LineSystem) -> str:
    out = [f"G {ls.v} {ls.b}"]
    for m in ls.lines:
        pts = points_of(m)
        out.append(" ".join(str(x) for x in [len(pts), *pts]))
    return "\n".join(out) + "\n"
