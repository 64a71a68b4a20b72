"""The intersection graphs of a line system and the checks run on them.

The plain graph joins two lines meeting in exactly one point; the weighted
graph joins lines meeting in 3, 5 or 7 points with weights 1, 2, 3. Vertex
numbers are 1-based in the public API.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Iterable

from .geometry import (LineSystem, OddGeometryParams, W23_16, intersection_profile,
                       IntersectionProfile)

# Bounds at W(23,16) parameters; see derived_bounds() for the general form.
EDGE_MIN = 138
EDGE_CEILING = 253
DEGREE_MIN = 12
WEIGHTED_DEGREE = 10


@dataclass(frozen=True)
class PlainGraph:
    n: int
    adj: tuple[int, ...]  # 0-based neighbour bitmasks

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "PlainGraph":
        adj = [0] * n
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (1 <= i <= n and 1 <= j <= n):
                raise IndexError(f"edge ({i}, {j}) outside 1..{n}")
            adj[i - 1] |= 1 << (j - 1)
            adj[j - 1] |= 1 << (i - 1)
        return cls(n, tuple(adj))

    @classmethod
    def complete(cls, n: int) -> "PlainGraph":
        full = (1 << n) - 1
        return cls(n, tuple(full & ~(1 << i) for i in range(n)))

    def edges(self) -> list[tuple[int, int]]:
        return [(i + 1, j + 1) for i in range(self.n) for j in range(i + 1, self.n)
                if self.adj[i] >> j & 1]

    def degrees(self) -> list[int]:
        return [a.bit_count() for a in self.adj]

    @property
    def edge_count(self) -> int:
        return sum(self.degrees()) // 2

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adj[i - 1] >> (j - 1) & 1)


@dataclass(frozen=True)
class WeightedGraph:
    n: int
    weights: dict[tuple[int, int], int]  # (i, j) with i < j, 1-based

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for (i, j), w in self.weights.items():
            deg[i - 1] += w
            deg[j - 1] += w
        return deg


def build_gamma(ls: LineSystem, size: int = 1) -> PlainGraph:
    """Join lines i and j when they meet in exactly ``size`` points."""
    lines = ls.lines
    adj = [0] * ls.b
    for i, j in combinations(range(ls.b), 2):
        if (lines[i] & lines[j]).bit_count() == size:
            adj[i] |= 1 << j
            adj[j] |= 1 << i
    return PlainGraph(ls.b, tuple(adj))


def build_weighted(ls: LineSystem, allowed: Iterable[int] = W23_16.allowed) -> WeightedGraph:
    """Weight (s - s_min) / 2 for lines meeting in s points, s_min the
    smallest allowed size; no edge at s_min. At W(23,16) this is weight
    1, 2, 3 for 3, 5, 7 points."""
    allowed = frozenset(allowed)
    base = min(allowed)
    if any((a - base) % 2 for a in allowed):
        raise ValueError(f"allowed sizes {sorted(allowed)} do not share one parity")
    weights = {}
    for i, j in combinations(range(ls.b), 2):
        s = (ls.lines[i] & ls.lines[j]).bit_count()
        if s not in allowed:
            raise ValueError(f"lines {i + 1} and {j + 1} meet in {s} points, not in {sorted(allowed)}")
        if s != base:
            weights[(i + 1, j + 1)] = (s - base) // 2
    return WeightedGraph(ls.b, weights)


def check_edge_bound(g: PlainGraph, minimum: int = EDGE_MIN) -> tuple[int, bool]:
    e = g.edge_count
    return e, e >= minimum


def check_min_degree(g: PlainGraph, minimum: int = DEGREE_MIN) -> tuple[int, bool, int | None]:
    """(min degree, passes, first vertex below ``minimum`` or None)."""
    degrees = g.degrees()
    low = min(degrees) if degrees else 0
    witness = next((i + 1 for i, d in enumerate(degrees) if d < minimum), None)
    return low, witness is None, witness


def check_triangles(g: PlainGraph) -> tuple[bool, int | None]:
    """Every vertex on a triangle; witness is the first vertex on none."""
    adj = g.adj
    for i in range(g.n):
        nb = adj[i]
        m = nb
        found = False
        while m:
            low = m & -m
            if adj[low.bit_length() - 1] & nb:
                found = True
                break
            m ^= low
        if not found:
            return False, i + 1
    return True, None


def check_diameter(g: PlainGraph) -> tuple[bool, tuple[int, int] | None]:
    """Diameter at most 2: every pair adjacent or with a common neighbour."""
    adj = g.adj
    for i in range(g.n):
        for j in range(i + 1, g.n):
            if not (adj[i] >> j & 1) and not (adj[i] & adj[j]):
                return False, (i + 1, j + 1)
    return True, None


def check_weighted_regularity(wg: WeightedGraph, degree: int = WEIGHTED_DEGREE) -> tuple[list[int], bool]:
    degrees = wg.degrees()
    return degrees, all(d == degree for d in degrees)


def triple_coverage(ls: LineSystem, i: int, j: int, k: int) -> int:
    """Number of points on at least one of lines i, j, k."""
    idx = (i, j, k)
    if len(set(idx)) != 3:
        raise ValueError("triple_coverage needs three distinct lines")
    for x in idx:
        if not 1 <= x <= ls.b:
            raise IndexError(f"line index {x} out of range 1..{ls.b}")
    return (ls.lines[i - 1] | ls.lines[j - 1] | ls.lines[k - 1]).bit_count()


def triangles(g: PlainGraph) -> list[tuple[int, int, int]]:
    out = []
    adj = g.adj
    for i in range(g.n):
        for j in range(i + 1, g.n):
            if not adj[i] >> j & 1:
                continue
            common = adj[i] & adj[j] & ~((1 << (j + 1)) - 1)
            while common:
                low = common & -common
                out.append((i + 1, j + 1, low.bit_length()))
                common ^= low
    return out


@dataclass(frozen=True)
class Bounds:
    edge_min: int
    edge_ceiling: int
    degree_min: int
    weighted_degree: int | None


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def derived_bounds(params: OddGeometryParams) -> Bounds:
    """Lower bounds on the plain graph and the weighted degree, from
    double counting line-pair incidences with the two smallest allowed
    sizes. At W(23,16): 138 edges of 253, degree 12, weighted degree 10."""
    sizes = sorted(params.allowed)
    pairs = comb(params.b, 2)
    if not sizes:
        return Bounds(0, pairs, 0, None)
    a1 = sizes[0]
    per_line = params.incidence_sum
    total = params.v * comb(params.d, 2)
    if len(sizes) == 1:
        edge_min, degree_min = pairs, params.b - 1
    else:
        a2 = sizes[1]
        edge_min = max(0, _ceil_div(a2 * pairs - total, a2 - a1))
        degree_min = max(0, _ceil_div(a2 * (params.b - 1) - per_line, a2 - a1))
    weighted = None
    if all((a - a1) % 2 == 0 for a in sizes):
        weighted = (per_line - a1 * (params.b - 1)) // 2
    return Bounds(edge_min, pairs, degree_min, weighted)


@dataclass
class GammaReport:
    edge_count: int
    min_degree: int
    degrees: list[int]
    triangle_at_every_vertex: bool
    triangle_witness: int | None
    diameter_at_most_2: bool
    diameter_witness: tuple[int, int] | None
    weighted_degrees: list[int]
    weighted_regular: bool
    bounds: Bounds
    edge_bound_ok: bool
    min_degree_ok: bool
    profiles: list[IntersectionProfile]
    profile_sizes: tuple[int, ...]
    triangle_count: int
    triple_coverage_min: int | None
    triple_coverage_mean: Fraction | None
    extra: dict[str, str] = field(default_factory=dict)

    @property
    def all_weighted_degrees_10(self) -> bool:
        return self.weighted_regular and self.bounds.weighted_degree == WEIGHTED_DEGREE

    @property
    def ok(self) -> bool:
        return (self.edge_bound_ok and self.min_degree_ok and self.triangle_at_every_vertex
                and self.diameter_at_most_2 and self.weighted_regular)

    def lines(self) -> list[str]:
        """``key = value`` lines in a fixed order."""
        def flag(x):
            return "true" if x else "false"

        b = self.bounds
        out = [
            f"edge_count = {self.edge_count}",
            f"min_degree = {self.min_degree}",
            f"triangle_ok = {flag(self.triangle_at_every_vertex)}",
            f"diameter_ok = {flag(self.diameter_at_most_2)}",
            f"weighted_regular_ok = {flag(self.weighted_regular)}",
            f"edge_bound = {b.edge_min}",
            f"edge_bound_ok = {flag(self.edge_bound_ok)}",
            f"edge_ceiling = {b.edge_ceiling}",
            f"edge_ratio = {Fraction(self.edge_count, b.edge_ceiling) if b.edge_ceiling else 0}",
            f"degree_bound = {b.degree_min}",
            f"degree_bound_ok = {flag(self.min_degree_ok)}",
            f"weighted_degree_target = {b.weighted_degree if b.weighted_degree is not None else 'none'}",
            f"triangle_witness = {self.triangle_witness or 'none'}",
            "diameter_witness = " + (" ".join(map(str, self.diameter_witness))
                                     if self.diameter_witness else "none"),
            f"triangle_count = {self.triangle_count}",
            f"triple_coverage_min = {self.triple_coverage_min if self.triple_coverage_min is not None else 'none'}",
            f"triple_coverage_mean = {self.triple_coverage_mean if self.triple_coverage_mean is not None else 'none'}",
        ]
        for key, value in self.extra.items():
            out.append(f"{key} = {value}")
        sizes = ",".join(map(str, self.profile_sizes))
        for i, (deg, wdeg) in enumerate(zip(self.degrees, self.weighted_degrees)):
            prof = ",".join(str(self.profiles[i][a]) for a in self.profile_sizes)
            out.append(f"vertex {i + 1} degree = {deg} weighted_degree = {wdeg} profile[{sizes}] = {prof}")
        return out


def gamma_report(ls: LineSystem, params: OddGeometryParams = W23_16) -> GammaReport:
    bounds = derived_bounds(params)
    base = min(params.allowed)
    g = build_gamma(ls, base)
    wg = build_weighted(ls, params.allowed)
    edge_count, edge_ok = check_edge_bound(g, bounds.edge_min)
    min_degree, degree_ok, _ = check_min_degree(g, bounds.degree_min)
    tri_ok, tri_witness = check_triangles(g)
    diam_ok, diam_witness = check_diameter(g)
    target = bounds.weighted_degree
    wdeg, regular = check_weighted_regularity(wg, target if target is not None else -1)
    profiles = [intersection_profile(ls, i + 1, params.allowed) for i in range(ls.b)]
    tris = triangles(g)
    coverages = [triple_coverage(ls, *t) for t in tris]
    return GammaReport(
        edge_count=edge_count,
        min_degree=min_degree,
        degrees=g.degrees(),
        triangle_at_every_vertex=tri_ok,
        triangle_witness=tri_witness,
        diameter_at_most_2=diam_ok,
        diameter_witness=diam_witness,
        weighted_degrees=wdeg,
        weighted_regular=regular,
        bounds=bounds,
        edge_bound_ok=edge_ok,
        min_degree_ok=degree_ok,
        profiles=profiles,
        profile_sizes=tuple(sorted(params.allowed)),
        triangle_count=len(tris),
        triple_coverage_min=min(coverages) if coverages else None,
        triple_coverage_mean=Fraction(sum(coverages), len(coverages)) if coverages else None,
    )
