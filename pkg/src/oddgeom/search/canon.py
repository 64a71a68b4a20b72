"""Canonical form of a line system under point relabeling and line reordering.

Colour refinement on points, then individualisation of each point in the
first non-singleton cell, keeping the smallest relabeled line list over all
branches. Points with identical sets of lines are interchangeable, and
automorphisms found along the way prune branches in the same orbit.
"""

from __future__ import annotations

from ..geometry import LineSystem, incidence_columns


def _refine(colors: list[int], lines: tuple[int, ...], cols: list[int], v: int) -> list[int]:
    ncolors = len(set(colors))
    while True:
        line_sig = []
        for m in lines:
            sig = []
            for p in range(v):
                if m >> p & 1:
                    sig.append(colors[p])
            sig.sort()
            line_sig.append(tuple(sig))
        point_sig = []
        for p in range(v):
            c = cols[p]
            sigs = sorted(line_sig[i] for i in range(len(lines)) if c >> i & 1)
            point_sig.append((colors[p], tuple(sigs)))
        ranks = {s: i for i, s in enumerate(sorted(set(point_sig)))}
        colors = [ranks[s] for s in point_sig]
        if len(ranks) == ncolors:
            return colors
        ncolors = len(ranks)


def _relabel(lines: tuple[int, ...], colors: list[int], v: int) -> tuple[int, ...]:
    out = []
    for m in lines:
        x = 0
        for p in range(v):
            if m >> p & 1:
                x |= 1 << colors[p]
        out.append(x)
    return tuple(sorted(out))


def _orbit_reps(cell: list[int], autos: list[list[int]], fixed: list[int], v: int) -> list[int]:
    """One point per orbit of ``cell`` under the automorphisms fixing ``fixed``."""
    parent = list(range(v))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in autos:
        if all(g[p] == p for p in fixed):
            for p in range(v):
                a, b = find(p), find(g[p])
                if a != b:
                    parent[max(a, b)] = min(a, b)
    seen = set()
    reps = []
    for p in cell:
        root = find(p)
        if root not in seen:
            seen.add(root)
            reps.append(p)
    return reps


def canonical_form(ls: LineSystem) -> tuple[int, ...]:
    """Sorted line masks of the canonical relabeling of ``ls``.

    Leaves with equal forms yield automorphisms, which prune later branches
    to one representative per orbit.
    """
    v, lines = ls.v, ls.lines
    cols = incidence_columns(ls)
    best: list[tuple[int, ...] | None] = [None]
    leaves: dict[tuple[int, ...], tuple[list[int], list[int]]] = {}
    autos: list[list[int]] = []

    def search(colors: list[int], fixed: list[int]) -> None:
        colors = _refine(colors, lines, cols, v)
        if len(set(colors)) == v:
            form = _relabel(lines, colors, v)
            if best[0] is None or form < best[0]:
                best[0] = form
            if form not in leaves:
                leaves[form] = (colors, fixed)
                return
            other, path = leaves[form]
            inverse = [0] * v
            for p, c in enumerate(other):
                inverse[c] = p
            autos.append([inverse[colors[p]] for p in range(v)])
            # The automorphism maps this branch onto the earlier one below
            # their common ancestor; nothing new can appear in this branch.
            common = 0
            while common < min(len(path), len(fixed)) and path[common] == fixed[common]:
                common += 1
            raise _Backjump(common)
        cells: dict[int, list[int]] = {}
        for p, c in enumerate(colors):
            cells.setdefault(c, []).append(p)
        target = min(c for c, members in cells.items() if len(members) > 1)
        tried: list[int] = []
        twins = set()
        depth = len(fixed)
        for p in cells[target]:
            if cols[p] in twins:
                continue
            if tried and p not in _orbit_reps(tried + [p], autos, fixed, v):
                continue
            twins.add(cols[p])
            tried.append(p)
            # p keeps the cell's colour; the rest of the cell moves just above it
            new = [2 * c + (1 if c == target and q != p else 0) for q, c in enumerate(colors)]
            try:
                search(new, fixed + [p])
            except _Backjump as jump:
                if jump.level != depth:
                    raise

    search([0] * v, [])
    return best[0] if best[0] is not None else ()


class _Backjump(Exception):
    def __init__(self, level: int):
        self.level = level


def canonical_key(ls: LineSystem) -> bytes:
    """Equal for two systems exactly when one is a point relabeling and line
    reordering of the other."""
    form = canonical_form(ls)
    return f"{ls.v};{ls.b};".encode() + ",".join(f"{m:x}" for m in form).encode()


def is_isomorphic(a: LineSystem, b: LineSystem) -> bool:
    return canonical_key(a) == canonical_key(b)
