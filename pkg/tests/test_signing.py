import random
from itertools import product

import pytest

from oddgeom.geometry import FANO, I3_PATTERN, LineSystem, mask_of
from oddgeom.matrix import W43, W74, WeighingMatrix, verify, zero_pattern
from oddgeom.search.budget import SearchBudget
from oddgeom.search.signing import (PatternMismatch, gauge_cells, parity_obstruction,
                                    search_weighing, sign_search, supports)

from conftest import random_symmetry, random_weighing


def all_signings(ls: LineSystem, n: int, k: int) -> list[WeighingMatrix]:
    """Every orthogonal signing of the pattern, row by row with no gauge."""
    supp = supports(ls, n, k)
    options = []
    for s in supp:
        cols = [c for c in range(n) if s >> c & 1]
        rows = []
        for signs in product((1, -1), repeat=len(cols)):
            row = [0] * n
            for c, x in zip(cols, signs):
                row[c] = x
            rows.append(tuple(row))
        options.append(rows)
    out = []

    def rec(rows):
        if len(rows) == n:
            out.append(WeighingMatrix(n, k, tuple(rows)))
            return
        for row in options[len(rows)]:
            if all(sum(a * b for a, b in zip(row, r)) == 0 for r in rows):
                rec(rows + [row])

    rec([])
    return out


def brute_exists(n: int, k: int) -> bool:
    """Does any W(n, k) exist? Rows after the first in increasing order."""
    vecs = [v for v in product((-1, 0, 1), repeat=n) if sum(1 for x in v if x) == k]
    first = tuple([0] * (n - k) + [1] * k)

    def rec(rows):
        if len(rows) == n:
            return True
        for v in vecs:
            if len(rows) > 1 and v <= rows[-1]:
                continue
            if all(sum(a * b for a, b in zip(v, r)) == 0 for r in rows) and rec(rows + [v]):
                return True
        return False

    return rec([first])


def normalise(m: WeighingMatrix) -> WeighingMatrix:
    """Negate rows and columns so every gauge cell of m becomes +1.

    The gauge cells form a forest on rows and columns, so signs can be
    propagated outward from one root per tree.
    """
    n = m.n
    cells = gauge_cells([m.support(i) for i in range(n)])
    nbrs = {}
    for i, c in cells:
        nbrs.setdefault(("r", i), []).append(("c", c))
        nbrs.setdefault(("c", c), []).append(("r", i))
    sign = {}
    for start in nbrs:
        if start in sign:
            continue
        sign[start] = 1
        stack = [start]
        while stack:
            x = stack.pop()
            for y in nbrs[x]:
                if y in sign:
                    continue
                i, c = (x[1], y[1]) if x[0] == "r" else (y[1], x[1])
                sign[y] = sign[x] * m[i, c]
                stack.append(y)
    rows = tuple(tuple(sign.get(("r", i), 1) * sign.get(("c", c), 1) * m[i, c] for c in range(n))
                 for i in range(n))
    return WeighingMatrix(n, m.k, rows)


def test_sign_fano():
    m, stats = sign_search(FANO, 7, 4)
    assert m is not None and verify(m).is_valid
    assert zero_pattern(m) == FANO
    assert stats.solutions_found == 1 and not stats.truncated


def test_sign_circulant_pattern():
    m, _ = sign_search(zero_pattern(W74), 7, 4)
    assert verify(m).is_valid and zero_pattern(m) == zero_pattern(W74)


def test_sign_i3():
    m, _ = sign_search(I3_PATTERN, 3, 1)
    assert verify(m).is_valid
    assert all(abs(m[i, i]) == 1 for i in range(3))


def test_parity_obstruction_exhausts_at_once():
    lines = [list(range(1, 8)), list(range(2, 9))]
    lines += [[(i + j) % 23 + 1 for j in range(7)] for i in range(2, 23)]
    ls = LineSystem.from_points(23, lines)
    m, stats = sign_search(ls, 23, 16)
    assert m is None and not stats.truncated
    assert stats.prunes["parity"] == 1 and stats.nodes_visited == 0
    assert parity_obstruction(supports(ls, 23, 16)) == (1, 2)


def test_dimension_mismatch():
    with pytest.raises(PatternMismatch):
        sign_search(FANO, 8, 4)
    with pytest.raises(PatternMismatch):
        sign_search(FANO, 7, 3)


def test_gauge_cells_form_a_spanning_forest():
    supp = supports(FANO, 7, 4)
    cells = gauge_cells(supp)
    # row/column graph of a connected support: 14 vertices, so 13 tree edges
    assert len(cells) == 13
    assert [c for i, c in cells if i == 0] == [c for c in range(7) if supp[0] >> c & 1]


def test_gauge_keeps_every_solution():
    for base in (W43, W74):
        ls = zero_pattern(base)
        signings = all_signings(ls, base.n, base.k)
        assert signings
        for m in signings:
            norm = normalise(m)
            assert verify(norm).is_valid
            assert all(norm[i, c] == 1 for i, c in gauge_cells([m.support(i) for i in range(m.n)]))


def test_gauge_search_agrees_with_unrestricted_brute_force():
    rng = random.Random(13)
    for _ in range(60):
        n = rng.randint(2, 6)
        r = rng.randint(0, n - 1)
        ls = LineSystem.from_points(n, [rng.sample(range(1, n + 1), r) for _ in range(n)])
        found, stats = sign_search(ls, n, n - r)
        assert not stats.truncated
        assert (found is not None) == bool(all_signings(ls, n, n - r))
    for _ in range(30):
        m = random_weighing(rng, 8)
        found, _ = sign_search(zero_pattern(m), m.n, m.k)
        assert found is not None and verify(found).is_valid


def test_sign_search_on_symmetric_copies():
    rng = random.Random(17)
    for _ in range(20):
        m = random_symmetry(W74, rng)
        got, _ = sign_search(zero_pattern(m), 7, 4)
        assert got is not None and zero_pattern(got) == zero_pattern(m)


def test_sign_budget_truncates():
    _, stats = sign_search(FANO, 7, 4, SearchBudget(max_nodes=3))
    assert stats.truncated


@pytest.mark.parametrize("n", range(1, 7))
def test_search_weighing_matches_brute_force(n):
    for k in range(1, n + 1):
        m, stats = search_weighing(n, k, SearchBudget(10**6, 60))
        assert not stats.truncated
        assert (m is not None) == brute_exists(n, k), (n, k)
        if m is not None:
            assert verify(m).is_valid and (m.n, m.k) == (n, k)


def test_search_weighing_examples():
    m, stats = search_weighing(7, 4)
    assert m is not None and verify(m).is_valid
    m, _ = search_weighing(2, 2)
    assert sorted(abs(x) for row in m.entries for x in row) == [1, 1, 1, 1]
    assert verify(m).is_valid
    m, stats = search_weighing(3, 2)
    assert m is None and stats.complete


def test_search_weighing_budget():
    m, stats = search_weighing(23, 16, SearchBudget(50_000))
    assert m is None and stats.truncated
    assert stats.nodes_visited <= 50_000


def test_partitioned_pipeline():
    m, stats = search_weighing(8, 4, SearchBudget(thread_count=2))
    assert m is not None and verify(m).is_valid


def test_supports_are_complements():
    supp = supports(FANO, 7, 4)
    assert all(s & m == 0 and s | m == mask_of(range(1, 8)) for s, m in zip(supp, FANO.lines))
