import random

import pytest

from oddgeom.matrix import (W43, W74, WeighingMatrix, apply_symmetry, direct_sum,
                            signed_permutation)

W22 = WeighingMatrix.from_rows([(1, 1), (1, -1)])


def random_symmetry(m: WeighingMatrix, rng: random.Random) -> WeighingMatrix:
    n = m.n
    rows, cols = list(range(n)), list(range(n))
    rng.shuffle(rows)
    rng.shuffle(cols)
    return apply_symmetry(m, rows, cols, [rng.choice((1, -1)) for _ in range(n)],
                          [rng.choice((1, -1)) for _ in range(n)])


def random_weighing(rng: random.Random, max_n: int = 16) -> WeighingMatrix:
    """A valid weighing matrix assembled from known pieces."""
    kind = rng.randrange(4)
    if kind == 0:
        n = rng.randint(1, max_n)
        perm = list(range(n))
        rng.shuffle(perm)
        m = signed_permutation(perm, [rng.choice((1, -1)) for _ in range(n)])
    else:
        base = {1: W43, 2: W74, 3: W22}[kind]
        copies = rng.randint(1, max(1, max_n // base.n))
        m = base
        for _ in range(copies - 1):
            m = direct_sum(m, random_symmetry(base, rng))
    return random_symmetry(m, rng)


@pytest.fixture
def rng():
    return random.Random(20240601)
