"""{0, +1, -1} matrices: validation, text format, and the zero pattern."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .geometry import LineSystem

_TOKENS = {"+": 1, "-": -1, "0": 0, "1": 1, "-1": -1, "+1": 1}
_SYMBOLS = {1: "+", -1: "-", 0: "0"}


class MatrixFormatError(ValueError):
    """Malformed matrix text; ``lineno`` is 1-based within the input."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class WeighingMatrix:
    """A square {-1, 0, +1} matrix with a claimed weight ``k``.

    Only the shape and the entry alphabet are enforced here. Row weights and
    orthogonality are left to :func:`verify` so that candidate or broken
    matrices can still be represented.
    """

    n: int
    k: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"order must be positive, got {self.n}")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"weight must satisfy 1 <= k <= n, got k={self.k}, n={self.n}")
        rows = tuple(tuple(int(x) for x in row) for row in self.entries)
        if len(rows) != self.n:
            raise ValueError(f"expected {self.n} rows, got {len(rows)}")
        for i, row in enumerate(rows):
            if len(row) != self.n:
                raise ValueError(f"row {i + 1} has length {len(row)}, expected {self.n}")
            for j, x in enumerate(row):
                if x not in (-1, 0, 1):
                    raise ValueError(f"entry ({i + 1}, {j + 1}) = {x} is not in {{-1, 0, 1}}")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], k: int | None = None) -> "WeighingMatrix":
        """Build from row lists; ``k`` defaults to the first row's weight."""
        rows = [list(r) for r in rows]
        if k is None:
            k = sum(1 for x in rows[0] if x) if rows else 0
        return cls(len(rows), k, tuple(tuple(r) for r in rows))

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.entries[i][j]

    def support(self, i: int) -> int:
        """Bitmask of nonzero columns of row ``i`` (0-based)."""
        mask = 0
        for j, x in enumerate(self.entries[i]):
            if x:
                mask |= 1 << j
        return mask


@dataclass
class VerificationReport:
    entry_violations: list[tuple[int, int]] = field(default_factory=list)
    weight_violations: list[tuple[int, int]] = field(default_factory=list)
    orthogonality_violations: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return not (self.entry_violations or self.weight_violations
                    or self.orthogonality_violations)

    def lines(self) -> list[str]:
        out = [f"valid = {'true' if self.is_valid else 'false'}"]
        for i, j in self.entry_violations:
            out.append(f"entry_violation = {i} {j}")
        for i, w in self.weight_violations:
            out.append(f"weight_violation = row {i} weight {w}")
        for i, j, dot in self.orthogonality_violations:
            out.append(f"orthogonality_violation = rows {i} {j} dot {dot}")
        return out


def verify(m: WeighingMatrix) -> VerificationReport:
    """Check row weights and pairwise row orthogonality (positions 1-based).

    Column conditions are not checked: for a square matrix, W W^T = kI
    already forces W^T W = kI.
    """
    report = VerificationReport()
    rows = m.entries
    for i, row in enumerate(rows):
        w = sum(1 for x in row if x)
        if w != m.k:
            report.weight_violations.append((i + 1, w))
    for i in range(m.n):
        ri = rows[i]
        for j in range(i + 1, m.n):
            dot = sum(a * b for a, b in zip(ri, rows[j]))
            if dot:
                report.orthogonality_violations.append((i + 1, j + 1, dot))
    return report


def transpose(m: WeighingMatrix) -> WeighingMatrix:
    return WeighingMatrix(m.n, m.k, tuple(zip(*m.entries)))


def zero_pattern(m: WeighingMatrix) -> LineSystem:
    """Line i is the set of columns where row i is zero."""
    full = (1 << m.n) - 1
    return LineSystem(m.n, tuple(full & ~m.support(i) for i in range(m.n)))


def parse_matrix(text: str) -> WeighingMatrix:
    header = None
    rows: list[list[int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if header is None:
            if len(tokens) != 3 or tokens[0] != "W":
                raise MatrixFormatError(f"expected header 'W <n> <k>', got {line!r}", lineno)
            try:
                n, k = int(tokens[1]), int(tokens[2])
            except ValueError:
                raise MatrixFormatError(f"non-integer size in header {line!r}", lineno) from None
            if n < 1 or not 1 <= k <= n:
                raise MatrixFormatError(f"invalid header sizes n={n}, k={k}", lineno)
            header = (n, k)
            continue
        n = header[0]
        if len(rows) == n:
            raise MatrixFormatError(f"more than {n} rows after header", lineno)
        if len(tokens) != n:
            raise MatrixFormatError(f"ragged row: {len(tokens)} tokens, expected {n}", lineno)
        row = []
        for tok in tokens:
            if tok not in _TOKENS:
                raise MatrixFormatError(f"bad token {tok!r}", lineno)
            row.append(_TOKENS[tok])
        rows.append(row)
    if header is None:
        raise MatrixFormatError("missing header 'W <n> <k>'")
    if len(rows) != header[0]:
        raise MatrixFormatError(f"header declares {header[0]} rows, body has {len(rows)}")
    return WeighingMatrix(header[0], header[1], tuple(tuple(r) for r in rows))


def serialize_matrix(m: WeighingMatrix) -> str:
    out = [f"W {m.n} {m.k}"]
    out.extend(" ".join(_SYMBOLS[x] for x in row) for row in m.entries)
    return "\n".join(out) + "\n"


def circulant(first_row: Sequence[int], k: int | None = None) -> WeighingMatrix:
    """Row i is ``first_row`` cyclically shifted right by i."""
    n = len(first_row)
    return WeighingMatrix.from_rows(
        [[first_row[(j - i) % n] for j in range(n)] for i in range(n)], k)


def direct_sum(a: WeighingMatrix, b: WeighingMatrix) -> WeighingMatrix:
    if a.k != b.k:
        raise ValueError("direct sum of weighing matrices needs equal weights")
    n = a.n + b.n
    rows = [list(r) + [0] * b.n for r in a.entries]
    rows += [[0] * a.n + list(r) for r in b.entries]
    return WeighingMatrix(n, a.k, tuple(tuple(r) for r in rows))


def signed_permutation(perm: Sequence[int], signs: Sequence[int]) -> WeighingMatrix:
    """W(n,1) with entry ``signs[i]`` at (i, perm[i]), 0-based."""
    n = len(perm)
    rows = [[0] * n for _ in range(n)]
    for i, (p, s) in enumerate(zip(perm, signs)):
        rows[i][p] = s
    return WeighingMatrix(n, 1, tuple(tuple(r) for r in rows))


def apply_symmetry(m: WeighingMatrix, row_perm: Sequence[int], col_perm: Sequence[int],
                   row_signs: Sequence[int], col_signs: Sequence[int]) -> WeighingMatrix:
    """Return ``R P m Q C``: new row i is old row ``row_perm[i]``, new column j
    is old column ``col_perm[j]``, then rows/columns are scaled by the signs."""
    e = m.entries
    rows = tuple(
        tuple(row_signs[i] * col_signs[j] * e[row_perm[i]][col_perm[j]] for j in range(m.n))
        for i in range(m.n)
    )
    return WeighingMatrix(m.n, m.k, rows)


# Fixtures used by tests and the CLI examples.
W43 = WeighingMatrix.from_rows([(0, 1, 1, 1), (1, 0, 1, -1), (1, -1, 0, 1), (1, 1, -1, 0)])
W74 = circulant((1, -1, -1, 0, -1, 0, 0))
