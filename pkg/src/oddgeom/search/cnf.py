"""DIMACS CNF encoding of the signing problem for external SAT solvers.

Variable ``x[i][c]`` is true when cell (i, c) is +1. For every row pair
and every shared column a product variable is tied to the two cell
variables by four XNOR clauses; exactly half the products of a pair must be
true, which is two "at most m/2" sequential counters, one over the products
and one over their negations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..geometry import LineSystem
from ..matrix import WeighingMatrix
from .signing import gauge_cells, supports


class GeometryDefect(ValueError):
    """Two rows share an odd number of columns, so no signing exists."""


class ModelError(ValueError):
    pass


@dataclass
class CnfFormula:
    num_vars: int = 0
    clauses: list[list[int]] = field(default_factory=list)
    cell_vars: dict[tuple[int, int], int] = field(default_factory=dict)  # 1-based cells

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def to_dimacs(self) -> str:
        out = [f"c cell {r} {c} var {v}" for (r, c), v in sorted(self.cell_vars.items())]
        out.append(f"p cnf {self.num_vars} {len(self.clauses)}")
        out += [" ".join(map(str, cl)) + " 0" for cl in self.clauses]
        return "\n".join(out) + "\n"


def at_most(f: CnfFormula, lits: list[int], bound: int) -> None:
    """Sequential counter: at most ``bound`` of ``lits`` are true."""
    m = len(lits)
    if bound >= m:
        return
    if bound <= 0:
        f.clauses.extend([-x] for x in lits)
        return
    # s[i][j]: at least j+1 of lits[0..i] are true
    s = [[f.new_var() for _ in range(bound)] for _ in range(m - 1)]
    cl = f.clauses
    cl.append([-lits[0], s[0][0]])
    for j in range(1, bound):
        cl.append([-s[0][j]])
    for i in range(1, m - 1):
        x = lits[i]
        cl.append([-x, s[i][0]])
        cl.append([-s[i - 1][0], s[i][0]])
        for j in range(1, bound):
            cl.append([-x, -s[i - 1][j - 1], s[i][j]])
            cl.append([-s[i - 1][j], s[i][j]])
        cl.append([-x, -s[i - 1][bound - 1]])
    cl.append([-lits[m - 1], -s[m - 2][bound - 1]])


def encode_signing(ls: LineSystem, n: int, k: int,
                   fixed: dict[tuple[int, int], int] | None = None) -> CnfFormula:
    """CNF whose models are the gauge-normalised signings of ``ls``.

    ``fixed`` maps extra 1-based cells to a sign and adds them as unit clauses.
    """
    supp = supports(ls, n, k)
    f = CnfFormula()
    for i in range(n):
        for c in range(n):
            if supp[i] >> c & 1:
                f.cell_vars[(i + 1, c + 1)] = f.new_var()
    x = f.cell_vars
    for i, c in gauge_cells(supp):
        f.clauses.append([x[(i + 1, c + 1)]])
    for (i, c), sign in (fixed or {}).items():
        if (i, c) not in x:
            raise ValueError(f"cell ({i}, {c}) is a zero of the pattern")
        f.clauses.append([x[(i, c)] if sign > 0 else -x[(i, c)]])
    for i in range(n):
        for j in range(i + 1, n):
            common = supp[i] & supp[j]
            size = common.bit_count()
            if size % 2:
                raise GeometryDefect(f"rows {i + 1} and {j + 1} share {size} columns")
            prods = []
            for c in range(n):
                if common >> c & 1:
                    a, b = x[(i + 1, c + 1)], x[(j + 1, c + 1)]
                    p = f.new_var()
                    f.clauses += [[-p, -a, b], [-p, a, -b], [p, a, b], [p, -a, -b]]
                    prods.append(p)
            at_most(f, prods, size // 2)
            at_most(f, [-p for p in prods], size // 2)
    return f


def export_cnf(ls: LineSystem, n: int, k: int, path: str | Path,
               fixed: dict[tuple[int, int], int] | None = None) -> dict[tuple[int, int], int]:
    """Write the signing CNF to ``path``; returns the cell -> variable map."""
    f = encode_signing(ls, n, k, fixed)
    Path(path).write_text(f.to_dimacs())
    return dict(f.cell_vars)


def parse_dimacs(text: str) -> CnfFormula:
    f = CnfFormula()
    declared = None
    pending: list[int] = []
    for raw in text.splitlines():
        tok = raw.split()
        if not tok:
            continue
        if tok[0] == "c":
            if len(tok) == 6 and tok[1] == "cell" and tok[4] == "var":
                f.cell_vars[(int(tok[2]), int(tok[3]))] = int(tok[5])
            continue
        if tok[0] == "p":
            f.num_vars, declared = int(tok[2]), int(tok[3])
            continue
        for t in tok:
            lit = int(t)
            if lit == 0:
                f.clauses.append(pending)
                pending = []
            else:
                pending.append(lit)
    if declared is not None and declared != len(f.clauses):
        raise ValueError(f"header declares {declared} clauses, found {len(f.clauses)}")
    return f


def parse_model(text: str) -> dict[int, bool]:
    """Read a solver model: ``v``-prefixed lines (SAT competition output) or
    bare literal lists; ``s UNSATISFIABLE`` raises ModelError."""
    model: dict[int, bool] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tok = raw.split()
        if not tok or tok[0] == "c":
            continue
        if tok[0] == "s":
            if "UNSAT" in raw.upper():
                raise ModelError("solver reported UNSATISFIABLE")
            continue
        if tok[0] == "v":
            tok = tok[1:]
        for t in tok:
            try:
                lit = int(t)
            except ValueError:
                raise ModelError(f"line {lineno}: bad literal {t!r}") from None
            if lit:
                model[abs(lit)] = lit > 0
    return model


def decode_model(var_map: dict[tuple[int, int], int], model: dict[int, bool] | list[int],
                 ls: LineSystem, n: int, k: int) -> WeighingMatrix:
    """Matrix with +1 where the cell variable is true, -1 where false."""
    if not isinstance(model, dict):
        model = {abs(l): l > 0 for l in model}
    supp = supports(ls, n, k)
    cells = {(i + 1, c + 1) for i in range(n) for c in range(n) if supp[i] >> c & 1}
    if set(var_map) != cells:
        raise ModelError("variable map does not match the geometry's nonzero cells")
    missing = [v for v in var_map.values() if v not in model]
    if missing:
        raise ModelError(f"model leaves {len(missing)} cell variables unassigned, e.g. {missing[0]}")
    rows = [[0] * n for _ in range(n)]
    for (i, c), var in var_map.items():
        rows[i - 1][c - 1] = 1 if model[var] else -1
    return WeighingMatrix(n, k, tuple(tuple(r) for r in rows))


def _propagate(clauses: list[list[int]], assign: dict[int, bool]) -> bool:
    changed = True
    while changed:
        changed = False
        for cl in clauses:
            unset = None
            count = 0
            sat = False
            for lit in cl:
                val = assign.get(abs(lit))
                if val is None:
                    unset = lit
                    count += 1
                elif val == (lit > 0):
                    sat = True
                    break
            if sat:
                continue
            if count == 0:
                return False
            if count == 1:
                assign[abs(unset)] = unset > 0
                changed = True
    return True


def find_model(f: CnfFormula, branch_vars: list[int] | None = None, limit: int = 24
               ) -> dict[int, bool] | None:
    """Small model finder for tests: branches on ``branch_vars`` (default the
    cell variables) with unit propagation, then sets leftovers false.

    Complete for formulas from :func:`encode_signing`, where the cell
    variables determine every product and fix all forced counter bits.
    """
    if branch_vars is None:
        branch_vars = sorted(f.cell_vars.values())
    unit_fixed = {abs(cl[0]) for cl in f.clauses if len(cl) == 1}
    if sum(1 for v in branch_vars if v not in unit_fixed) > limit:
        raise ValueError(f"more than {limit} free branching variables")

    def rec(assign: dict[int, bool], idx: int) -> dict[int, bool] | None:
        if not _propagate(f.clauses, assign):
            return None
        while idx < len(branch_vars) and branch_vars[idx] in assign:
            idx += 1
        if idx == len(branch_vars):
            full = {v: assign.get(v, False) for v in range(1, f.num_vars + 1)}
            if all(any(full[abs(l)] == (l > 0) for l in cl) for cl in f.clauses):
                return full
            return None
        for val in (True, False):
            trial = dict(assign)
            trial[branch_vars[idx]] = val
            got = rec(trial, idx + 1)
            if got is not None:
                return got
        return None

    return rec({}, 0)
