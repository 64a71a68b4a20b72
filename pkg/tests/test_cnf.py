from itertools import product

import pytest

from oddgeom.geometry import FANO, I3_PATTERN, LineSystem
from oddgeom.matrix import WeighingMatrix, verify, zero_pattern
from oddgeom.search.cnf import (CnfFormula, GeometryDefect, ModelError, at_most, decode_model,
                                encode_signing, export_cnf, find_model, parse_dimacs, parse_model)

EMPTY2 = LineSystem(2, (0, 0))


def satisfied(clauses, assign) -> bool:
    return all(any(assign[abs(l)] == (l > 0) for l in cl) for cl in clauses)


@pytest.mark.parametrize("m, bound", [(1, 0), (3, 1), (4, 2), (5, 2), (4, 3), (5, 4)])
def test_sequential_counter_is_exact(m, bound):
    f = CnfFormula()
    xs = [f.new_var() for _ in range(m)]
    at_most(f, xs, bound)
    aux = list(range(m + 1, f.num_vars + 1))
    for inputs in product((False, True), repeat=m):
        assign = dict(zip(xs, inputs))
        ok = any(satisfied(f.clauses, {**assign, **dict(zip(aux, bits))})
                 for bits in product((False, True), repeat=len(aux)))
        assert ok == (sum(inputs) <= bound)


def test_i3_has_three_variables():
    f = encode_signing(I3_PATTERN, 3, 1)
    assert f.num_vars == 3
    model = find_model(f)
    assert model is not None
    assert verify(decode_model(f.cell_vars, model, I3_PATTERN, 3, 1)).is_valid


def test_fano_round_trip():
    f = encode_signing(FANO, 7, 4)
    model = find_model(f)
    assert model is not None and satisfied(f.clauses, model)
    m = decode_model(f.cell_vars, model, FANO, 7, 4)
    assert verify(m).is_valid and zero_pattern(m) == FANO


def test_flipped_variable_decodes_but_fails_verification():
    f = encode_signing(FANO, 7, 4)
    model = find_model(f)
    var = f.cell_vars[(2, 2)]
    model[var] = not model[var]
    m = decode_model(f.cell_vars, model, FANO, 7, 4)
    assert isinstance(m, WeighingMatrix)
    assert not verify(m).is_valid


def test_over_constrained_is_unsatisfiable():
    # W(2,2): rows share both columns; gauge fixes three cells, forcing the
    # last to agree as well leaves the rows with dot product 2
    f = encode_signing(EMPTY2, 2, 2, fixed={(2, 2): 1})
    assert find_model(f) is None
    assert find_model(encode_signing(EMPTY2, 2, 2)) is not None


def test_fixed_cell_must_be_nonzero():
    with pytest.raises(ValueError):
        encode_signing(FANO, 7, 4, fixed={(1, 1): 1})


def test_odd_common_support_is_a_defect():
    ls = LineSystem.from_points(3, [[1], [2], [3]])
    with pytest.raises(GeometryDefect):
        encode_signing(ls, 3, 2)


def test_export_and_parse(tmp_path):
    path = tmp_path / "fano.cnf"
    var_map = export_cnf(FANO, 7, 4, path)
    text = path.read_text()
    assert text.startswith("c cell 1 4 var 1\n")
    header = next(l for l in text.splitlines() if l.startswith("p "))
    f = parse_dimacs(text)
    assert header == f"p cnf {f.num_vars} {len(f.clauses)}"
    assert f.cell_vars == var_map
    assert f.clauses == encode_signing(FANO, 7, 4).clauses
    assert all(l.endswith(" 0") for l in text.splitlines() if not l.startswith(("c", "p")))


def test_export_to_bad_path_raises(tmp_path):
    with pytest.raises(OSError):
        export_cnf(FANO, 7, 4, tmp_path / "missing" / "x.cnf")


def test_parse_model_formats():
    assert parse_model("s SATISFIABLE\nv 1 -2\nv 3 0\n") == {1: True, 2: False, 3: True}
    assert parse_model("1 -2 3 0\n") == {1: True, 2: False, 3: True}
    with pytest.raises(ModelError):
        parse_model("s UNSATISFIABLE\n")
    with pytest.raises(ModelError):
        parse_model("v 1 x 0\n")


def test_decode_errors():
    f = encode_signing(FANO, 7, 4)
    model = find_model(f)
    partial = {v: val for v, val in model.items() if v != 5}
    with pytest.raises(ModelError, match="unassigned"):
        decode_model(f.cell_vars, partial, FANO, 7, 4)
    wrong = dict(f.cell_vars)
    wrong.pop((1, 4))
    with pytest.raises(ModelError, match="does not match"):
        decode_model(wrong, model, FANO, 7, 4)


def test_literal_list_model():
    f = encode_signing(FANO, 7, 4)
    model = find_model(f)
    lits = [v if val else -v for v, val in model.items()]
    assert decode_model(f.cell_vars, lits, FANO, 7, 4) == decode_model(f.cell_vars, model, FANO, 7, 4)


def test_find_model_refuses_large_instances():
    f = CnfFormula()
    xs = [f.new_var() for _ in range(30)]
    f.cell_vars = {(1, i + 1): x for i, x in enumerate(xs)}
    with pytest.raises(ValueError):
        find_model(f)
