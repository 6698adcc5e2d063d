import json

import numpy as np
import pytest

from walklearn.domain import (
    DNF, TOP, UBOX, Alphabet, FreqIndex, Parity, Rectangle, TruthTable, constant, description_size,
    evaluate, function_from_dict, function_to_dict, random_instance, read_function, write_function)
from walklearn.errors import ContractViolation, ParameterError, ResourceError


def test_alphabet_validation():
    with pytest.raises(ParameterError):
        Alphabet(1, 3)
    with pytest.raises(ParameterError):
        Alphabet(2, 0)
    with pytest.raises(ResourceError):
        Alphabet(2, 30).check_exact()


def test_point_index_round_trip():
    alpha = Alphabet(3, 4)
    pts = alpha.all_points()
    assert pts.shape == (81, 4)
    assert np.array_equal(alpha.index_of(pts), np.arange(81))
    assert alpha.point_at(5) == (2, 1, 0, 0)


def test_out_of_range_point_rejected():
    f = Parity(FreqIndex((1, 0, 1)))
    with pytest.raises(ContractViolation):
        f.evaluate((0, 2, 0))
    with pytest.raises(ContractViolation):
        f.evaluate((0, 1))


def test_empty_parity_is_constant():
    f = Parity(FreqIndex.zero(5))
    assert set(f.truth_table().tolist()) == {1}


def test_singleton_rectangle():
    alpha = Alphabet(3, 3)
    x = (2, 0, 1)
    f = UBOX(alpha, (Rectangle(x, x),))
    table = f.truth_table()
    assert f.evaluate(x) == -1
    assert np.count_nonzero(table == -1) == 1


def test_top_direct_formula():
    f = TOP(4, (2, -1), (FreqIndex.unit(4, 0), FreqIndex((1, 1, 0, 0))))
    assert f.evaluate((0, 0, 0, 0)) == 1
    assert f.evaluate((1, 0, 0, 0)) == -1  # -2 - 1


def test_top_rejects_reachable_zero():
    with pytest.raises(ContractViolation):
        TOP(3, (1, 1), (FreqIndex((1, 0, 0)), FreqIndex((0, 1, 0))))


def test_dnf_matches_ubox_translation():
    f = random_instance("dnf", 3, n=8, terms=4, width=3)
    assert np.array_equal(f.truth_table(), f.to_ubox().truth_table())


def test_random_instances():
    d = random_instance("dnf", 7, n=10, terms=3, width=3)
    assert len(d.terms) == 3 and all(len(t) == 3 for t in d.terms)
    t = random_instance("top", 1, n=12, M=3)
    assert len(set(t.vectors)) == 3 and t.weight_sum % 2 == 1
    assert np.all(t.truth_table() != 0)
    u = random_instance("ubox", 9, b=3, n=6, rectangles=2)
    assert len(u.rectangles) == 2
    assert random_instance("dnf", 7, n=10, terms=3, width=3) == d
    with pytest.raises(ParameterError):
        random_instance("dnf", 0, n=2, terms=50, width=2)
    with pytest.raises(ParameterError):
        random_instance("nope", 0, n=2)


def test_description_sizes():
    assert description_size(Parity(FreqIndex((1, 0, 1, 1)))) == 4
    d = DNF(6, (((0, 1), (2, 0)), ((1, 1), (3, 1), (5, 0))))
    assert description_size(d) == 5
    t = TOP(5, (3, -12, 1), (FreqIndex((1, 0, 0, 0, 0)), FreqIndex((0, 1, 0, 0, 0)), FreqIndex((1, 1, 1, 0, 0))))
    assert description_size(t) == 3 * 5 + 1 + 2 + 1


def test_evaluate_helper():
    f = constant(Alphabet(2, 3), -1)
    assert evaluate(f, (1, 1, 0)) == -1


@pytest.mark.parametrize("f", [
    Parity(FreqIndex((1, 0, 1))),
    DNF(4, (((0, 1), (3, 0)),)),
    TOP(3, (2, 1, -2), (FreqIndex((1, 0, 0)), FreqIndex((0, 1, 1)), FreqIndex((1, 1, 1)))),
    UBOX(Alphabet(3, 2), (Rectangle((0, 1), (1, 2)),)),
    TruthTable(Alphabet(3, 2), np.array([1, -1, 1, 1, -1, -1, 1, 1, 1], dtype=np.int8)),
])
def test_function_file_round_trip(f, tmp_path):
    path = tmp_path / "f.json"
    write_function(path, f, seed=5)
    g = read_function(path)
    assert np.array_equal(f.truth_table(), g.truth_table())
    assert json.loads(path.read_text())["seed"] == 5
    assert function_from_dict(function_to_dict(f)).kind == f.kind


def test_freqindex_strings():
    a = FreqIndex.from_string("0a21")
    assert a.digits == (0, 10, 2, 1)
    assert a.degree == 3 and a.support == (1, 2, 3)
    assert a.to_string() == "0a21"
    with pytest.raises(ContractViolation):
        FreqIndex((0, 3)).check(Alphabet(3, 2))
