import numpy as np
import pytest

from qlevy.constructions import make_azema, make_unitary_bialgebra
from qlevy.errors import LengthMismatch, ParseError
from qlevy.ncpoly import (
    NcPoly,
    involute,
    linear_combine,
    multiply,
    normal_form,
    parse_poly,
    random_poly,
)

X, XS, Y = 0, 1, 2


@pytest.fixture(scope="module")
def azema2():
    return make_azema(2.0)


def test_normal_form_yx(azema2):
    alg = azema2[0].algebra
    p = normal_form(NcPoly({(Y, X): 1.0}), alg)
    assert p.terms == {(X, Y): 0.5}


def test_normal_form_unit(azema2):
    alg = azema2[0].algebra
    p = normal_form(NcPoly.one(), alg)
    assert p.terms == {(): 1.0}


def test_normal_form_xyx(azema2):
    alg = azema2[0].algebra
    p = normal_form(NcPoly({(X, Y, X): 1.0}), alg)
    assert p.terms == {(X, X, Y): 0.5}


def test_multiply_unit_law(azema2):
    alg = azema2[0].algebra
    rng = np.random.default_rng(1)
    p = random_poly(alg, rng, 4)
    assert multiply(NcPoly.one(), p, alg) == p


def test_multiply_q_commutation(azema2):
    alg = azema2[0].algebra
    r = multiply(NcPoly.word((Y,)), NcPoly.word((X,)), alg)
    assert r.terms == {(X, Y): 0.5}


def test_unitary_xxstar_is_one():
    B = make_unitary_bialgebra(1)
    alg = B.algebra
    r = multiply(NcPoly.word((0,)), NcPoly.word((1,)), alg)
    assert r.terms == {(): 1.0}


def test_involute_example(azema2):
    alg = azema2[0].algebra
    p = NcPoly({(X, Y): 2.0 + 1.0j})
    got = involute(p, alg)
    # (xy)* = y x* -> q x* y with q = 2
    assert got.terms.keys() == {(XS, Y)}
    assert got.terms[(XS, Y)] == pytest.approx(2.0 * (2.0 - 1.0j))


def test_involute_is_involution(azema2):
    alg = azema2[0].algebra
    rng = np.random.default_rng(7)
    for _ in range(100):
        p = random_poly(alg, rng, 5)
        back = involute(involute(p, alg), alg)
        assert not back.sub(p).terms


def test_involute_antihomomorphism(azema2):
    alg = azema2[0].algebra
    rng = np.random.default_rng(8)
    for _ in range(30):
        p = random_poly(alg, rng, 3)
        q = random_poly(alg, rng, 3)
        a = involute(multiply(p, q, alg), alg)
        b = multiply(involute(q, alg), involute(p, alg), alg)
        assert a.sub(b).norm1() < 1e-12


def test_normal_form_idempotent(azema2):
    alg = azema2[0].algebra
    rng = np.random.default_rng(9)
    for _ in range(50):
        p = random_poly(alg, rng, 6)
        assert normal_form(p, alg) == p


def test_multiply_associative(azema2):
    alg = azema2[0].algebra
    rng = np.random.default_rng(10)
    for _ in range(30):
        p, q, r = (random_poly(alg, rng, 3) for _ in range(3))
        a = multiply(multiply(p, q, alg), r, alg)
        b = multiply(p, multiply(q, r, alg), alg)
        assert a.sub(b).norm1() < 1e-12


def test_linear_combine():
    p = NcPoly({(X,): 1.0})
    assert not linear_combine([1.0, -1.0], [p, p]).terms
    assert linear_combine([2.0, 3.0], [p, p]).terms == {(X,): 5.0}
    q = NcPoly({(Y,): 1.0})
    assert linear_combine([1.0, 1e-16], [p, q]).terms == {(X,): 1.0}
    with pytest.raises(LengthMismatch):
        linear_combine([1.0], [p, q])


class TestParser:
    def test_relation_collapse(self):
        B = make_unitary_bialgebra(1)
        p = parse_poly("x11^* x11 + 1", B.algebra)
        assert p.terms == {(): 2.0}

    def test_complex_literal(self, azema2):
        alg = azema2[0].algebra
        p = parse_poly("(2+1i) x y^2", alg)
        assert p.terms == {(X, Y, Y): 2.0 + 1.0j}

    def test_malformed(self, azema2):
        alg = azema2[0].algebra
        with pytest.raises(ParseError) as ei:
            parse_poly("x ^", alg)
        assert ei.value.position == 2

    def test_subtraction_and_star(self, azema2):
        alg = azema2[0].algebra
        p = parse_poly("x y - 2 y x^*", alg)
        # y x* -> q x* y = 2 x* y
        assert p.terms == {(X, Y): 1.0, (XS, Y): -4.0}
