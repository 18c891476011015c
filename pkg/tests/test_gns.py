import numpy as np
import pytest

from qlevy.bialg import LinearFunctional
from qlevy.constructions import make_azema, make_unitary_bialgebra
from qlevy.errors import InvalidParameter, PositivityViolation
from qlevy.gns import (
    UnitaryTripleParams,
    check_conditional_positivity,
    gns_construct,
    levy_triple_residuals,
    unitary_triple,
)
from qlevy.ncpoly import NcPoly, involute, multiply

X, XS, Y = 0, 1, 2


@pytest.fixture(scope="module")
def azema2():
    return make_azema(2.0)


@pytest.fixture(scope="module")
def azema_triple(azema2):
    B, _, psi = azema2
    return gns_construct(psi, B, degree_cap=3)


def test_positivity_azema(azema2):
    B, _, psi = azema2
    rep = check_conditional_positivity(psi, B, degree_cap=3)
    assert rep["min_eigenvalue"] >= -1e-12
    assert rep["hermiticity_residual"] <= 1e-12
    assert rep["passed"]


def test_positivity_zero(azema2):
    B, _, _ = azema2
    zero = LinearFunctional("zero", lambda w: 0.0, hermitian=True)
    rep = check_conditional_positivity(zero, B, degree_cap=2)
    assert rep["min_eigenvalue"] == pytest.approx(0.0, abs=1e-14)
    assert rep["max_eigenvalue"] == pytest.approx(0.0, abs=1e-14)


def test_positivity_violation_detected(azema2):
    B, _, _ = azema2

    def bad_word(w):
        k = len(w)
        while k > 0 and w[k - 1] == Y:
            k -= 1
        return -1.0 if w[:k] == (X, XS) else 0.0

    bad = LinearFunctional("bad", bad_word, hermitian=True)
    rep = check_conditional_positivity(bad, B, degree_cap=2)
    assert rep["min_eigenvalue"] <= -1.0
    assert not rep["passed"]
    with pytest.raises(PositivityViolation):
        gns_construct(bad, B, degree_cap=2)


def test_gns_azema_values(azema_triple):
    t = azema_triple
    assert t.k_dim == 1
    assert abs(t.eta(NcPoly.word((XS,)))[0] - 1.0) <= 1e-12
    assert abs(t.eta(NcPoly.word((X,)))[0]) <= 1e-12
    assert abs(t.eta(NcPoly.word((Y,)))[0]) <= 1e-12
    assert abs(t.rho(NcPoly.word((X,)))[0, 0]) <= 1e-12
    assert abs(t.rho(NcPoly.word((Y,)))[0, 0] - 2.0) <= 1e-12


def test_gns_zero_generator(azema2):
    B, _, _ = azema2
    zero = LinearFunctional("zero", lambda w: 0.0, hermitian=True)
    t = gns_construct(zero, B, degree_cap=2)
    assert t.k_dim == 0
    assert t.eta(NcPoly.word((X,))).shape == (0,)


def test_gram_reproduction(azema2, azema_triple):
    B, _, psi = azema2
    t = azema_triple
    from qlevy.constructions import b0_basis
    basis = b0_basis(B, 3)
    for _wv, v in basis:
        for _wu, u in basis:
            lhs = np.vdot(t.eta(v), t.eta(u))
            rhs = psi(multiply(involute(v, B.algebra), u, B.algebra))
            assert abs(lhs - rhs) < 1e-10


def test_azema_residuals(azema2, azema_triple):
    B, _, _ = azema2
    rep = levy_triple_residuals(azema_triple, B, n_samples=40, sample_degree=3)
    assert rep["max_residual"] <= 1e-10


def test_corrupted_rho_detected(azema2, azema_triple):
    B, _, psi = azema2
    t = azema_triple
    from qlevy.gns import LevyTriple
    rho1 = {g: m.copy() for g, m in t.rho1.items()}
    rho1[Y] = rho1[Y] + 1.0
    bad = LevyTriple(B, t.k_dim, t.eta1, rho1, psi1=t.psi1, psi=psi)
    rep = levy_triple_residuals(bad, B, n_samples=40, sample_degree=3)
    assert rep["cocycle"] > 0.1


def test_coboundary_positivity(azema2, azema_triple):
    B, _, psi = azema2
    t = azema_triple
    # group-like-shifted b = w + (1 - delta(w)) 1, check psi(b*b)-psi(b*)-psi(b)
    for w in [(Y,), (X, XS), (XS, Y)]:
        b = NcPoly({w: 1.0, (): 1.0 - B.counit(NcPoly.word(w))})
        bs = involute(b, B.algebra)
        val = psi(multiply(bs, b, B.algebra)) - psi(bs) - psi(b)
        d = b.sub(NcPoly.one().scale(B.counit(b)))
        assert abs(val - np.vdot(t.eta(d), t.eta(d))) < 1e-10
        assert val.real >= -1e-10


def test_unitary_triple_d1():
    params = UnitaryTripleParams(1, np.array([[1.0]]),
                                 np.array([[[0.3]]]), np.array([[0.5]]))
    t = unitary_triple(params)
    # psi(x) = ih - |l|^2 / 2
    assert t.psi(NcPoly.word((0,))) == pytest.approx(0.5j - 0.045)
    assert t.psi(NcPoly.one()) == 0.0
    rep = levy_triple_residuals(t, n_samples=50, sample_degree=3)
    assert rep["max_residual"] <= 1e-10


def test_unitary_triple_trivial():
    params = UnitaryTripleParams(2, np.eye(2), np.zeros((2, 2, 1)), np.zeros((2, 2)))
    t = unitary_triple(params)
    for g in range(8):
        assert t.psi(NcPoly.word((g,))) == 0.0


def test_unitary_triple_d2_random():
    rng = np.random.default_rng(31)
    m = 2
    a = rng.normal(size=(2 * m, 2 * m)) + 1j * rng.normal(size=(2 * m, 2 * m))
    w, _r = np.linalg.qr(a)
    L = rng.normal(size=(2, 2, m)) + 1j * rng.normal(size=(2, 2, m))
    h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    h = (h + h.conj().T) / 2.0
    t = unitary_triple(UnitaryTripleParams(2, w, 0.4 * L, h))
    rep = levy_triple_residuals(t, n_samples=60, sample_degree=3)
    assert rep["max_residual"] <= 1e-10


def test_unitary_params_validation():
    with pytest.raises(InvalidParameter):
        UnitaryTripleParams(1, np.array([[2.0]]), np.zeros((1, 1, 1)),
                            np.zeros((1, 1)))
    with pytest.raises(InvalidParameter):
        UnitaryTripleParams(1, np.array([[1.0]]), np.zeros((1, 1, 1)),
                            np.array([[1j]]))


def test_triple_json(azema_triple):
    doc = azema_triple.to_json()
    assert doc["k_dim"] == 1
    assert doc["eta_on_gen"][str(XS)][0] == pytest.approx([1.0, 0.0], abs=1e-12)
