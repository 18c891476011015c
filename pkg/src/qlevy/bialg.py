"""Coalgebra layer: coproducts, counits, Sweedler expansions, convolution.

A BialgebraSpec stores the coproduct and counit on generators only; both are
extended to arbitrary polynomials as *-algebra homomorphisms.  Iterated
coproducts use the recursion D_n = (D_{n-1} (x) id) o D and are memoized per
normal-form word.
"""

from __future__ import annotations

from .errors import TermBudgetExceeded
from .ncpoly import DROP_TOL, NcPoly, involute, multiply, normal_form

TERM_BUDGET = 10 ** 6


class TensorPoly:
    """Element of B (x) B: finite mapping (word, word) -> complex."""

    __slots__ = ("terms",)

    def __init__(self, terms=None, prune=True):
        t = dict(terms) if terms else {}
        if prune:
            t = {k: c for k, c in t.items() if abs(c) > DROP_TOL}
        self.terms = t

    @classmethod
    def unit(cls):
        return cls({((), ()): 1.0})

    @classmethod
    def simple(cls, left, right, coeff=1.0):
        """coeff * left (x) right for NcPoly legs."""
        out = {}
        for a, ca in left.terms.items():
            for b, cb in right.terms.items():
                out[(a, b)] = out.get((a, b), 0.0) + coeff * ca * cb
        return cls(out)

    def add(self, other):
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0.0) + c
        return TensorPoly(out)

    def scale(self, z):
        return TensorPoly({k: z * c for k, c in self.terms.items()})

    def sub(self, other):
        return self.add(other.scale(-1.0))

    def mul(self, other, alg):
        """(a (x) b)(c (x) d) = ac (x) bd, each leg re-normalized."""
        out = {}
        for (a, b), c1 in self.terms.items():
            for (u, v), c2 in other.terms.items():
                left = normal_form(NcPoly({a + u: 1.0}), alg)
                right = normal_form(NcPoly({b + v: 1.0}), alg)
                z = c1 * c2
                for wl, cl in left.terms.items():
                    for wr, cr in right.terms.items():
                        k = (wl, wr)
                        out[k] = out.get(k, 0.0) + z * cl * cr
        return TensorPoly(out)

    def star(self, alg):
        """(a (x) b)* = a* (x) b* extended antilinearly."""
        out = {}
        for (a, b), c in self.terms.items():
            left = involute(NcPoly({a: 1.0}), alg)
            right = involute(NcPoly({b: 1.0}), alg)
            z = complex(c).conjugate()
            for wl, cl in left.terms.items():
                for wr, cr in right.terms.items():
                    k = (wl, wr)
                    out[k] = out.get(k, 0.0) + z * cl * cr
        return TensorPoly(out)

    def max_abs(self):
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def __eq__(self, other):
        return isinstance(other, TensorPoly) and not self.sub(other).terms

    def __repr__(self):
        return f"TensorPoly({self.terms!r})"


class SweedlerExpansion:
    """Arity-n Sweedler expansion: finite mapping n-tuple of words -> complex."""

    __slots__ = ("arity", "terms")

    def __init__(self, arity, terms):
        self.arity = arity
        self.terms = {k: c for k, c in terms.items() if abs(c) > DROP_TOL}

    def term_count(self):
        return len(self.terms)


class BialgebraSpec:
    """Generators, coproduct/counit on generators, homomorphic extension."""

    def __init__(self, algebra, delta_on_gen, counit_on_gen, name=""):
        self.algebra = algebra
        self.delta_on_gen = dict(delta_on_gen)
        self.counit_on_gen = {g: complex(v) for g, v in counit_on_gen.items()}
        self.name = name
        missing = set(range(algebra.ngen())) - set(self.delta_on_gen)
        if missing:
            raise ValueError(f"no coproduct for generators {sorted(missing)}")
        self._delta_word = {(): TensorPoly.unit()}
        self._sweedler = {}

    # -- coalgebra-view protocol (shared with the group-like carrier) -------

    def unit_key(self):
        return ()

    def key_delta(self, w):
        return self.coproduct_word(w).terms

    def key_counit(self, w):
        z = complex(1.0)
        for g in w:
            z *= self.counit_on_gen[g]
        return z

    def key_star(self, w):
        """Involution of the basis element behind a key, as key -> coeff."""
        return involute(NcPoly({w: 1.0}), self.algebra).terms

    # ----------------------------------------------------------------------

    def coproduct_word(self, w):
        got = self._delta_word.get(w)
        if got is None:
            got = self.coproduct_word(w[:-1]).mul(self.delta_on_gen[w[-1]], self.algebra)
            self._delta_word[w] = got
        return got

    def coproduct(self, p):
        out = TensorPoly()
        for w, c in p.terms.items():
            out = out.add(self.coproduct_word(w).scale(c))
            if len(out.terms) > TERM_BUDGET:
                raise TermBudgetExceeded("coproduct expansion too large")
        return out

    def counit(self, p):
        return sum((c * self.key_counit(w) for w, c in p.terms.items()), complex(0.0))

    def _sweedler_word(self, w, n):
        got = self._sweedler.get((w, n))
        if got is not None:
            return got
        if n == 1:
            got = {(w,): 1.0}
        else:
            got = {}
            for (a, b), z in self.coproduct_word(w).terms.items():
                for legs, z2 in self._sweedler_word(a, n - 1).items():
                    k = legs + (b,)
                    got[k] = got.get(k, 0.0) + z * z2
            got = {k: c for k, c in got.items() if abs(c) > DROP_TOL}
        if len(got) > TERM_BUDGET:
            raise TermBudgetExceeded(f"Sweedler expansion of arity {n} too large")
        self._sweedler[(w, n)] = got
        return got

    def iterated_coproduct(self, p, n):
        if n < 1:
            raise ValueError("arity must be >= 1")
        out = {}
        for w, c in p.terms.items():
            for legs, z in self._sweedler_word(w, n).items():
                out[legs] = out.get(legs, 0.0) + c * z
            if len(out) > TERM_BUDGET:
                raise TermBudgetExceeded("Sweedler expansion too large")
        return SweedlerExpansion(n, out)


def iterated_coproduct(p, n, B):
    return B.iterated_coproduct(p, n)


def coproduct(p, B):
    return B.coproduct(p)


def counit(p, B):
    return B.counit(p)


def complete_by_involution(algebra, delta_on_gen, counit_on_gen):
    """Fill Delta/counit for starred generators from the *-homomorphism law."""
    dg = dict(delta_on_gen)
    cg = dict(counit_on_gen)
    for i, g in enumerate(algebra.alphabet):
        j = g.adjoint
        if j not in dg and i in dg:
            dg[j] = dg[i].star(algebra)
        if j not in cg and i in cg:
            cg[j] = complex(cg[i]).conjugate()
    return dg, cg


class LinearFunctional:
    """Linear functional given by its values on normal-form basis keys."""

    def __init__(self, name, on_key, hermitian=False):
        self.name = name
        self._fn = on_key
        self.hermitian = hermitian
        self._memo = {}

    def on_word(self, key):
        got = self._memo.get(key)
        if got is None:
            got = complex(self._fn(key))
            self._memo[key] = got
        return got

    def __call__(self, p):
        terms = p.terms if isinstance(p, NcPoly) else p
        return sum((c * self.on_word(w) for w, c in terms.items()), complex(0.0))


def counit_functional(B):
    return LinearFunctional(f"counit[{B.name}]", B.key_counit, hermitian=True)


def convolve_eval(fs, p, B):
    """(f_1 * ... * f_n)(p) = sum over Delta_n legs of the value products."""
    if not fs:
        raise ValueError("need at least one functional")
    if len(fs) == 1:
        return fs[0](p)
    exp = B.iterated_coproduct(p, len(fs))
    total = complex(0.0)
    for legs, c in exp.terms.items():
        z = complex(c)
        for f, leg in zip(fs, legs):
            z *= f.on_word(leg)
            if z == 0.0:
                break
        total += z
    return total


def random_polys(B, rng, degree, count, n_terms=4):
    from .ncpoly import random_poly
    return [random_poly(B.algebra, rng, degree, n_terms=n_terms) for _ in range(count)]


def check_bialgebra_axioms(B, sample_degree=4, n_samples=50, rng=None):
    """Max residuals of the coalgebra and compatibility axioms on samples."""
    import numpy as np

    rng = rng if rng is not None else np.random.default_rng(20080131)
    alg = B.algebra
    samples = random_polys(B, rng, sample_degree, n_samples)
    report = {
        "coassociativity": 0.0,
        "counit_law": 0.0,
        "delta_multiplicative": 0.0,
        "counit_multiplicative": 0.0,
        "rule_compatibility": 0.0,
        "involution_compatibility": 0.0,
    }

    def diff3(a, b):
        out = dict(a)
        for k, c in b.items():
            out[k] = out.get(k, 0.0) - c
        d = max((abs(c) for c in out.values()), default=0.0)
        scale = max([1.0] + [abs(c) for c in a.values()] + [abs(c) for c in b.values()])
        return d / scale

    def rel(diff, *sides):
        scale = 1.0
        for s in sides:
            scale = max(scale, s)
        return diff / scale

    for p in samples:
        # coassociativity: (Delta (x) id) Delta  vs  (id (x) Delta) Delta
        left = B.iterated_coproduct(p, 3).terms
        right = {}
        for (a, b), z in B.coproduct(p).terms.items():
            for (u, v), z2 in B.coproduct_word(b).terms.items():
                k = (a, u, v)
                right[k] = right.get(k, 0.0) + z * z2
        report["coassociativity"] = max(report["coassociativity"], diff3(left, right))

        # counit law, both sides
        lhs = NcPoly()
        rhs = NcPoly()
        for (a, b), z in B.coproduct(p).terms.items():
            lhs = lhs.add(NcPoly({b: z * B.key_counit(a)}))
            rhs = rhs.add(NcPoly({a: z * B.key_counit(b)}))
        r = rel(max(lhs.sub(p).norm1(), rhs.sub(p).norm1()), p.norm1())
        report["counit_law"] = max(report["counit_law"], r)

        # involution compatibility: Delta(p*) = Delta(p)* legwise
        d_star = B.coproduct(involute(p, alg))
        star_d = B.coproduct(p).star(alg)
        r = rel(d_star.sub(star_d).max_abs(), d_star.max_abs(), star_d.max_abs())
        report["involution_compatibility"] = max(report["involution_compatibility"], r)

    for p, q in zip(samples[::2], samples[1::2]):
        pq = multiply(p, q, alg)
        dpq = B.coproduct(pq)
        dpdq = B.coproduct(p).mul(B.coproduct(q), alg)
        r = rel(dpq.sub(dpdq).max_abs(), dpq.max_abs(), dpdq.max_abs())
        report["delta_multiplicative"] = max(report["delta_multiplicative"], r)
        r = rel(abs(B.counit(pq) - B.counit(p) * B.counit(q)),
                abs(B.counit(pq)), abs(B.counit(p) * B.counit(q)))
        report["counit_multiplicative"] = max(report["counit_multiplicative"], r)

    for rule in alg.rules:
        lhs_p = NcPoly({rule.lhs: 1.0})
        dl = B.coproduct(lhs_p)
        dr = B.coproduct(rule.rhs)
        r = rel(dl.sub(dr).max_abs(), dl.max_abs(), dr.max_abs())
        r = max(r, abs(B.counit(lhs_p) - B.counit(rule.rhs)))
        report["rule_compatibility"] = max(report["rule_compatibility"], r)

    report["max_residual"] = max(v for v in report.values())
    return report


# ---------------------------------------------------------------------------
# JSON serialization of a BialgebraSpec
# ---------------------------------------------------------------------------

def _c2j(z):
    z = complex(z)
    return [z.real, z.imag]


def _j2c(v):
    return complex(v[0], v[1])


def bialgebra_to_json(B):
    alg = B.algebra
    names = [g.name for g in alg.alphabet]

    def word2names(w):
        return [names[i] for i in w]

    def poly2j(p):
        return [{"word": word2names(w), "coeff": _c2j(c)} for w, c in sorted(p.terms.items())]

    return {
        "name": B.name,
        "alphabet": [{"name": g.name, "adjoint": names[g.adjoint]} for g in alg.alphabet],
        "letter_order": [names[i] for i in alg.letter_order],
        "rules": [{"lhs": word2names(r.lhs), "rhs": poly2j(r.rhs)} for r in alg.rules],
        "delta_on_gen": {
            names[g]: [{"left": word2names(a), "right": word2names(b), "coeff": _c2j(c)}
                       for (a, b), c in sorted(tp.terms.items())]
            for g, tp in B.delta_on_gen.items()
        },
        "counit_on_gen": {names[g]: _c2j(v) for g, v in B.counit_on_gen.items()},
    }


def bialgebra_from_json(doc):
    from .ncpoly import AlgebraSpec, GeneratorSymbol, RewriteRule

    names = [g["name"] for g in doc["alphabet"]]
    idx = {n: i for i, n in enumerate(names)}
    alphabet = [GeneratorSymbol(g["name"], idx[g["adjoint"]]) for g in doc["alphabet"]]

    def names2word(ws):
        return tuple(idx[n] for n in ws)

    def j2poly(items):
        return NcPoly({names2word(t["word"]): _j2c(t["coeff"]) for t in items})

    rules = [RewriteRule(names2word(r["lhs"]), j2poly(r["rhs"])) for r in doc["rules"]]
    order = [idx[n] for n in doc.get("letter_order", names)]
    alg = AlgebraSpec(alphabet, rules, letter_order=order, name=doc.get("name", ""))
    delta = {
        idx[g]: TensorPoly({(names2word(t["left"]), names2word(t["right"])): _j2c(t["coeff"])
                            for t in items})
        for g, items in doc["delta_on_gen"].items()
    }
    counit = {idx[g]: _j2c(v) for g, v in doc["counit_on_gen"].items()}
    return BialgebraSpec(alg, delta, counit, name=doc.get("name", ""))
