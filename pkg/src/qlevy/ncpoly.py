"""Free *-algebra over a finite alphabet with terminating rewriting to normal form.

Words are tuples of generator indices; polynomials are sparse mappings
word -> complex coefficient.  Rewrite rules orient *-ideal relations so that
every right-hand-side word is strictly smaller in degree-lexicographic order,
which guarantees termination.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import (
    LengthMismatch,
    ParseError,
    RewriteBudgetExceeded,
    UnknownGenerator,
)

DROP_TOL = 1e-14
REWRITE_BUDGET = 10 ** 6

Word = tuple  # tuple of generator indices; () is the unit


@dataclass(frozen=True)
class GeneratorSymbol:
    name: str
    adjoint: int  # index of the adjoint generator (self for self-adjoint)


class NcPoly:
    """Sparse noncommutative polynomial: finite mapping Word -> complex."""

    __slots__ = ("terms",)

    def __init__(self, terms=None, prune=True):
        t = dict(terms) if terms else {}
        if prune:
            t = {w: c for w, c in t.items() if abs(c) > DROP_TOL}
        self.terms = t

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def one(cls):
        return cls({(): 1.0})

    @classmethod
    def word(cls, w, coeff=1.0):
        return cls({tuple(w): coeff})

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, NcPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(self.key())

    def key(self):
        """Canonical hashable identity (exact coefficients, sorted words)."""
        return tuple(sorted((w, complex(c)) for w, c in self.terms.items()))

    def coeff(self, w):
        return self.terms.get(tuple(w), 0.0)

    def degree(self):
        return max((len(w) for w in self.terms), default=0)

    def scale(self, z):
        return NcPoly({w: z * c for w, c in self.terms.items()})

    def add(self, other):
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0.0) + c
        return NcPoly(out)

    def sub(self, other):
        return self.add(other.scale(-1.0))

    def conjugate(self):
        """Coefficient-wise complex conjugation (conjugate vector space)."""
        return NcPoly({w: complex(c).conjugate() for w, c in self.terms.items()})

    def norm1(self):
        return sum(abs(c) for c in self.terms.values())

    def __repr__(self):
        return f"NcPoly({self.terms!r})"

    def pretty(self, alg):
        if not self.terms:
            return "0"
        bits = []
        for w in sorted(self.terms, key=lambda w: (len(w), w)):
            c = complex(self.terms[w])
            mono = " ".join(alg.alphabet[i].name for i in w) or "1"
            bits.append(f"({c.real:+g}{c.imag:+g}i)*{mono}")
        return " + ".join(bits)


@dataclass(frozen=True)
class RewriteRule:
    lhs: Word
    rhs: NcPoly


class AlgebraSpec:
    """Alphabet, involution pairing, and an oriented terminating rule set."""

    def __init__(self, alphabet, rules, letter_order=None, name=""):
        self.alphabet = list(alphabet)
        self.rules = list(rules)
        self.name = name
        n = len(self.alphabet)
        self.letter_order = list(letter_order) if letter_order is not None else list(range(n))
        if sorted(self.letter_order) != list(range(n)):
            raise ValueError("letter_order must be a permutation of generator indices")
        self._rank = {g: r for r, g in enumerate(self.letter_order)}
        names = [g.name for g in self.alphabet]
        if len(set(names)) != len(names):
            raise ValueError("generator names must be unique")
        self._by_name = {g.name: i for i, g in enumerate(self.alphabet)}
        for i, g in enumerate(self.alphabet):
            if self.alphabet[g.adjoint].adjoint != i:
                raise ValueError("adjoint pairing is not an involution")
        for rule in self.rules:
            for w in rule.rhs.terms:
                if not self._deglex_less(w, rule.lhs):
                    raise ValueError(
                        f"rule rhs word {w} not below lhs {rule.lhs} in deg-lex order")

    def _deglex_key(self, w):
        return (len(w), tuple(self._rank[g] for g in w))

    def _deglex_less(self, a, b):
        return self._deglex_key(a) < self._deglex_key(b)

    def index(self, name):
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownGenerator(f"unknown generator {name!r}") from None

    def adjoint_of(self, idx):
        return self.alphabet[idx].adjoint

    def ngen(self):
        return len(self.alphabet)


def _find_redex(w, rules):
    # leftmost position wins; at equal position, declaration order wins
    for pos in range(len(w)):
        for rule in rules:
            k = len(rule.lhs)
            if w[pos:pos + k] == rule.lhs:
                return pos, rule
    return None


def normal_form(p, alg):
    """Rewrite p to its unique fixed point under leftmost-first rewriting."""
    budget = REWRITE_BUDGET
    out = {}
    pending = list(p.terms.items())
    while pending:
        w, c = pending.pop()
        if abs(c) <= DROP_TOL:
            continue
        hit = _find_redex(w, alg.rules)
        if hit is None:
            out[w] = out.get(w, 0.0) + c
            continue
        budget -= 1
        if budget < 0:
            raise RewriteBudgetExceeded(
                f"more than {REWRITE_BUDGET} rule applications in algebra {alg.name!r}")
        pos, rule = hit
        k = len(rule.lhs)
        for rw, rc in rule.rhs.terms.items():
            pending.append((w[:pos] + rw + w[pos + k:], c * rc))
    return NcPoly(out)


def multiply(p, q, alg):
    """Normal form of the concatenation-bilinear product."""
    out = {}
    for wp, cp in p.terms.items():
        for wq, cq in q.terms.items():
            w = wp + wq
            out[w] = out.get(w, 0.0) + cp * cq
    return normal_form(NcPoly(out), alg)


def involute(p, alg):
    """(c w)* = conj(c) * reversed, letter-starred word, re-normalized."""
    out = {}
    for w, c in p.terms.items():
        sw = tuple(alg.adjoint_of(g) for g in reversed(w))
        out[sw] = out.get(sw, 0.0) + complex(c).conjugate()
    return normal_form(NcPoly(out), alg)


def linear_combine(coeffs, polys):
    if len(coeffs) != len(polys):
        raise LengthMismatch(f"{len(coeffs)} coefficients for {len(polys)} polynomials")
    out = {}
    for z, p in zip(coeffs, polys):
        for w, c in p.terms.items():
            out[w] = out.get(w, 0.0) + z * c
    return NcPoly(out)


def random_poly(alg, rng, max_degree, n_terms=4, normal=True):
    """Random element with complex coefficients, used by the samplers."""
    terms = {}
    for _ in range(n_terms):
        k = int(rng.integers(0, max_degree + 1))
        w = tuple(int(rng.integers(0, alg.ngen())) for _ in range(k))
        terms[w] = terms.get(w, 0.0) + complex(rng.normal(), rng.normal())
    p = NcPoly(terms)
    return normal_form(p, alg) if normal else p


# ---------------------------------------------------------------------------
# expression parser
#
# poly   := signed-term (('+'|'-') term)*
# term   := scalar factor* | factor+
# factor := ident ('^*')? ('^' uint)?
# scalar := real | '(' real ('+'|'-') real 'i' ')'
# ---------------------------------------------------------------------------

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_REAL = re.compile(r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?")


class _Parser:
    def __init__(self, text, alg):
        self.text = text
        self.alg = alg
        self.pos = 0

    def _ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self):
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _real(self):
        m = _REAL.match(self.text, self.pos)
        if not m:
            raise ParseError("expected number", self.pos)
        self.pos = m.end()
        return float(m.group())

    def _signed_real(self):
        sign = 1.0
        if self._peek() in "+-":
            sign = -1.0 if self._peek() == "-" else 1.0
            self.pos += 1
        return sign * self._real()

    def _scalar(self):
        if self._peek() == "(":
            self.pos += 1
            self._ws()
            re_part = self._signed_real()
            self._ws()
            if self._peek() not in "+-":
                raise ParseError("expected '+' or '-' in complex literal", self.pos)
            sign = -1.0 if self._peek() == "-" else 1.0
            self.pos += 1
            self._ws()
            im_part = sign * self._real()
            if self._peek() != "i":
                raise ParseError("expected 'i' in complex literal", self.pos)
            self.pos += 1
            self._ws()
            if self._peek() != ")":
                raise ParseError("expected ')'", self.pos)
            self.pos += 1
            return complex(re_part, im_part)
        return complex(self._real())

    def _factor(self):
        m = _IDENT.match(self.text, self.pos)
        if not m:
            raise ParseError("expected generator name", self.pos)
        idx = self.alg.index(m.group())
        self.pos = m.end()
        if self._peek() == "^":
            caret = self.pos
            self.pos += 1
            if self._peek() == "*":
                self.pos += 1
                idx = self.alg.adjoint_of(idx)
                if self._peek() == "^":
                    self.pos += 1
                    m = _REAL.match(self.text, self.pos)
                    if not m or "." in m.group() or "e" in m.group().lower():
                        raise ParseError("expected integer exponent", self.pos)
                    self.pos = m.end()
                    return (idx,) * int(m.group())
                return (idx,)
            m = _REAL.match(self.text, self.pos)
            if not m or "." in m.group() or "e" in m.group().lower():
                raise ParseError("expected '*' or integer exponent after '^'", caret)
            self.pos = m.end()
            return (idx,) * int(m.group())
        return (idx,)

    def _term(self):
        coeff = complex(1.0)
        word = ()
        self._ws()
        if self._peek() == "(" or self._peek().isdigit():
            coeff = self._scalar()
            self._ws()
        else:
            word = self._factor()
            self._ws()
        while self.pos < len(self.text) and self._peek() not in "+-":
            if self._peek() == "^":
                raise ParseError("expected generator name", self.pos)
            word = word + self._factor()
            self._ws()
        return coeff, word

    def parse(self):
        self._ws()
        if self.pos >= len(self.text):
            raise ParseError("empty expression", self.pos)
        terms = {}
        sign = 1.0
        if self._peek() in "+-":
            sign = -1.0 if self._peek() == "-" else 1.0
            self.pos += 1
        while True:
            coeff, word = self._term()
            terms[word] = terms.get(word, 0.0) + sign * coeff
            self._ws()
            if self.pos >= len(self.text):
                break
            if self._peek() not in "+-":
                raise ParseError("expected '+' or '-'", self.pos)
            sign = -1.0 if self._peek() == "-" else 1.0
            self.pos += 1
        return NcPoly(terms)


def parse_poly(text, alg):
    """Parse an expression over alg's alphabet and return its normal form."""
    return normal_form(_Parser(text, alg).parse(), alg)
