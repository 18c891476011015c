"""Exact vacuum Gram data of infinitesimal convolution products.

The Levy process j is never materialized as operators here.  A vector of
the form j_{t0,t1}(b_1) ... j_{tn-1,tn}(b_n) Omega is identified with the
elementary tensor of its per-interval factors, and every inner product of
two such sums reduces -- after passing to the common refinement of the two
partitions -- to products of one-interval vacuum values

    <j_{u,v}(a) Omega, j_{u,v}(b) Omega> = e_*^{(v-u) psi}(a* b),

each computed by conv_exp.  This makes the engine exact up to
matrix-exponential precision and immune to Fock truncation error.
Convergence sweeps realize the transformation theorem numerically: the
theta_alpha products of a transported process, the zeta_alpha products of
the reverse transformation, defects against the limiting convolution
exponential, and Cauchy increments along dyadic mesh sequences.
"""

from __future__ import annotations

import itertools
import warnings

import numpy as np

from .bialg import LinearFunctional
from .constructions import GroupLikeBialgebra, Morphism
from .errors import InvalidParameter, TermBudgetExceeded
from .ncpoly import NcPoly, involute, multiply
from .partition import Partition
from .subcoalg import conv_exp

TERM_BUDGET = 10 ** 6
FACTOR_EVAL_WARN = 10 ** 5

_FACTOR_CACHE = {}


class FactorizedVectorSum:
    """Sum of elementary tensors of per-interval vectors j_{.}(b) Omega."""

    def __init__(self, partition):
        self.partition = partition
        self.terms = {}       # tuple of entry keys -> coefficient
        self.registry = {}    # entry key -> NcPoly

    def add_term(self, polys, coeff):
        if len(polys) != self.partition.n_intervals():
            raise InvalidParameter("one entry per subinterval required")
        keys = []
        for p in polys:
            k = p.key()
            self.registry.setdefault(k, p)
            keys.append(k)
        keys = tuple(keys)
        self.terms[keys] = self.terms.get(keys, 0.0) + coeff
        if abs(self.terms[keys]) < 1e-15:
            del self.terms[keys]
        if len(self.terms) > TERM_BUDGET:
            raise TermBudgetExceeded(f"more than {TERM_BUDGET} factorized terms")

    def n_terms(self):
        return len(self.terms)

    @classmethod
    def singleton(cls, b, s, t):
        out = cls(Partition([s, t]))
        out.add_term((b,), 1.0)
        return out

    def refine(self, gamma, B):
        """Re-expand over a finer partition using iterated coproducts.

        Legitimate because the process satisfies j_{r,s} * j_{s,t} = j_{r,t};
        Gram values are unchanged by refinement.
        """
        if not gamma.refines(self.partition):
            raise InvalidParameter("target partition does not refine the source")
        counts = []
        times = list(self.partition.times)
        gi = 0
        for a, b in zip(times, times[1:]):
            m = 0
            while gi + 1 < len(gamma.times) and gamma.times[gi + 1] <= b + 1e-12:
                m += 1
                gi += 1
            counts.append(m)
        if all(m == 1 for m in counts):
            out = FactorizedVectorSum(gamma)
            out.terms = dict(self.terms)
            out.registry = dict(self.registry)
            return out
        out = FactorizedVectorSum(gamma)
        for keys, z in self.terms.items():
            slot_options = []
            for k, m in zip(keys, counts):
                p = self.registry[k]
                if m == 1:
                    slot_options.append([((p,), 1.0)])
                    continue
                exp = B.iterated_coproduct(p, m)
                slot_options.append(
                    [(tuple(NcPoly.word(w) for w in legs), c)
                     for legs, c in exp.terms.items()])
            for combo in itertools.product(*slot_options):
                coeff = z
                entries = []
                for legs, c in combo:
                    coeff *= c
                    entries.extend(legs)
                out.add_term(tuple(entries), coeff)
        return out


def identity_morphism(B):
    return Morphism(B, B, "algebra-homomorphism",
                    key_map=lambda k: NcPoly.word(k), name=f"id[{B.name}]")


# ---------------------------------------------------------------------------
# expansions
# ---------------------------------------------------------------------------

def theta_expand(c, kappa, alpha):
    """theta_alpha(c): Sweedler-expand the n-fold coproduct of c in the
    source carrier and push every leg through kappa into B."""
    source = kappa.source
    n = alpha.n_intervals()
    exp = source.iterated_coproduct(c, n)
    out = FactorizedVectorSum(alpha)
    for key_tuple, z in exp.terms.items():
        out.add_term(tuple(kappa.map_key(k) for k in key_tuple), z)
    return out


def zeta_expand(b, kappa_tilde, alpha, inner_mesh_factor=1):
    """zeta_alpha(b): legs of Delta_n(b) lifted by kappa-tilde into the
    group-like carrier; each group-like factor on an interval is itself
    represented through its (constant) theta expansion over a sub-partition
    with inner_mesh_factor equal pieces."""
    if inner_mesh_factor < 1:
        raise InvalidParameter("inner_mesh_factor must be >= 1")
    G = kappa_tilde.target
    if not isinstance(G, GroupLikeBialgebra):
        raise InvalidParameter("kappa_tilde must map into a group-like carrier")
    B = kappa_tilde.source
    n = alpha.n_intervals()
    exp = B.iterated_coproduct(b, n)
    times = []
    for a, t1 in zip(alpha.times, alpha.times[1:]):
        times.extend(np.linspace(a, t1, inner_mesh_factor + 1)[:-1])
    times.append(alpha.times[-1])
    gamma = Partition(times)
    out = FactorizedVectorSum(gamma)
    unit = G.unit_key()
    for word_tuple, z in exp.terms.items():
        leg_options = []
        for w in word_tuple:
            p = NcPoly.word(w)
            lifted = dict(G.kappa_tilde(p))
            dw = complex(B.counit(p))
            if abs(dw) > 1e-15:
                lifted[unit] = lifted.get(unit, 0.0) + dw
            leg_options.append([(k, c) for k, c in lifted.items()
                                if abs(c) > 1e-15])
        for combo in itertools.product(*leg_options):
            coeff = z
            entries = []
            for gkey, c in combo:
                coeff *= c
                entries.extend([G.poly(gkey)] * inner_mesh_factor)
            out.add_term(tuple(entries), coeff)
    return out


# ---------------------------------------------------------------------------
# gram evaluation
# ---------------------------------------------------------------------------

def _factor_value(psi, B, dt, a_key, b_key, a, b):
    key = (id(psi), id(B), dt, a_key, b_key)
    hit = _FACTOR_CACHE.get(key)
    if hit is None:
        prod = multiply(involute(a, B.algebra), b, B.algebra)
        hit = conv_exp(psi, dt, prod, B)
        _FACTOR_CACHE[key] = hit
        if len(_FACTOR_CACHE) == FACTOR_EVAL_WARN:
            warnings.warn(
                f"more than {FACTOR_EVAL_WARN} distinct Gram factor evaluations",
                RuntimeWarning)
    return hit


_EXPAND_CACHE = {}


def _expand_slots(B, polys, counts):
    """Sweedler-expand a run of slots over their sub-interval counts.

    Returns a list of (leg polys across all sub-intervals, coefficient);
    expansions are cached per (entry keys, counts).
    """
    key = (id(B), tuple(p.key() for p in polys), counts)
    hit = _EXPAND_CACHE.get(key)
    if hit is not None:
        return hit
    options = []
    for p, m in zip(polys, counts):
        if m == 1:
            options.append([((p,), 1.0)])
        else:
            exp = B.iterated_coproduct(p, m)
            options.append([(tuple(NcPoly.word(w) for w in legs), z)
                            for legs, z in exp.terms.items()])
    out = []
    for combo in itertools.product(*options):
        coeff = 1.0
        legs = []
        for ls, z in combo:
            coeff *= z
            legs.extend(ls)
        out.append((tuple(legs), coeff))
        if len(out) > TERM_BUDGET:
            raise TermBudgetExceeded("slot expansion exceeds the term budget")
    _EXPAND_CACHE[key] = out
    return out


def _side_layout(ptimes, common, gamma_times, tol=1e-12):
    """Per block: list of (slot index, number of gamma sub-intervals)."""
    per_block = [[] for _ in range(len(common) - 1)]
    bi = 0
    gi = 0
    for si, (a, b) in enumerate(zip(ptimes, ptimes[1:])):
        while bi + 1 < len(common) - 1 and common[bi + 1] <= a + tol:
            bi += 1
        m = 0
        while gi + 1 < len(gamma_times) and gamma_times[gi + 1] <= b + tol:
            m += 1
            gi += 1
        per_block[bi].append((si, m))
    return per_block


def gram(u, v, psi, B):
    """<u, v> with the left argument conjugate-starred entrywise.

    The value factorizes over the blocks between partition points common
    to both sides; within each block the coarser entries are re-expanded
    over the common refinement by iterated coproducts (legitimate because
    j_{r,s} * j_{s,t} = j_{r,t}), and the block sum is a cached pairing of
    one-interval vacuum values.  This keeps nested-partition Gram values
    polynomial in the mesh instead of materializing cross products.
    """
    tol = 1e-12
    if abs(u.partition.s - v.partition.s) > tol \
            or abs(u.partition.t - v.partition.t) > tol:
        raise InvalidParameter("expansions cover different intervals")
    if not u.terms or not v.terms:
        return 0.0 + 0.0j
    gamma = u.partition.common_refinement(v.partition)
    common = [t for t in u.partition.times
              if min(abs(t - w) for w in v.partition.times) <= tol]
    u_blocks = _side_layout(u.partition.times, common, gamma.times)
    v_blocks = _side_layout(v.partition.times, common, gamma.times)
    n_blocks = len(common) - 1
    # gamma steps grouped by block
    steps = gamma.steps()
    block_dts = []
    gi = 0
    for bi in range(n_blocks):
        m = sum(m for _si, m in u_blocks[bi])
        block_dts.append(tuple(steps[gi:gi + m]))
        gi += m

    def block_value(bi, u_polys, v_polys):
        dts = block_dts[bi]
        total = 0.0 + 0.0j
        u_opts = _expand_slots(B, u_polys, tuple(m for _s, m in u_blocks[bi]))
        v_opts = _expand_slots(B, v_polys, tuple(m for _s, m in v_blocks[bi]))
        for ulegs, cu in u_opts:
            for vlegs, cv in v_opts:
                prod = np.conj(cu) * cv
                for dt, a, b in zip(dts, ulegs, vlegs):
                    prod *= _factor_value(psi, B, dt, a.key(), b.key(), a, b)
                    if prod == 0.0:
                        break
                total += prod
        return total

    u_terms = list(u.terms.items())
    v_terms = list(v.terms.items())
    uz = np.array([z for _k, z in u_terms])
    vz = np.array([z for _k, z in v_terms])

    # per block: distinct slot-entry runs per side, and the value matrix
    cache = {}
    u_sub = [[tuple(keys[si] for si, _m in u_blocks[bi]) for bi in range(n_blocks)]
             for keys, _z in u_terms]
    v_sub = [[tuple(keys[si] for si, _m in v_blocks[bi]) for bi in range(n_blocks)]
             for keys, _z in v_terms]
    pair = np.ones((len(u_terms), len(v_terms)), dtype=complex)
    for bi in range(n_blocks):
        u_distinct = sorted({s[bi] for s in u_sub})
        v_distinct = sorted({s[bi] for s in v_sub})
        ui = {k: i for i, k in enumerate(u_distinct)}
        vi = {k: i for i, k in enumerate(v_distinct)}
        fm = np.empty((len(u_distinct), len(v_distinct)), dtype=complex)
        for ak in u_distinct:
            for bk in v_distinct:
                ck = (bi, ak, bk)
                if ck not in cache:
                    cache[ck] = block_value(
                        bi, tuple(u.registry[k] for k in ak),
                        tuple(v.registry[k] for k in bk))
                fm[ui[ak], vi[bk]] = cache[ck]
        uidx = np.array([ui[s[bi]] for s in u_sub])
        vidx = np.array([vi[s[bi]] for s in v_sub])
        pair *= fm[uidx[:, None], vidx[None, :]]
    return complex(uz.conj() @ pair @ vz)


# ---------------------------------------------------------------------------
# limits e_*^{(t-s) psi o kappa} on the source carrier
# ---------------------------------------------------------------------------

def _source_star_product(source, c, d):
    if isinstance(source, GroupLikeBialgebra):
        return source.elem_mul(source.elem_star(c), d)
    return multiply(involute(c, source.algebra), d, source.algebra)


def limit_value(psi, kappa, tau, elem):
    """e_*^{tau psi o kappa} evaluated on a source element."""
    source = kappa.source
    if isinstance(source, GroupLikeBialgebra):
        total = 0.0 + 0.0j
        for gkey, c in elem.items():
            total += c * np.exp(tau * psi(source.poly(gkey)))
        return complex(total)
    pk = LinearFunctional(f"psi-kappa[{kappa.name}]",
                          lambda w: psi(kappa.map_key(w)))
    return conv_exp(pk, tau, elem, source)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

class ConvergenceRow:
    def __init__(self, n, mesh, norm_sq, cross, defect, bound,
                 cauchy_increment=None):
        self.n = n
        self.mesh = mesh
        self.norm_sq = norm_sq
        self.cross = cross
        self.defect = defect
        self.bound = bound
        self.cauchy_increment = cauchy_increment

    def as_dict(self):
        return {
            "n": self.n,
            "mesh": self.mesh,
            "norm_sq": self.norm_sq,
            "re_cross": self.cross.real,
            "im_cross": self.cross.imag,
            "defect": self.defect,
            "bound": self.bound,
            "cauchy_increment": self.cauchy_increment,
        }


def convergence_sweep(c, d, kappa, psi, s, t, ns):
    """Sweep the theta products over uniform meshes against their limit.

    The reported bound is mesh * (t-s) * C with C fitted from the coarsest
    mesh with nonzero defect (the theorem's constant is existential).
    """
    B = kappa.target
    source = kappa.source
    tau = t - s
    limit = limit_value(psi, kappa, tau, _source_star_product(source, c, d))
    rows = []
    prev_u = prev_norm = None
    c_fit = None
    for n in ns:
        alpha = Partition.uniform(s, t, n)
        u = theta_expand(c, kappa, alpha)
        v = u if _same_elem(c, d) else theta_expand(d, kappa, alpha)
        norm_sq = gram(u, u, psi, B).real
        cross = gram(u, v, psi, B)
        defect = abs(cross - limit)
        if c_fit is None and defect > 1e-13:
            c_fit = defect * n / tau
        bound = (alpha.mesh() * tau * c_fit) if c_fit is not None else 0.0
        inc = None
        if prev_u is not None:
            inc = abs(norm_sq + prev_norm - 2.0 * gram(u, prev_u, psi, B).real)
        rows.append(ConvergenceRow(n, alpha.mesh(), norm_sq, cross, defect,
                                   bound, inc))
        prev_u, prev_norm = u, norm_sq
    return rows


def _same_elem(c, d):
    if isinstance(c, NcPoly) and isinstance(d, NcPoly):
        return not c.sub(d).terms
    if isinstance(c, dict) and isinstance(d, dict):
        return c == d
    return False


def reverse_check(b, d, kappa_tilde, psi, s, t, ns, inner_mesh_factor=1):
    """|<zeta_alpha(b), j_{s,t}(d) Omega> - e_*^{(t-s) psi}(b* d)| per mesh."""
    B = kappa_tilde.source
    tau = t - s
    bd = multiply(involute(b, B.algebra), d, B.algebra)
    limit = conv_exp(psi, tau, bd, B)
    v = FactorizedVectorSum.singleton(d, s, t)
    rows = []
    for n in ns:
        alpha = Partition.uniform(s, t, n)
        u = zeta_expand(b, kappa_tilde, alpha, inner_mesh_factor)
        norm_sq = gram(u, u, psi, B).real
        cross = gram(u, v, psi, B)
        defect = abs(cross - limit)
        rows.append(ConvergenceRow(n, alpha.mesh(), norm_sq, cross, defect,
                                   defect))
    return rows
