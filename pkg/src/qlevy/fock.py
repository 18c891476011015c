"""Truncated Boson Fock space numerics.

Creation / annihilation / preservation operators on an occupation-number
truncation of the one-interval Fock factor, exponential vectors, the
first-order generator processes

    I_{s,t}(b) = delta(b) I + A(eta(b*)) + Lambda(rho(b) - delta(b))
                 + A*(eta(b)) + psi(b - delta(b) 1) (t - s),

their infinitesimal convolution products over a partition, unitary product
evolutions for the unitary-matrix bialgebra, and the Azema / Wiener
transformation experiments.  Vectors and operators are kept as sums of
per-interval elementary tensors; the full n-fold tensor space is never
materialized.  All vacuum quantities computed here are an independent
second path to the exact one-interval semigroup values of the gram module.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidParameter,
    TailBoundExceeded,
    TermBudgetExceeded,
)
from .ncpoly import NcPoly, involute, multiply
from .partition import Partition

DEFAULT_CAP = 8
TENSOR_TERM_BUDGET = 10 ** 5


class FockFactor:
    """Occupation-number truncation of the symmetric Fock space over C^m.

    Basis: occupation tuples (n_1 .. n_m) with sum n_j <= cap, ordered by
    (total particle number, tuple).  dim = sum_{p<=cap} C(m+p-1, p).
    """

    def __init__(self, m, cap):
        self.m = int(m)
        self.cap = int(cap)
        if self.m < 0 or self.cap < 0:
            raise InvalidParameter("mode count and particle cap must be >= 0")
        basis = [occ for occ in itertools.product(range(self.cap + 1), repeat=self.m)
                 if sum(occ) <= self.cap]
        basis.sort(key=lambda occ: (sum(occ), occ))
        self.basis = basis
        self.index = {occ: i for i, occ in enumerate(basis)}
        self.dim = len(basis)
        self._create = {}

    def vacuum(self):
        v = np.zeros(self.dim, dtype=complex)
        v[self.index[(0,) * self.m]] = 1.0
        return v

    def total(self, i):
        """Particle number of the i-th basis state."""
        return sum(self.basis[i])

    def creation(self, j):
        """Matrix of a_j^* truncated at the cap (top level is annihilated)."""
        hit = self._create.get(j)
        if hit is None:
            if not 0 <= j < self.m:
                raise DimensionMismatch(f"mode {j} out of range for m = {self.m}")
            mat = np.zeros((self.dim, self.dim), dtype=complex)
            for i, occ in enumerate(self.basis):
                if sum(occ) < self.cap:
                    up = occ[:j] + (occ[j] + 1,) + occ[j + 1:]
                    mat[self.index[up], i] = math.sqrt(occ[j] + 1)
            self._create[j] = mat
            hit = mat
        return hit

    def annihilation(self, j):
        return self.creation(j).conj().T


class FockOperator:
    """A matrix on a single FockFactor tagged with its time interval."""

    def __init__(self, factor, interval, mat):
        self.factor = factor
        self.interval = (float(interval[0]), float(interval[1]))
        self.mat = np.asarray(mat, dtype=complex)
        if self.mat.shape != (factor.dim, factor.dim):
            raise DimensionMismatch("operator matrix does not fit the factor")

    @classmethod
    def identity(cls, factor, interval):
        return cls(factor, interval, np.eye(factor.dim, dtype=complex))

    def adjoint(self):
        return FockOperator(self.factor, self.interval, self.mat.conj().T)

    def add(self, other):
        return FockOperator(self.factor, self.interval, self.mat + other.mat)

    def scale(self, z):
        return FockOperator(self.factor, self.interval, z * self.mat)

    def compose(self, other):
        return FockOperator(self.factor, self.interval, self.mat @ other.mat)

    def apply(self, vec):
        return self.mat @ np.asarray(vec, dtype=complex)

    def vacuum_expectation(self):
        om = self.factor.vacuum()
        return complex(np.vdot(om, self.mat @ om))


def quantum_noise_op(kind, arg, interval, factor):
    """A_{s,t}, Lambda_{s,t}, A*_{s,t} on a truncated factor.

    Creation for a vector k: sqrt(t-s) sum_j k_j a_j^*; annihilation is its
    exact adjoint (conjugated coefficients, same sqrt(t-s) scaling);
    preservation for a matrix T: sum_{jl} T_jl a_j^* a_l, no time scaling.
    """
    s, t = float(interval[0]), float(interval[1])
    if t <= s:
        raise InvalidParameter("interval must have positive length")
    m = factor.m
    if kind in ("creation", "annihilation"):
        k = np.asarray(arg, dtype=complex).reshape(-1)
        if k.shape != (m,):
            raise DimensionMismatch(f"vector argument must have length {m}")
        mat = np.zeros((factor.dim, factor.dim), dtype=complex)
        for j in range(m):
            if abs(k[j]) > 0.0:
                mat = mat + k[j] * factor.creation(j)
        mat = math.sqrt(t - s) * mat
        if kind == "annihilation":
            mat = mat.conj().T
        return FockOperator(factor, (s, t), mat)
    if kind == "preservation":
        T = np.asarray(arg, dtype=complex)
        if T.shape != (m, m):
            raise DimensionMismatch(f"matrix argument must be {m} x {m}")
        mat = np.zeros((factor.dim, factor.dim), dtype=complex)
        for j in range(m):
            for l in range(m):
                if abs(T[j, l]) > 0.0:
                    mat = mat + T[j, l] * (factor.creation(j) @ factor.annihilation(l))
        return FockOperator(factor, (s, t), mat)
    raise InvalidParameter(f"unknown noise operator kind {kind!r}")


# ---------------------------------------------------------------------------
# factorized vectors
# ---------------------------------------------------------------------------

class FactorizedFockVector:
    """coeff * (tensor over partition intervals of per-factor vectors)."""

    def __init__(self, partition, factor, vectors, coeff=1.0):
        if len(vectors) != partition.n_intervals():
            raise InvalidParameter("one vector per subinterval required")
        self.partition = partition
        self.factor = factor
        self.vectors = [np.asarray(v, dtype=complex) for v in vectors]
        self.coeff = complex(coeff)

    @property
    def terms(self):
        return [(self.coeff, tuple(self.vectors))]


class FockVectorSum:
    """Sum of elementary tensors over a shared partition."""

    def __init__(self, partition, factor, terms=None):
        self.partition = partition
        self.factor = factor
        self.terms = list(terms) if terms is not None else []

    def add_term(self, coeff, vectors):
        if len(vectors) != self.partition.n_intervals():
            raise InvalidParameter("one vector per subinterval required")
        self.terms.append((complex(coeff), tuple(vectors)))
        if len(self.terms) > TENSOR_TERM_BUDGET:
            raise TermBudgetExceeded(
                f"more than {TENSOR_TERM_BUDGET} elementary tensors")


def fock_inner(u, v):
    """<u, v>, conjugate-linear in u; inner products factorize per interval."""
    total = 0.0 + 0.0j
    for cu, uv in u.terms:
        for cv, vv in v.terms:
            z = complex(cu).conjugate() * cv
            for a, b in zip(uv, vv):
                z *= np.vdot(a, b)
                if z == 0.0:
                    break
            total += z
    return complex(total)


def exp_tail_bound(z, cap):
    """sum_{p > cap} |z|^p / p!  (analytic truncation tail)."""
    z = abs(z)
    term = z ** (cap + 1) / math.factorial(cap + 1)
    acc = 0.0
    p = cap + 1
    while term > 1e-300 and p < cap + 400:
        acc += term
        p += 1
        term *= z / p
        if term < 1e-30 * max(acc, 1e-30):
            acc += term
            break
    return acc


def exponential_vector(k, interval, factor):
    """Truncated exponential vector of the profile k (x) 1_{[s,t]}.

    Occupation amplitudes prod_j c_j^{n_j} / sqrt(n_j!) with c = k sqrt(t-s),
    so <E(f), E(g)> = exp((t-s) <k, k'>) up to the tail sum_{p>cap} |.|^p/p!.
    The heuristic precondition |k|^2 (t-s) <= ln(10) cap / 3 keeps that tail
    controlled; its violation raises TailBoundExceeded.
    """
    s, t = float(interval[0]), float(interval[1])
    if t <= s:
        raise InvalidParameter("interval must have positive length")
    k = np.asarray(k, dtype=complex).reshape(-1)
    if k.shape != (factor.m,):
        raise DimensionMismatch(f"profile vector must have length {factor.m}")
    z = float(np.vdot(k, k).real) * (t - s)
    if z > math.log(10.0) * factor.cap / 3.0:
        raise TailBoundExceeded(
            f"|k|^2 (t-s) = {z:.3g} exceeds the cap-{factor.cap} tail heuristic")
    c = k * math.sqrt(t - s)
    vec = np.zeros(factor.dim, dtype=complex)
    for i, occ in enumerate(factor.basis):
        amp = 1.0 + 0.0j
        for j, n in enumerate(occ):
            if n:
                amp *= c[j] ** n / math.sqrt(math.factorial(n))
        vec[i] = amp
    return FactorizedFockVector(Partition([s, t]), factor, [vec])


# ---------------------------------------------------------------------------
# generator processes and their convolution products
# ---------------------------------------------------------------------------

def generator_process(triple, b, interval, factor):
    """I_{s,t}(b) for a Levy triple, as a single-factor operator."""
    if factor.m != triple.k_dim:
        raise DimensionMismatch(
            f"factor has {factor.m} modes but the triple has kDim {triple.k_dim}")
    s, t = float(interval[0]), float(interval[1])
    B = triple.B
    delta = complex(B.counit(b))
    eta_b = triple.eta(b)
    eta_bs = triple.eta(involute(b, B.algebra))
    rho_b = triple.rho(b) - delta * np.eye(triple.k_dim)
    psi0 = complex(triple.psi(b.sub(NcPoly.one().scale(delta))))
    mat = (delta + psi0 * (t - s)) * np.eye(factor.dim, dtype=complex)
    mat = mat + quantum_noise_op("annihilation", eta_bs, (s, t), factor).mat
    mat = mat + quantum_noise_op("creation", eta_b, (s, t), factor).mat
    if np.abs(rho_b).max() if rho_b.size else 0.0:
        mat = mat + quantum_noise_op("preservation", rho_b, (s, t), factor).mat
    return FockOperator(factor, (s, t), mat)


class TensorOperatorSum:
    """Sum of per-interval elementary tensors of single-factor matrices."""

    def __init__(self, partition, factor, terms):
        self.partition = partition
        self.factor = factor
        self.terms = list(terms)
        if len(self.terms) > TENSOR_TERM_BUDGET:
            raise TermBudgetExceeded(
                f"more than {TENSOR_TERM_BUDGET} elementary tensors")

    def scale(self, z):
        return TensorOperatorSum(self.partition, self.factor,
                                 [(z * c, mats) for c, mats in self.terms])

    def add(self, other):
        if list(self.partition.times) != list(other.partition.times):
            raise InvalidParameter("operator sums live on different partitions")
        return TensorOperatorSum(self.partition, self.factor,
                                 self.terms + other.terms)

    def extend(self, extra_mats, new_partition):
        """Tensor with fixed matrices on appended subintervals."""
        extra = tuple(np.asarray(m, dtype=complex) for m in extra_mats)
        return TensorOperatorSum(new_partition, self.factor,
                                 [(c, mats + extra) for c, mats in self.terms])

    def apply_elementary(self, vectors):
        out = FockVectorSum(self.partition, self.factor)
        for c, mats in self.terms:
            out.add_term(c, tuple(m @ v for m, v in zip(mats, vectors)))
        return out

    def apply_vacuum(self):
        om = self.factor.vacuum()
        return self.apply_elementary([om] * self.partition.n_intervals())

    def vacuum_expectation(self):
        om = self.factor.vacuum()
        total = 0.0 + 0.0j
        for c, mats in self.terms:
            z = c
            for m in mats:
                z *= np.vdot(om, m @ om)
                if z == 0.0:
                    break
            total += z
        return complex(total)


def convolution_product_process(triple, b, B, partition,
                                particle_cap=DEFAULT_CAP, factor=None):
    """Infinitesimal convolution product: sum over Delta_n(b) Sweedler legs
    of the elementary tensor of per-interval generator processes."""
    n = partition.n_intervals()
    if factor is None:
        factor = FockFactor(triple.k_dim, particle_cap)
    times = partition.times
    exp = B.iterated_coproduct(b, n)
    cache = {}
    terms = []
    for legs, z in exp.terms.items():
        mats = []
        for r, w in enumerate(legs):
            dt = times[r + 1] - times[r]
            key = (w, round(dt, 15))
            hit = cache.get(key)
            if hit is None:
                hit = generator_process(triple, NcPoly.word(w),
                                        (times[r], times[r + 1]), factor).mat
                cache[key] = hit
            mats.append(hit)
        terms.append((complex(z), tuple(mats)))
    return TensorOperatorSum(partition, factor, terms)


def cross_path_report(triple, b, B, psi, partition, particle_cap=DEFAULT_CAP):
    """Vacuum norm of the convolution product vs the exact gram-engine value.

    The fock side uses the first-order operators I_{s,t}; the gram side uses
    the exact one-interval semigroup values conv_exp(psi, dt, .).  The
    reported per-instance bound telescopes the per-interval deviations
    |<I(a) Omega, I(b) Omega> - phi_dt(a* b)| through the term-pair products
    and adds the (here zero: a single application of I creates at most one
    particle per slot) truncation tail.
    """
    from .subcoalg import conv_exp

    n = partition.n_intervals()
    steps = partition.steps()
    times = partition.times
    alg = B.algebra
    factor = FockFactor(triple.k_dim, particle_cap)
    om = factor.vacuum()
    leg_list = list(B.iterated_coproduct(b, n).terms.items())
    vec_cache = {}

    def leg_vector(w, r):
        key = (w, round(steps[r], 15))
        hit = vec_cache.get(key)
        if hit is None:
            hit = generator_process(triple, NcPoly.word(w),
                                    (times[r], times[r + 1]), factor).apply(om)
            vec_cache[key] = hit
        return hit

    applied = [(c, tuple(leg_vector(w, r) for r, w in enumerate(legs)))
               for legs, c in leg_list]
    gram_cache = {}

    def gram_factor(wa, wb, dt):
        key = (wa, wb, round(dt, 15))
        hit = gram_cache.get(key)
        if hit is None:
            prod = multiply(involute(NcPoly.word(wa), alg), NcPoly.word(wb), alg)
            hit = complex(conv_exp(psi, dt, prod, B))
            gram_cache[key] = hit
        return hit

    fock_total = 0.0 + 0.0j
    gram_total = 0.0 + 0.0j
    bound = 0.0
    for (la, ca), (_fa, va) in zip(leg_list, applied):
        for (lb, cb), (_fb, vb) in zip(leg_list, applied):
            z = complex(ca).conjugate() * cb
            fvals = [complex(np.vdot(a, bb)) for a, bb in zip(va, vb)]
            gvals = [gram_factor(wa, wb, dt)
                     for wa, wb, dt in zip(la, lb, steps)]
            fock_total += z * np.prod(fvals) if fvals else z
            gram_total += z * np.prod(gvals) if gvals else z
            mx = [max(abs(f), abs(g)) for f, g in zip(fvals, gvals)]
            for r in range(n):
                rest = np.prod(mx[:r] + mx[r + 1:]) if n > 1 else 1.0
                bound += abs(z) * abs(fvals[r] - gvals[r]) * rest
    return {
        "n": n,
        "mesh": partition.mesh(),
        "fock_value": fock_total,
        "gram_value": gram_total,
        "defect": abs(fock_total - gram_total),
        "bound": float(bound),
        "tail": 0.0,
    }


# ---------------------------------------------------------------------------
# unitary product evolutions
# ---------------------------------------------------------------------------

class UnitaryEvolution:
    """Ordered product of per-interval d x d generator-block matrices.

    Blocks on distinct intervals act on their own tensor factor; matrix
    elements against factorized states are evaluated by chaining d^2 x d^2
    per-interval transfer matrices, never enumerating the d^n block paths.
    """

    def __init__(self, params, partition, factor, blocks):
        self.params = params
        self.partition = partition
        self.factor = factor
        self.blocks = blocks          # per interval: d x d list of matrices

    def vacuum_amplitude(self):
        """d x d matrix of <Omega, (U_alpha)_{ij} Omega>."""
        d = self.params.d
        om = self.factor.vacuum()
        out = np.eye(d, dtype=complex)
        for blk in self.blocks:
            v = np.array([[np.vdot(om, blk[i][j] @ om) for j in range(d)]
                          for i in range(d)])
            out = out @ v
        return out

    def unitarity_defect(self, probe_slots=None):
        """max |<U chi, U chi'> - <chi, chi'>| over a low-particle test family.

        chi ranges over e_j (x) Phi with Phi the vacuum or a one-particle
        excitation in a probe slot; this spans the reachable low-order part
        of the <= cap-1 particle subspace without materializing it.
        """
        d, m = self.params.d, self.factor.m
        n = len(self.blocks)
        if probe_slots is None:
            probe_slots = sorted({0, n // 2, n - 1})
        variants = [self.factor.vacuum()]
        for mu in range(m):
            occ = (0,) * mu + (1,) + (0,) * (m - mu - 1)
            e = np.zeros(self.factor.dim, dtype=complex)
            e[self.factor.index[occ]] = 1.0
            variants.append(e)

        # per interval, per variant pair: transfer matrix
        # P[(k, k'), (l, l')] = <B_{kl} u, B_{k'l'} v>
        applied_cache = {}

        def applied(r, v):
            key = (r, v)
            hit = applied_cache.get(key)
            if hit is None:
                blk = self.blocks[r]
                hit = [[blk[i][j] @ variants[v] for j in range(d)]
                       for i in range(d)]
                applied_cache[key] = hit
            return hit

        transfer_cache = {}

        def transfer(r, u, v):
            key = (r, u, v)
            hit = transfer_cache.get(key)
            if hit is None:
                au, av = applied(r, u), applied(r, v)
                p = np.empty((d * d, d * d), dtype=complex)
                for k in range(d):
                    for kp in range(d):
                        for l in range(d):
                            for lp in range(d):
                                p[k * d + kp, l * d + lp] = np.vdot(
                                    au[k][l], av[kp][lp])
                transfer_cache[key] = p
                hit = p
            return hit

        probes = [None] + [(r, v) for r in probe_slots
                           for v in range(1, len(variants))]
        start = np.zeros(d * d, dtype=complex)
        for i in range(d):
            start[i * d + i] = 1.0
        defect = 0.0
        for pa in probes:
            for pb in probes:
                row = start.copy()
                for r in range(n):
                    u = pa[1] if pa is not None and pa[0] == r else 0
                    v = pb[1] if pb is not None and pb[0] == r else 0
                    row = row @ transfer(r, u, v)
                for j in range(d):
                    for jp in range(d):
                        want = 1.0 if (j == jp and pa == pb) else 0.0
                        defect = max(defect, abs(row[j * d + jp] - want))
        return float(defect)


def unitary_product_evolution(params, d, partition, particle_cap=DEFAULT_CAP,
                              probe_slots=None):
    """Product evolution U_alpha = I_{t0,t1} ... I_{tn-1,tn} of generator
    blocks for the (W, L, H) triple, plus its unitarity defect."""
    from .gns import unitary_triple

    if int(d) != params.d:
        raise InvalidParameter("d does not match the parameter set")
    triple = unitary_triple(params)
    factor = FockFactor(params.m, particle_cap)
    times = partition.times
    cache = {}
    blocks = []
    for r in range(partition.n_intervals()):
        dt = times[r + 1] - times[r]
        key = round(dt, 15)
        blk = cache.get(key)
        if blk is None:
            blk = [[generator_process(
                triple, NcPoly.word(((i - 1) * params.d + (j - 1),)),
                (times[r], times[r + 1]), factor).mat
                for j in range(1, params.d + 1)]
                for i in range(1, params.d + 1)]
            cache[key] = blk
        blocks.append(blk)
    evo = UnitaryEvolution(params, partition, factor, blocks)
    return evo, evo.unitarity_defect(probe_slots)


# ---------------------------------------------------------------------------
# Azema / Wiener experiment
# ---------------------------------------------------------------------------

def azema_wiener_experiment(q, partition, cap=DEFAULT_CAP):
    """Both transformation directions of the Azema / Wiener pair on Fock space.

    Wiener from Azema increments: the sum of per-interval Z = I(x + x*)
    applied to the vacuum, versus the primitive-structure (Brownian) target.
    Azema from Wiener increments: the convolution product of I(x + x*) over
    the Azema coproduct (creation / annihilation heads with second-quantized
    y tails), versus the Azema-structure target.  Also reports the discrete
    residual of dX = (q - 1) X dLambda + dA on a coherent-type test vector.
    """
    from .constructions import make_azema
    from .gns import gns_construct
    from .subcoalg import conv_exp

    B, primitive, psi = make_azema(q)
    alg = B.algebra
    triple = gns_construct(psi, B, degree_cap=3)
    factor = FockFactor(triple.k_dim, cap)
    n = partition.n_intervals()
    times = partition.times
    tau = partition.t - partition.s
    x = NcPoly.word((0,))
    w = NcPoly({(0,): 1.0, (1,): 1.0})          # x + x*
    wsq = multiply(involute(w, alg), w, alg)
    ident = np.eye(factor.dim, dtype=complex)

    # Wiener from Azema increments: sum_j Z_{t_j, t_{j+1}}
    terms = []
    for j in range(n):
        mats = [ident] * n
        mats[j] = generator_process(triple, w, (times[j], times[j + 1]),
                                    factor).mat
        terms.append((1.0, tuple(mats)))
    sigma = TensorOperatorSum(partition, factor, terms)
    wiener_vec = sigma.apply_vacuum()
    wiener_norm = fock_inner(wiener_vec, wiener_vec).real
    wiener_target = complex(conv_exp(psi, tau, wsq, primitive)).real

    # Azema from Wiener increments: the infinitesimal convolution product
    proc = convolution_product_process(triple, w, B, partition, cap, factor)
    az_vec = proc.apply_vacuum()
    azema_norm = fock_inner(az_vec, az_vec).real
    azema_target = complex(conv_exp(psi, tau, wsq, B)).real

    xproc = convolution_product_process(triple, x, B, partition, cap, factor)
    xv = xproc.apply_vacuum()
    x_vacuum_norm = fock_inner(xv, xv).real

    # discrete QSDE residual over the last subinterval
    qsde_residual = None
    if n >= 2:
        head = Partition(times[:-1])
        tail = (times[-2], times[-1])
        xt = convolution_product_process(triple, x, B, head, cap, factor)
        lam = quantum_noise_op("preservation", np.eye(factor.m), tail,
                               factor).mat
        ann = quantum_noise_op("annihilation", np.ones(factor.m), tail,
                               factor).mat
        xfull = convolution_product_process(triple, x, B, partition, cap,
                                            factor)
        resid = xfull.add(xt.extend([ident], partition).scale(-1.0))
        resid = resid.add(xt.extend([lam], partition).scale(-(q - 1.0)))
        resid = resid.add(TensorOperatorSum(
            partition, factor, [(-1.0, (ident,) * (n - 1) + (ann,))]))
        om = factor.vacuum()
        probe = om.copy()
        for mu in range(factor.m):
            occ = (0,) * mu + (1,) + (0,) * (factor.m - mu - 1)
            probe[factor.index[occ]] = 0.5
        rv = resid.apply_elementary([probe] * n)
        qsde_residual = math.sqrt(max(fock_inner(rv, rv).real, 0.0))

    return {
        "q": float(q),
        "t": tau,
        "n": n,
        "mesh": partition.mesh(),
        "wiener_norm_sq": wiener_norm,
        "wiener_target": wiener_target,
        "wiener_defect": abs(wiener_norm - wiener_target),
        "azema_norm_sq": azema_norm,
        "azema_target": azema_target,
        "azema_defect": abs(azema_norm - azema_target),
        "x_vacuum_norm_sq": x_vacuum_norm,
        "qsde_residual": qsde_residual,
    }
