"""The fiber of point-supported currents: quotient map, PBW and kernel bases.

The surjection Phi sends an element of tensor(T_p M) box wedge^k(E_p) to
the functional

    omega |-> (nabla_{e_I} omega)_p (eps_K),

extended linearly over the coefficient map.  Its image has the PBW basis
indexed by nondecreasing words I and increasing k-subsets K; coordinates
in that basis are extracted by probing with the monomial forms
(e - p)^T / T! * d eps^L and back-substituting in descending total degree
(the probe matrix is unit-triangular by the monomial lemma).  The kernel
has an explicit basis of curvature-corrected commutators, validated here
by probe annihilation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from . import covderiv as cd
from . import expr as ex
from .connection import ChartConnection
from .covderiv import FD, FU, TU, Field
from .jets import FLOAT, Jet, as_point, as_scalar
from .multialg import (TensorExtElement, anti_indices, basis_element,
                       gradlex_key, iterated_tensor_coproduct, sort_sign,
                       sorted_word, sorted_words, tensor_coproduct,
                       wedge_coproduct, word_multidegree)


@dataclass
class AtomicCurrent:
    """A point-supported current in PBW coordinates.

    ``coeffs`` maps (nondecreasing word I, increasing subset K) to the
    coefficient of the functional omega |-> (nabla_{e_I} omega)_p(eps_K).
    """

    point: tuple
    r: int
    k: int
    coeffs: dict = dc_field(default_factory=dict)

    def add(self, I, K, c):
        if c == 0:
            return
        key = (tuple(I), tuple(K))
        cur = self.coeffs.get(key, 0)
        new = cur + c
        if new == 0:
            self.coeffs.pop(key, None)
        else:
            self.coeffs[key] = new

    def items(self):
        return sorted(self.coeffs.items(),
                      key=lambda kv: (gradlex_key(kv[0][0]), kv[0][1]))

    def scale(self, a):
        out = AtomicCurrent(self.point, self.r, self.k)
        if a != 0:
            out.coeffs = {key: a * c for key, c in self.coeffs.items()}
        return out

    def __add__(self, other):
        out = AtomicCurrent(self.point, max(self.r, other.r), self.k)
        out.coeffs = dict(self.coeffs)
        for (I, K), c in other.coeffs.items():
            out.add(I, K, c)
        return out

    def __sub__(self, other):
        return self + other.scale(-1)

    def max_abs(self):
        return max((abs(c) for c in self.coeffs.values()), default=0)

    def to_json(self):
        out = {}
        for (I, K), c in self.items():
            key = ",".join(map(str, I)) + "|" + ",".join(map(str, K))
            out[key] = str(c) if isinstance(c, Fraction) else float(c)
        return out

    @staticmethod
    def from_json(point, r, k, data):
        cur = AtomicCurrent(tuple(point), r, k)
        for key, c in data.items():
            ws, ks = key.split("|")
            I = tuple(int(x) for x in ws.split(",") if x != "")
            K = tuple(int(x) for x in ks.split(",") if x != "")
            cur.add(I, K, Fraction(c) if isinstance(c, str) else c)
        return cur


def pbw_keys(n: int, d: int, r: int, k: int):
    """All PBW keys (sorted word, k-subset) in graded-lex order."""
    return [(I, K) for I in sorted_words(n, r) for K in anti_indices(d, k)]


def pbw_dimension(n: int, d: int, r: int, k: int) -> int:
    return math.comb(n + r, n) * math.comb(d, k)


# ---------------------------------------------------------------------------
# Probe forms and Phi.

def probe_form(chart: ChartConnection, p, T, L, mode) -> Field:
    """The monomial probe (e - p)^T / T! * d eps^L as a form field on E.

    Probe fields are cached per (point, mode) on the chart so repeated PBW
    resolutions share their covariant-derivative caches.
    """
    p = as_point(p, mode)
    cache = chart._point_cache(p, mode)
    key = ("probe", tuple(T), tuple(L))
    hit = cache.get(key)
    if hit is None:
        mono = ex.monomial_form(p, T, chart.names)
        hit = cd.form_field(chart, len(L), {tuple(L): mono})
        cache[key] = hit
    return hit


def evaluate_functional(chart, coeffs, omega: Field, p, mode=FLOAT):
    """Evaluate sum c_{w,K} (nabla_{e_w} omega)_p(eps_K) for a key-coeff map."""
    total = 0
    for (w, K), c in coeffs:
        if c == 0:
            continue
        val = cd.nabla_value(omega, w, p, mode)
        v = val.get(tuple(K), 0)
        if v != 0:
            total += c * v
    return total


def phi_apply(chart: ChartConnection, x: TensorExtElement, omega: Field, p, mode=FLOAT):
    """Phi_p(x) evaluated on a form field."""
    degs = x.degrees()
    if len(degs) > 1:
        raise ValueError("phi_apply needs a homogeneous exterior degree")
    if degs and degs[0] != len(omega.slots):
        raise ValueError("degree mismatch between element and form")
    return evaluate_functional(chart, x.items(), omega, p, mode)


def current_evaluate(chart, T: AtomicCurrent, omega: Field, mode=FLOAT):
    return evaluate_functional(chart, T.items(), omega, T.point, mode)


# ---------------------------------------------------------------------------
# PBW resolution.

def to_pbw(chart: ChartConnection, x: TensorExtElement, p, r=None, k=None,
           mode=FLOAT) -> AtomicCurrent:
    """PBW coordinates of Phi_p(x), by descending-degree back-substitution.

    The probe matrix is unit-triangular: a PBW functional of word length
    |I| kills every probe of degree > |I| except the matching monomial
    (the Kronecker-delta lemma), so no general inversion is needed.
    """
    p = as_point(p, mode)
    if r is None:
        r = x.max_order()
    if k is None:
        degs = x.degrees()
        k = degs[0] if degs else 0
    if x.max_order() > r:
        raise ValueError(f"element has tensor order {x.max_order()} > r={r}")
    # pure sorted-word elements are their own PBW coordinates
    if all(w == tuple(sorted(w)) for (w, _K) in x.coeffs):
        cur = AtomicCurrent(p, r, k)
        for (w, K), c in x.coeffs.items():
            cur.add(w, K, c)
        return cur
    cur = AtomicCurrent(p, r, k)
    multis = _multi_indices(chart.n, r)
    for g in range(r, -1, -1):
        for T in multis[g]:
            for L in anti_indices(chart.d, k):
                probe = probe_form(chart, p, T, L, mode)
                y = phi_apply(chart, x, probe, p, mode)
                corr = 0
                for (I, K), c in cur.coeffs.items():
                    if len(I) <= g or c == 0:
                        continue
                    gval = cd.nabla_value(probe, I, p, mode).get(K, 0)
                    if gval != 0:
                        corr += c * gval
                cur.add(sorted_word(T), L, y - corr)
    return cur


def _multi_indices(n, r):
    out = {g: [] for g in range(r + 1)}
    for I in sorted_words(n, r):
        out[len(I)].append(word_multidegree(I, n))
    return out


def pbw_lift(n, d, I, K) -> TensorExtElement:
    """The canonical Phi-preimage of a PBW basis functional."""
    return basis_element(n, d, I, K)


# ---------------------------------------------------------------------------
# Kernel basis.

def _apply_end_to_kvector(M, kdict):
    """Derivation action of a fiber endomorphism on a k-vector coefficient
    map over increasing keys."""
    out = {}
    for K, c in kdict.items():
        if c == 0:
            continue
        for pos in range(len(K)):
            a = K[pos]
            for b in range(len(M)):
                coef = M[b][a]
                if coef == 0:
                    continue
                repl = K[:pos] + (b,) + K[pos + 1:]
                s = sort_sign(repl)
                if s == 0:
                    continue
                key = tuple(sorted(repl))
                out[key] = out.get(key, 0) + s * coef * c
    return {K: v for K, v in out.items() if v != 0}


def kernel_element(chart: ChartConnection, p, I, i, j, J, K, mode=FLOAT) -> TensorExtElement:
    """The kernel basis element E_{I,i,j,J,K}: three summand groups
    (antisymmetrized commutator with Sweedler factors, fiber-curvature
    correction, base-curvature correction)."""
    n, d = chart.n, chart.d
    p = as_point(p, mode)
    I, J, K = tuple(I), tuple(J), tuple(K)
    out = TensorExtElement(n, d)
    eJ = cd.coordinate_tensor_field(chart, J) if J else None
    ei = cd.coordinate_tensor_field(chart, (i,))
    ej = cd.coordinate_tensor_field(chart, (j,))

    def nvec(fieldv, S):
        # value of nabla_{e_S} of a coordinate vector field, as a dict idx -> scalar
        return cd.nabla_value(fieldv, S, p, mode)

    def ntens(S):
        # value of nabla_{e_S} e_J; for empty J the 0-tensor 1
        if J:
            return cd.nabla_value(eJ, S, p, mode)
        return {(): 1} if not S else {}

    # group 1: e_{I1} (x) [nabla_{I2} e_i (x) nabla_{I3} e_j - (i <-> j)]
    #          (x) nabla_{I4} e_J  box eps_K
    for (I1, I2, I3, I4) in iterated_tensor_coproduct(I, 4):
        vi, vj = nvec(ei, I2), nvec(ej, I3)
        wi, wj = nvec(ej, I2), nvec(ei, I3)
        tJ = ntens(I4)
        if not tJ:
            continue
        for (a,), ca in vi.items():
            for (b,), cb in vj.items():
                for wJ, cJ in tJ.items():
                    out.add_term(I1 + (a, b) + wJ, K, ca * cb * cJ)
        for (a,), ca in wi.items():
            for (b,), cb in wj.items():
                for wJ, cJ in tJ.items():
                    out.add_term(I1 + (a, b) + wJ, K, -(ca * cb * cJ))

    # group 2: e_{I1} (x) nabla_{I2} e_J box (nabla_{I3} R^E)_{nabla_{I4} e_i (x) nabla_{I5} e_j}(eps_K)
    for (I1, I2, I3, I4, I5) in iterated_tensor_coproduct(I, 5):
        tJ = ntens(I2)
        if not tJ:
            continue
        vi, vj = nvec(ei, I4), nvec(ej, I5)
        ab = {}
        for (u,), cu in vi.items():
            for (v,), cv in vj.items():
                ab[(u, v)] = ab.get((u, v), 0) + cu * cv
        if not ab:
            continue
        _, fiber_end = cd.curvature_endomorphisms(chart, I3, ab, p, mode)
        acted = _apply_end_to_kvector(fiber_end, {K: 1})
        for Kp, cK in acted.items():
            for wJ, cJ in tJ.items():
                out.add_term(I1 + wJ, Kp, cJ * cK)

    # group 3: e_{I1} (x) (nabla_{I2} R^TM)_{nabla_{I3} e_i (x) nabla_{I4} e_j}(nabla_{I5} e_J) box eps_K
    for (I1, I2, I3, I4, I5) in iterated_tensor_coproduct(I, 5):
        tJ = ntens(I5)
        if not tJ:
            continue
        vi, vj = nvec(ei, I3), nvec(ej, I4)
        ab = {}
        for (u,), cu in vi.items():
            for (v,), cv in vj.items():
                ab[(u, v)] = ab.get((u, v), 0) + cu * cv
        if not ab:
            continue
        base_end, _ = cd.curvature_endomorphisms(chart, I2, ab, p, mode)
        acted = cd.apply_endomorphism_derivation(base_end, None, tJ, (TU,) * len(J))
        for wJ, cJ in acted.items():
            out.add_term(I1 + wJ, K, cJ)
    return out


def kernel_basis(chart: ChartConnection, p, r: int, k: int, mode=FLOAT):
    """All E_{I,i,j,J,K} with i < j and |I| + |J| + 2 <= r, with their labels."""
    n, d = chart.n, chart.d
    out = []
    from .multialg import all_words
    for I in all_words(n, max(r - 2, 0)):
        for J in all_words(n, max(r - 2 - len(I), 0)):
            if len(I) + len(J) + 2 > r:
                continue
            for i in range(n):
                for j in range(i + 1, n):
                    for K in anti_indices(d, k):
                        el = kernel_element(chart, p, I, i, j, J, K, mode)
                        out.append(((I, i, j, J, K), el))
    return out


def kernel_basis_count(n: int, d: int, r: int, k: int) -> int:
    """dim tensor^{<=r} - dim S^{<=r}, times C(d, k)."""
    tensor_dim = sum(n ** m for m in range(r + 1))
    sym_dim = math.comb(n + r, n)
    return (tensor_dim - sym_dim) * math.comb(d, k)


# ---------------------------------------------------------------------------
# Co-algebra structure on currents.

def coproduct(T: AtomicCurrent):
    """Coproduct dual to wedge product, as a map {(keyL, keyR): coeff}.

    Sorted-word PBW lifts stay sorted under the deshuffle coproducts, so
    re-projection is the identity on coefficients: the whole operation is
    combinatorial and exact in both scalar modes.
    """
    out = {}
    for (I, K), c in T.coeffs.items():
        for (Il, Ir) in tensor_coproduct(I):
            for (Kl, Kr, s) in wedge_coproduct(K):
                key = ((Il, Kl), (Ir, Kr))
                cur = out.get(key, 0) + s * c
                if cur == 0:
                    out.pop(key, None)
                else:
                    out[key] = cur
    return out


def counit(T: AtomicCurrent):
    """epsilon(T) = T(1): the coefficient of the Dirac mass, zero unless k = 0."""
    return T.coeffs.get(((), ()), 0)


def coproduct_pair_evaluate(chart, T: AtomicCurrent, omega: Field, eta: Field,
                            mode=FLOAT):
    """(omega tensor eta)(Delta T), evaluated through PBW functionals."""
    pairs = coproduct(T)
    p = T.point
    total = 0
    for ((Il, Kl), (Ir, Kr)), c in pairs.items():
        if len(Kl) != len(omega.slots) or len(Kr) != len(eta.slots):
            continue
        a = cd.nabla_value(omega, Il, p, mode).get(Kl, 0)
        if a == 0:
            continue
        b = cd.nabla_value(eta, Ir, p, mode).get(Kr, 0)
        if b == 0:
            continue
        total += c * a * b
    return total


# ---------------------------------------------------------------------------
# Module action of scalar functions.

def f_action(f: Field, T: AtomicCurrent, mode=FLOAT) -> AtomicCurrent:
    """f-corner action: (f |_ T)(omega) = T(f omega), via the lift
    f |_ (v box alpha) = (nabla_{v_(1)} f) v_(2) box alpha."""
    if f.slots != ():
        raise ValueError("f_action needs a scalar field")
    p = T.point
    out = AtomicCurrent(p, T.r, T.k)
    for (I, K), c in T.coeffs.items():
        for (A, B) in tensor_coproduct(I):
            fa = cd.nabla_value(f, A, p, mode).get((), 0)
            if fa != 0:
                out.add(B, K, c * fa)
    return out


# ---------------------------------------------------------------------------
# Chart transitions.

def transition_matrix(chartA: ChartConnection, chartB: ChartConnection,
                      change, p, r: int, k: int, mode=FLOAT):
    """PBW transition matrix between tangent-bundle charts at a shared point.

    ``change`` gives the B-coordinates as expressions of the A-coordinates.
    Entry [(I, K)][(J, L)] is the coefficient a^{J,L} with

        a^{J,L} = [ d^{|I|}/dx^I ( (1/J!) (y(x) - y(p))^J  M^L_K(x) ) ]_p,

    where M^L_K is the minor of the Jacobian dy/dx over rows L, columns K.
    Coordinates of a current transform by c_B[(J,L)] = sum c_A[(I,K)] a^{J,L}.
    """
    n = chartA.n
    if chartB.n != n or not (chartA.fiber_is_tangent and chartB.fiber_is_tangent):
        raise ValueError("transition matrices are for tangent-bundle charts of equal dimension")
    p = as_point(p, mode)
    chartA.check_point(p)
    change = [ex.parse(c, chartA.names) if isinstance(c, str) else c for c in change]
    if len(change) != n:
        raise ValueError("chart change needs one expression per coordinate")
    yjets_hi = [ex.eval_jet(c, p, r + 1, mode) for c in change]
    q = tuple(j.value for j in yjets_hi)
    chartB.check_point(q)
    ybar = [j.truncate(r) - j.value for j in yjets_hi]
    jac = [[yjets_hi[l].derivative(m) for m in range(n)] for l in range(n)]

    def jdet(rows):
        if not rows:
            return Jet.const(ybar[0].space, mode, 1) if ybar else 1
        m = len(rows)
        if m == 1:
            return rows[0][0]
        total = None
        for jj in range(m):
            minor = [rr[:jj] + rr[jj + 1:] for rr in rows[1:]]
            term = rows[0][jj] * jdet(minor)
            term = term if jj % 2 == 0 else -term
            total = term if total is None else total + term
        return total

    minors = {}
    for L in anti_indices(n, k):
        for K in anti_indices(n, k):
            rows = [[jac[l][m] for m in K] for l in L]
            minors[(L, K)] = jdet(rows)

    out = {}
    multis = _multi_indices(n, r)
    for g in range(r + 1):
        for T in multis[g]:
            Jw = sorted_word(T)
            fact = 1
            for t in T:
                fact *= math.factorial(t)
            mono = None
            for i, t in enumerate(T):
                for _ in range(t):
                    mono = ybar[i] if mono is None else mono * ybar[i]
            for L in anti_indices(n, k):
                for K in anti_indices(n, k):
                    entry = minors[(L, K)]
                    if mono is not None:
                        entry = mono * entry
                    entry = entry.scale(as_scalar(1, mode) / fact)
                    for Iw in sorted_words(n, r):
                        a = entry.partial(word_multidegree(Iw, n))
                        if a != 0:
                            out.setdefault((Iw, K), {})[(Jw, L)] = a
    return out


def compose_transitions(g2, g1):
    """Matrix of applying g1 then g2 on PBW coordinates."""
    out = {}
    for key0, row in g1.items():
        acc = {}
        for mid, a in row.items():
            row2 = g2.get(mid)
            if row2 is None:
                continue
            for key2, b in row2.items():
                acc[key2] = acc.get(key2, 0) + a * b
        out[key0] = {kk: vv for kk, vv in acc.items() if vv != 0}
    return out


def transition_residual(ga, gb):
    """Max absolute entry difference between two transition matrices."""
    keys = set(ga) | set(gb)
    worst = 0
    for key in keys:
        ra, rb = ga.get(key, {}), gb.get(key, {})
        for kk in set(ra) | set(rb):
            worst = max(worst, abs(ra.get(kk, 0) - rb.get(kk, 0)))
    return worst


# ---------------------------------------------------------------------------
# Exact linear algebra for rank checks.

def exact_rank(rows):
    """Rank of a matrix with Fraction entries, by Gaussian elimination."""
    rows = [list(r) for r in rows]
    rank = 0
    cols = len(rows[0]) if rows else 0
    for c in range(cols):
        piv = None
        for ri in range(rank, len(rows)):
            if rows[ri][c] != 0:
                piv = ri
                break
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pv = rows[rank][c]
        for ri in range(len(rows)):
            if ri != rank and rows[ri][c] != 0:
                f = Fraction(rows[ri][c], 1) / pv
                rows[ri] = [a - f * b for a, b in zip(rows[ri], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank
