import itertools
import random
from fractions import Fraction

import pytest

from atomcur import covderiv as cd
from atomcur import expr as ex
from atomcur.jets import RATIONAL
from atomcur.multialg import tensor_coproduct


def test_flat_scalar_is_plain_partial(flat2):
    f = cd.scalar_field(flat2, "x0^2*x1 + x1^3")
    p = (0.5, 0.25)
    got = cd.nabla_value(f, (0, 1), p).get((), 0)
    want = ex.eval_jet(f.comps[()], p, 2).partial((1, 1))
    assert abs(got - want) < 1e-14


def test_monomial_lemma_exact(poly2, poly2_point):
    """nabla_{e_S}((e-p)^T/T! alpha) at p equals delta_{<S>,T} alpha(p)."""
    p = poly2_point
    alpha = cd.vector_field(poly2, {0: "1 + x*y", 1: "x - y^2"})
    aval = alpha.value(p, RATIONAL)
    for T in [(0, 0), (1, 0), (1, 1), (2, 0), (2, 1)]:
        mono = ex.monomial_form(p, T, poly2.names)
        fld = cd.Field(poly2, (cd.TU,),
                       {idx: ex.ex_mul(mono, c) for idx, c in alpha.comps.items()})
        for slen in range(sum(T) + 1):
            for S in itertools.product(range(2), repeat=slen):
                got = cd.nabla_value(fld, S, p, RATIONAL)
                count = (S.count(0), S.count(1))
                want = aval if count == T else {}
                keys = set(got) | set(want)
                assert all(got.get(k, 0) == want.get(k, 0) for k in keys), (T, S)


def test_third_order_expansion_identity(s2):
    """nabla^3_{X,Y,Z} = nabla_X o nabla^2_{Y,Z} - nabla^2_{hat X Y, Z}
    - nabla^2_{Y, hat X Z} as an operator identity on random fields."""
    rng = random.Random(7)
    p = (1.2, 0.9)
    for _ in range(6):
        om = cd.form_field(s2, 1, {(0,): f"{rng.randint(-2,2)}*theta^2 + phi",
                                   (1,): f"theta*phi + {rng.randint(-2,2)}"})
        i, j, k = (rng.randrange(2) for _ in range(3))
        lhs = cd.nabla_value(om, (i, j, k), p)
        inner = cd.nabla_word_jets(om, (j, k), p, 1, "float")
        inner_field = cd.jet_field(s2, om.slots, inner, p, 1, "float")
        rhs = dict(cd.nabla_value(inner_field, (i,), p))
        for l in range(2):
            gam = s2.higher_gamma((i,), j, p)[l]
            if gam:
                for idx, c in cd.nabla_value(om, (l, k), p).items():
                    rhs[idx] = rhs.get(idx, 0) - gam * c
            gam = s2.higher_gamma((i,), k, p)[l]
            if gam:
                for idx, c in cd.nabla_value(om, (j, l), p).items():
                    rhs[idx] = rhs.get(idx, 0) - gam * c
        keys = set(lhs) | set(rhs)
        assert max(abs(lhs.get(kk, 0) - rhs.get(kk, 0)) for kk in keys) < 1e-8


def test_compose_check_flat_exact(flat2):
    om = cd.form_field(flat2, 1, {(0,): "x0*x1", (1,): "x1^2"})
    p = (Fraction(1, 2), Fraction(1, 3))
    assert cd.nabla_compose_check((0, 1), (1,), om, p, RATIONAL) == 0
    # empty w reduces to the identity composition
    assert cd.nabla_compose_check((0,), (), om, p, RATIONAL) == 0


def test_compose_check_curved(s2, hyperbolic):
    rng = random.Random(13)
    for chart, p in [(s2, (1.1, 0.8)), (hyperbolic, (0.4, 1.3))]:
        om = cd.form_field(chart, 1,
                           {(0,): f"{chart.names[0]}^2", (1,): f"{chart.names[1]}"})
        for _ in range(8):
            v = tuple(rng.randrange(2) for _ in range(rng.randint(1, 2)))
            w = tuple(rng.randrange(2) for _ in range(rng.randint(1, 2)))
            assert cd.nabla_compose_check(v, w, om, p) < 1e-7


def test_fundamental_commutation(flat2, s2, hyperbolic):
    om = cd.form_field(flat2, 1, {(0,): "x0^2*x1", (1,): "x1^3"})
    p = (Fraction(1, 4), Fraction(-1, 2))
    assert cd.fundamental_commutation_check((), (), 0, 1, om, p, RATIONAL) == 0
    assert cd.fundamental_commutation_check((0,), (1,), 0, 1, om, p, RATIONAL) == 0
    rng = random.Random(23)
    for chart, p in [(s2, (1.3, 1.1)), (hyperbolic, (-0.2, 0.9))]:
        om = cd.form_field(chart, 1,
                           {(0,): f"{chart.names[0]}*{chart.names[1]}", (1,): "1"})
        for _ in range(6):
            u = tuple(rng.randrange(2) for _ in range(rng.randint(0, 1)))
            v = tuple(rng.randrange(2) for _ in range(rng.randint(0, 1)))
            assert cd.fundamental_commutation_check(u, v, 0, 1, om, p) < 1e-7


def test_zero_order_commutator_is_curvature(s2):
    """|u| = 0 case: nabla^2 commutator = R^E o nabla_v - nabla_{R^TM v}."""
    p = (1.5, 2.3)
    om = cd.form_field(s2, 1, {(0,): "theta^2*phi", (1,): "phi^2"})
    a, b = 0, 1
    v = (0,)
    lhs = {}
    for word, sgn in [((a, b) + v, 1), ((b, a) + v, -1)]:
        for idx, c in cd.nabla_value(om, word, p).items():
            lhs[idx] = lhs.get(idx, 0) + sgn * c
    base_end, fiber_end = cd.curvature_endomorphisms(s2, (), {(a, b): 1}, p)
    inner = cd.nabla_value(om, v, p)
    rhs = cd.apply_endomorphism_derivation(base_end, fiber_end, inner, om.slots)
    rv = cd.apply_endomorphism_derivation(base_end, None, {v: 1}, (cd.TU,))
    for word, c in rv.items():
        for idx, c2 in cd.nabla_value(om, word, p).items():
            rhs[idx] = rhs.get(idx, 0) - c * c2
    keys = set(lhs) | set(rhs)
    assert max(abs(lhs.get(kk, 0) - rhs.get(kk, 0)) for kk in keys) < 1e-8


def test_covariant_product_bracket(s2):
    rng = random.Random(3)
    p = (1.1, 0.8)
    V = cd.vector_field(s2, {0: "phi", 1: "theta^2"})
    W = cd.vector_field(s2, {0: "theta*phi", 1: "1 + phi"})
    vw = cd.covariant_product_value(V, W, p)
    wv = cd.covariant_product_value(W, V, p)
    lhs = dict(vw)
    for kk, c in wv.items():
        lhs[kk] = lhs.get(kk, 0) - c
    Vv, Wv = V.value(p, "float"), W.value(p, "float")
    rhs = {}
    for (i,), a in Vv.items():
        for (j,), b in Wv.items():
            rhs[(i, j)] = rhs.get((i, j), 0) + a * b
            rhs[(j, i)] = rhs.get((j, i), 0) - a * b
    for kk in range(2):
        acc = 0.0
        for i in range(2):
            ei = tuple(1 if t == i else 0 for t in range(2))
            acc += Vv[(i,)] * ex.eval_jet(W.comps[(kk,)], p, 1).partial(ei)
            acc -= Wv[(i,)] * ex.eval_jet(V.comps[(kk,)], p, 1).partial(ei)
        rhs[(kk,)] = rhs.get((kk,), 0) + acc
    keys = set(lhs) | set(rhs)
    assert max(abs(lhs.get(kk, 0) - rhs.get(kk, 0)) for kk in keys) < 1e-9


def test_covariant_product_unit_and_assoc(s2):
    p = (1.4, 1.9)
    one = cd.tensor_field(s2, 0, {(): 1})
    W = cd.vector_field(s2, {0: "theta", 1: "phi^2"})
    Wv = W.value(p, "float")
    oy = cd.covariant_product_value(one, W, p)
    assert all(abs(oy[kk] - Wv[kk]) < 1e-13 for kk in Wv)
    X = cd.vector_field(s2, {0: "1", 1: "theta"})
    V = cd.vector_field(s2, {0: "phi", 1: "1"})
    xy = cd.covariant_product(X, V, p, "float", out_order=2)
    l = cd.covariant_product(cd.mixed_tensor_fields(s2, xy, p, 2, "float"), W, p, "float", 0)
    yz = cd.covariant_product(V, W, p, "float", out_order=1)
    r = cd.covariant_product(X, cd.mixed_tensor_fields(s2, yz, p, 1, "float"), p, "float", 0)
    lv = {kk: j.value for kk, j in l.items()}
    rv = {kk: j.value for kk, j in r.items()}
    keys = set(lv) | set(rv)
    assert max(abs(lv.get(kk, 0) - rv.get(kk, 0)) for kk in keys) < 1e-7


def test_exterior_derivative_flat_example(flat2):
    # omega = x dy on flat R^2: d omega = dx ^ dy
    om = cd.form_field(flat2, 1, {(1,): "x0"})
    d = cd.exterior_derivative(om, (0.3, 0.7), "float", 0)
    assert abs(d.comps[(0, 1)].value - 1.0) < 1e-14
    assert abs(d.comps[(1, 0)].value + 1.0) < 1e-14


def test_exterior_derivative_d_squared(s2):
    f = cd.scalar_field(s2, "theta^2*phi")
    df = cd.form_field(s2, 1, {(i,): ex.partial_derivative(f.comps[()], i)
                               for i in range(2)})
    p = (1.6, 3.0)
    ddf = cd.exterior_derivative(df, p, "float", 0)
    assert max((abs(j.value) for j in ddf.comps.values()), default=0) < 1e-9


def test_exterior_derivative_connection_independent(s2):
    from atomcur.suites import _perturbed_chart
    p = (1.2, 2.8)
    om = cd.form_field(s2, 1, {(0,): "phi^2", (1,): "theta"})
    pert = _perturbed_chart(s2)
    om2 = cd.form_field(pert, 1, {(0,): "phi^2", (1,): "theta"})
    d1 = cd.exterior_derivative(om, p, "float", 0)
    d2 = cd.exterior_derivative(om2, p, "float", 0)
    for idx in set(d1.comps) | set(d2.comps):
        a = d1.comps.get(idx)
        b = d2.comps.get(idx)
        assert abs((a.value if a else 0) - (b.value if b else 0)) < 1e-8


def test_leibniz_rule(s2):
    rng = random.Random(31)
    p = (1.0, 1.5)
    a = cd.vector_field(s2, {0: "phi", 1: "theta"})
    b = cd.vector_field(s2, {0: "1", 1: "theta*phi"})
    prod = cd.product_field(a, b)
    for v in [(0,), (0, 1), (1, 0, 1)]:
        lhs = cd.nabla_value(prod, v, p)
        rhs = {}
        for (v1, v2) in tensor_coproduct(v):
            av = cd.nabla_value(a, v1, p)
            bv = cd.nabla_value(b, v2, p)
            for ia, ca in av.items():
                for ib, cb in bv.items():
                    rhs[ia + ib] = rhs.get(ia + ib, 0) + ca * cb
        keys = set(lhs) | set(rhs)
        assert max(abs(lhs.get(kk, 0) - rhs.get(kk, 0)) for kk in keys) < 1e-8


def test_tensoriality_in_word_slots(s2):
    """Scaling a word slot scales the value linearly: the derivative with a
    non-coordinate slot argument is the coefficient combination of frame
    derivatives."""
    p = (1.2, 1.7)
    om = cd.form_field(s2, 1, {(0,): "theta*phi", (1,): "phi^2"})
    z = {(0,): 2.5, (1,): -1.25}
    got = cd.nabla_mixed(om, (1,), z, p)
    want = {}
    for (i,), c in z.items():
        for idx, v in cd.nabla_value(om, (1, i), p).items():
            want[idx] = want.get(idx, 0) + c * v
    keys = set(got) | set(want)
    assert max(abs(got.get(kk, 0) - want.get(kk, 0)) for kk in keys) < 1e-12


def test_curvature_with_derivative_orders(s2, flat2, poly2, poly2_point):
    from atomcur.connection import curvature
    # the round sphere is locally symmetric: nabla R vanishes identically
    cv = curvature(s2, (1.1, 0.8), nabla_order=1)
    assert all(abs(v) < 1e-12 for v in cv.nabla_base[(0,)].values())
    # a generic polynomial metric has nonvanishing nabla R
    cvp = curvature(poly2, poly2_point, RATIONAL, nabla_order=2)
    assert ((0,) in cvp.nabla_base) and ((0, 1) in cvp.nabla_fiber)
    assert any(v != 0 for v in cvp.nabla_base[(0,)].values())
    cvf = curvature(flat2, (0.2, 0.3), nabla_order=2)
    for S, comps in cvf.nabla_base.items():
        assert all(v == 0 for v in comps.values())


def test_warning_case_nonzero(s2):
    """The order-3 scalar commutator equals minus the curvature contraction
    and is nonzero somewhere on the sphere."""
    from atomcur.connection import curvature
    p = (1.1, 0.8)
    cv = curvature(s2, p)
    f = cd.scalar_field(s2, "theta^2*phi + phi^2")
    saw_nonzero = False
    for (i, j, k) in itertools.product(range(2), repeat=3):
        lhs = cd.nabla_value(f, (i, j, k), p).get((), 0) \
            - cd.nabla_value(f, (j, i, k), p).get((), 0)
        rhs = -sum(cv.base[(l, k, i, j)] * cd.nabla_value(f, (l,), p).get((), 0)
                   for l in range(2))
        assert abs(lhs - rhs) < 1e-8
        if abs(lhs) > 1e-6:
            saw_nonzero = True
    assert saw_nonzero
