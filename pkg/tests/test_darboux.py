import numpy as np
import pytest

from darbouxlie.associated import (BundleMap, ConjugationSpace, ModuleSpace, ProductSpace,
                                   Sphere2, section_map)
from darbouxlie.darboux import (DarbouxContext, context_for, darboux_lie, darboux_lie_direct,
                                darboux_lie_vertical_closed, trautman_lift, trautman_lift_direct)
from darbouxlie.errors import KindMismatch
from darbouxlie.flows import Chart, FlowConfig
from darbouxlie.lie import gl, so3, standard_rep, translation, trivial_rep
from darbouxlie.natural import BASE, TANGENT, base_point, ext_power, random_fiber_point
from darbouxlie.principal import InvariantVectorField, vertical_from_section
from darbouxlie.sampling import (poly_field, random_field, random_group_section,
                                 random_invariant_field, random_map, random_module_section,
                                 random_quadratic, random_vertical_coords, star_omega_exact)

CHART = Chart.cube(3, 1.0)
BIG = Chart.cube(3, 10.0)
SO3 = so3()


def rel(a, b):
    a, b = np.ravel(a), np.ravel(b)
    return np.max(np.abs(a - b)) / (1 + np.max(np.abs(b)))


def point(rng):
    return rng.uniform(-0.6, 0.6, 3)


def test_trautman_identity_is_zero(rng):
    X = poly_field(BIG, random_quadratic(rng, (3,), 3, 0.5))
    x = point(rng)
    assert np.max(np.abs(trautman_lift(lambda z: z, X, X, x))) <= 1e-9


def test_trautman_two_formulas(rng):
    for _ in range(5):
        h = random_quadratic(rng, (3,), 3, 0.3)
        X1, X2 = (poly_field(BIG, random_quadratic(rng, (3,), 3, 0.5)) for _ in range(2))
        x = point(rng)
        assert rel(trautman_lift(h, X1, X2, x), trautman_lift_direct(h, X1, X2, x)) <= 1e-5


def test_trautman_composition(rng):
    h1, h2 = (random_quadratic(rng, (3,), 3, 0.3) for _ in range(2))
    X1, X2, X3 = (poly_field(BIG, random_quadratic(rng, (3,), 3, 0.5)) for _ in range(3))
    x = point(rng)
    lhs = trautman_lift(lambda z: h2(h1(z)), X1, X3, x)
    rhs = h2.derivative(h1(x)) @ trautman_lift(h1, X1, X2, x) + trautman_lift(h2, X2, X3, h1(x))
    assert rel(lhs, rhs) <= 1e-5


def test_trivial_group_is_directional_derivative(rng):
    T0 = translation(0)
    s = random_quadratic(rng, (2,), 3, 1.0)
    h = section_map(s, ModuleSpace(trivial_rep(T0, 2)), "s")
    X = random_field(CHART, rng, 0.5)
    x = point(rng)
    got = darboux_lie(context_for(h), InvariantVectorField(T0, X), h, base_point(x))
    assert rel(got, s.derivative(x) @ X(x)) <= 1e-8


def test_constant_map_zero_vertical(rng):
    V = ModuleSpace(standard_rep(SO3))
    v = rng.normal(size=3)
    h = BundleMap(TANGENT, V, lambda y: v)
    Xt = InvariantVectorField(SO3, random_field(CHART, rng, 0.5))
    y = random_fiber_point(TANGENT, point(rng), rng)
    assert np.max(np.abs(darboux_lie(context_for(h), Xt, h, y))) <= 1e-10


@pytest.mark.parametrize("target", ["module", "conjugation", "sphere", "product"])
def test_flow_matches_direct(target, rng):
    V = ModuleSpace(standard_rep(SO3))
    space = {"module": V, "conjugation": ConjugationSpace(SO3), "sphere": Sphere2(SO3),
             "product": ProductSpace(Sphere2(SO3), V)}[target]
    for F in (BASE, TANGENT, ext_power(2)):
        Xt = random_invariant_field(SO3, CHART, rng, 0.5)
        h = random_map(space, F, CHART, rng)
        y = random_fiber_point(F, point(rng), rng)
        ctx = DarbouxContext(SO3, F, space)
        assert rel(darboux_lie(ctx, Xt, h, y), darboux_lie_direct(ctx, Xt, h, y)) <= 1e-5


def test_frame_independence(rng):
    for space in (ModuleSpace(standard_rep(gl(3))), ConjugationSpace(gl(3))):
        G = space.group
        Xt = random_invariant_field(G, CHART, rng, 0.5)
        h = random_map(space, TANGENT, CHART, rng)
        y = random_fiber_point(TANGENT, point(rng), rng)
        ctx = DarbouxContext(G, TANGENT, space)
        g = G.random_element(rng)
        moved = ctx.omega.module.apply(g, darboux_lie(ctx, Xt, h, y, frame=g))
        assert rel(moved, darboux_lie(ctx, Xt, h, y)) <= 1e-7


def test_vertical_closed_trivial_cases(rng):
    V = ModuleSpace(standard_rep(SO3))
    h = random_module_section(V, CHART, rng)
    y = base_point(point(rng))
    zero = darboux_lie_vertical_closed(lambda x: np.zeros(3), h, "module")
    assert np.max(np.abs(zero(y))) == 0.0
    e = section_map(lambda x: np.eye(3), ConjugationSpace(SO3))
    u = lambda x: np.array([0.3, -1.0, 2.0])  # noqa: E731
    assert np.max(np.abs(darboux_lie_vertical_closed(u, e, "conjugation")(y))) <= 1e-15
    with pytest.raises(KindMismatch):
        darboux_lie_vertical_closed(u, e, "module")


def test_vertical_module_cross_product(rng):
    V = ModuleSpace(standard_rep(SO3))
    for _ in range(5):
        a = random_vertical_coords(SO3, CHART, rng)
        h = random_module_section(V, CHART, rng)
        x = point(rng)
        got = darboux_lie(context_for(h), vertical_from_section(SO3, CHART, a), h, base_point(x))
        assert rel(got, -np.cross(a(x), h(base_point(x)))) <= 1e-5


@pytest.mark.parametrize("group", [so3(), gl(2)], ids=lambda g: g.name)
def test_vertical_conjugation(group, rng):
    chart = Chart.cube(3, 1.0)
    for _ in range(5):
        a = random_vertical_coords(group, chart, rng)
        h = random_group_section(group, chart, rng)
        y = base_point(point(rng))
        got = darboux_lie(context_for(h), vertical_from_section(group, chart, a), h, y)
        assert rel(got, darboux_lie_vertical_closed(a, h, "conjugation")(y)) <= 1e-5


def test_vertical_generic_sphere(rng):
    S = Sphere2(SO3)
    for _ in range(5):
        a = random_vertical_coords(SO3, CHART, rng)
        h = random_map(S, BASE, CHART, rng)
        y = base_point(point(rng))
        ctx = context_for(h)
        got = darboux_lie(ctx, vertical_from_section(SO3, CHART, a), h, y)
        closed = darboux_lie_vertical_closed(a, h, "generic")(y)
        assert rel(got, closed) <= 1e-5
        assert rel(got, -star_omega_exact(SO3.hat(a(y.x)), h(y), ctx.omega)) <= 1e-5


def test_linearity_in_field(rng):
    V = ModuleSpace(standard_rep(SO3))
    X1, X2 = (random_invariant_field(SO3, CHART, rng, 0.5) for _ in range(2))
    h = random_map(V, TANGENT, CHART, rng)
    y = random_fiber_point(TANGENT, point(rng), rng)
    ctx = DarbouxContext(SO3, TANGENT, V)
    c1, c2 = 0.7, -1.3
    lhs = darboux_lie(ctx, c1 * X1 + c2 * X2, h, y)
    rhs = c1 * darboux_lie(ctx, X1, h, y) + c2 * darboux_lie(ctx, X2, h, y)
    assert rel(lhs, rhs) <= 1e-5


def test_context_checks(rng):
    V = ModuleSpace(standard_rep(SO3))
    h = random_map(V, TANGENT, CHART, rng)
    ctx = DarbouxContext(SO3, BASE, V)
    Xt = random_invariant_field(SO3, CHART, rng)
    with pytest.raises(KindMismatch):
        darboux_lie(ctx, Xt, h, random_fiber_point(TANGENT, point(rng), rng))
    with pytest.raises(KindMismatch):
        DarbouxContext(SO3, BASE, V, omega=context_for(random_group_section(SO3, CHART, rng)).omega)
    assert ctx.with_cfg(fd_eps=2e-3).cfg == FlowConfig(fd_eps=2e-3)
