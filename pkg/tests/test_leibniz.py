import numpy as np
import pytest

from darbouxlie.associated import (ConjugationSpace, ModuleSpace, default_form, eval_form,
                                   section_map)
from darbouxlie.darboux import context_for, darboux_lie_map
from darbouxlie.errors import KindMismatch, NotEquivariant
from darbouxlie.flows import Chart
from darbouxlie.forms import antisymmetrize, evaluate
from darbouxlie.leibniz import (EquivariantMap, action_map, algebra_action_map, chain_rule, leibniz_otimes,
                                leibniz_times, linear_module_map, mult_section_map, mult_sections,
                                multiplication_map, postcompose, product_map, sum_maps, tensor_map,
                                wedge, wedge_brute_force)
from darbouxlie.lie import adjoint_rep, direct_sum, gl, so3, standard_rep
from darbouxlie.natural import (DIAGONAL_BASE, TANGENT, base_point, ext_power, insert_base,
                                product_point, random_fiber_point, shuffle_split, tangent_point,
                                wedge_point)
from darbouxlie.sampling import (random_form, random_group_section, random_invariant_field,
                                 random_map, random_quadratic)

CHART = Chart.cube(3, 1.0)
SO3 = so3()
V = ModuleSpace(standard_rep(SO3))
A = ModuleSpace(adjoint_rep(SO3))


def rel(a, b):
    a, b = np.ravel(a), np.ravel(b)
    return np.max(np.abs(a - b)) / (1 + np.max(np.abs(b)))


def lie(h, Xt):
    return darboux_lie_map(context_for(h), Xt, h)


def point(rng):
    return rng.uniform(-0.6, 0.6, 3)


def test_wedge_antisymmetric(rng):
    alpha = random_form(CHART, 1, A, rng)
    beta = random_form(CHART, 1, V, rng)
    x, z = point(rng), rng.normal(size=3)
    assert np.max(np.abs(wedge(alpha, beta)(wedge_point(x, z, z)))) <= 1e-13


@pytest.mark.parametrize("k,l", [(1, 1), (1, 2), (2, 1)])
def test_wedge_matches_brute_force(k, l, rng):
    alpha = random_form(CHART, k, A, rng)
    beta = random_form(CHART, l, V, rng)
    x = point(rng)
    vs = [rng.normal(size=3) for _ in range(k + l)]
    got = wedge(alpha, beta)(wedge_point(x, *vs))
    assert rel(got, wedge_brute_force(alpha, beta, x, vs)) <= 1e-12


def test_wedge_needs_adjoint_alpha(rng):
    beta = random_form(CHART, 1, V, rng)
    with pytest.raises(KindMismatch):
        wedge(beta, beta)


def test_identity_section_acts_trivially(rng):
    e = section_map(lambda x: np.eye(3), ConjugationSpace(SO3), "e")
    beta = random_form(CHART, 1, V, rng, source=TANGENT)
    y = random_fiber_point(TANGENT, point(rng), rng)
    assert np.allclose(mult_section_map(e, beta)(y), beta(y), atol=1e-15)
    s = random_group_section(SO3, CHART, rng)
    b = base_point(point(rng))
    assert np.allclose(mult_sections(e, s)(b), s(b), atol=1e-15)


def test_product_projection(rng):
    h1 = random_map(V, TANGENT, CHART, rng)
    const = section_map(lambda x: np.eye(3), ConjugationSpace(SO3))
    y = random_fiber_point(TANGENT, point(rng), rng)
    out = product_map(h1, const)(product_point(y, base_point(y.x)))
    assert np.array_equal(out[0], h1(y))


def test_tensor_map_requires_linear(rng):
    h = random_map(V, TANGENT, CHART, rng)
    nonlinear = section_map(lambda x: x, V)
    with pytest.raises(KindMismatch):
        tensor_map(h, nonlinear)


def test_equivariance_enforced():
    with pytest.raises(NotEquivariant):
        EquivariantMap(V, V, lambda v: v + 1.0)
    with pytest.raises(NotEquivariant):
        linear_module_map(standard_rep(SO3), standard_rep(SO3), np.diag([1.0, 2.0, 3.0]))


def test_standard_phis_are_pullback_factors(rng):
    """phi(z) o omega = f^* omega' checked on random tangent curves."""
    for G in (SO3, gl(2)):
        for f in (action_map(G, standard_rep(G)), multiplication_map(G)):
            z = f.source.random_point(rng)
            coords = G.random_algebra(rng), G.random_algebra(rng)
            if isinstance(f.source.factors[1], ModuleSpace):
                u = rng.normal(size=G.n)
                curve = lambda t: (z[0] @ G.exp(coords[0] * t), z[1] + t * u)  # noqa: E731
                w = np.concatenate([G.vee(coords[0]), u])
            else:
                curve = lambda t: (z[0] @ G.exp(coords[0] * t),  # noqa: E731
                                   z[1] @ G.exp(coords[1] * t))
                w = np.concatenate([G.vee(coords[0]), G.vee(coords[1])])
            tgt = f.target
            direct = eval_form(default_form(tgt), f(z), tgt.curve_derivative(lambda t: f(curve(t))))
            assert rel(f.phi(z, w), direct) <= 1e-8


def test_small_leibniz_checks(rng):
    """A few samples on GL(2); the full ledger runs in the acceptance suite."""
    G = gl(2)
    chart = Chart.cube(2, 1.0)
    W = ModuleSpace(standard_rep(G))
    for _ in range(3):
        Xt = random_invariant_field(G, chart, rng, 0.5)
        x = rng.uniform(-0.5, 0.5, 2)
        s1, s2 = random_group_section(G, chart, rng), random_group_section(G, chart, rng)
        y = base_point(x)
        l1, l2 = lie(s1, Xt)(y), lie(s2, Xt)(y)
        want = G.adjoint_coords(G.inverse(s2(y)), l1) + l2
        assert rel(lie(mult_sections(s1, s2), Xt)(y), want) <= 1e-5
        synth = leibniz_times(s1, s2, lie(s1, Xt), lie(s2, Xt), multiplication_map(G),
                              DIAGONAL_BASE)
        assert rel(synth(y), want) <= 1e-12

        beta = random_form(chart, 1, W, rng, source=TANGENT)
        yt = tangent_point(x, rng.normal(size=2))
        synth = leibniz_times(s1, beta, lie(s1, Xt), lie(beta, Xt), action_map(G, W.rep),
                              insert_base(TANGENT))
        assert rel(lie(mult_section_map(s1, beta), Xt)(yt), synth(yt)) <= 1e-5

        f = linear_module_map(W.rep, direct_sum(W.rep, W.rep), np.vstack([np.eye(2), -np.eye(2)]))
        assert rel(lie(postcompose(f, beta), Xt)(yt), chain_rule(f, beta, lie(beta, Xt))(yt)) \
            <= 1e-5


def test_wedge_leibniz_small(rng):
    Xt = random_invariant_field(SO3, CHART, rng, 0.5)
    alpha = random_form(CHART, 1, A, rng)
    beta = random_form(CHART, 1, V, rng)
    y = random_fiber_point(ext_power(2), point(rng), rng)
    la, lb = lie(alpha, Xt), lie(beta, Xt)
    want = wedge(la, beta)(y) + wedge(alpha, lb)(y)
    assert rel(lie(wedge(alpha, beta), Xt)(y), want) <= 1e-4
    synth = leibniz_otimes(alpha, beta, la, lb, algebra_action_map(SO3, V.rep), shuffle_split(1, 1))
    assert rel(synth(y), want) <= 1e-10


def test_forms_helpers(rng):
    c = antisymmetrize(rng.normal(size=(3, 3, 3)))
    assert np.allclose(c, -np.swapaxes(c, 1, 2))
    assert np.allclose(antisymmetrize(c), c)
    poly = random_quadratic(rng, (3, 3), 3)
    beta = random_form(CHART, 1, V, rng)
    x, v = point(rng), rng.normal(size=3)
    assert np.allclose(evaluate(beta, x, [v]), beta(wedge_point(x, v)))
    assert poly(x).shape == (3, 3)
    total = sum_maps(beta, beta)
    assert np.allclose(total(wedge_point(x, v)), 2 * beta(wedge_point(x, v)))
