import numpy as np
import pytest
import scipy.linalg

from darbouxlie.errors import DifferentFibers
from darbouxlie.flows import Chart, FlowConfig, constant_field, flow
from darbouxlie.lie import gl, so3, translation
from darbouxlie.principal import (InvariantVectorField, PrincipalPoint, decompose, divide,
                                  flat_connection, flow_invariant, horizontal_lift,
                                  section_from_vertical, vertical_from_section)
from darbouxlie.sampling import (random_connection, random_field, random_invariant_field,
                                 random_vertical_coords)

CHART = Chart.cube(3, 2.0)
GROUPS = [so3(), gl(3), gl(2), translation(2)]


def test_divide_examples(rng):
    G = so3()
    x = rng.uniform(-1, 1, 3)
    p = PrincipalPoint(x, G.random_element(rng))
    assert np.allclose(divide(p, p, G), np.eye(3), atol=1e-15)
    p1 = PrincipalPoint([0.1, 0.2], [[2.0, 0.0], [0.0, 1.0]])
    p2 = PrincipalPoint([0.1, 0.2], [[2.0, 2.0], [0.0, 1.0]])
    assert np.allclose(divide(p1, p2), [[1.0, 1.0], [0.0, 1.0]], atol=1e-15)
    with pytest.raises(DifferentFibers):
        divide(p1, PrincipalPoint([0.1, 0.3], np.eye(2)))


@pytest.mark.parametrize("group", GROUPS, ids=lambda g: g.name)
def test_division_identities(group, rng):
    for _ in range(100):
        x = rng.uniform(-1, 1, 3)
        p, q = (PrincipalPoint(x, group.random_element(rng)) for _ in range(2))
        g = group.random_element(rng)
        d = divide(p, q, group)
        assert np.max(np.abs(divide(p.act(g), q, group) - group.inverse(g) @ d)) <= 1e-12
        assert np.max(np.abs(divide(p, q.act(g), group) - d @ g)) <= 1e-12
        assert np.max(np.abs(divide(q, p, group) - group.inverse(d))) <= 1e-12


def test_vertical_field_examples(rng):
    G = so3()
    zero = vertical_from_section(G, CHART, lambda x: np.zeros(np.shape(x)[:-1] + (3,)))
    x = rng.uniform(-1, 1, 3)
    p = flow_invariant(zero, PrincipalPoint(x, np.eye(3)), 0.4)
    assert np.allclose(p.x, x) and np.allclose(p.g, np.eye(3))

    a = random_vertical_coords(G, CHART, rng)
    Xa = vertical_from_section(G, CHART, a)
    t = 0.3
    p = flow_invariant(Xa, PrincipalPoint(x, np.eye(3)), t, FlowConfig(rk4_steps=64))
    assert np.allclose(p.x, x, atol=1e-15)
    assert np.max(np.abs(p.g - scipy.linalg.expm(G.hat(a(x)) * t))) <= 1e-9
    assert np.max(np.abs(section_from_vertical(Xa, x) - a(x))) <= 1e-8


def test_flow_invariant_base_and_linear_cases(rng):
    G = gl(2)
    chart = Chart.cube(2, 2.0)
    X = random_field(chart, rng, 0.3)
    x = rng.uniform(-1, 1, 2)
    p = flow_invariant(InvariantVectorField(G, X), PrincipalPoint(x, np.eye(2)), 0.2)
    assert np.allclose(p.x, flow(X, x, 0.2), atol=1e-15) and np.allclose(p.g, np.eye(2))

    A = G.random_algebra(rng)
    g0 = G.random_element(rng)
    const = InvariantVectorField(G, constant_field(chart, np.zeros(2)), lambda y: A)
    p = flow_invariant(const, PrincipalPoint(x, g0), 0.5)
    assert np.max(np.abs(p.g - scipy.linalg.expm(A * 0.5) @ g0)) <= 1e-9


@pytest.mark.parametrize("group", GROUPS, ids=lambda g: g.name)
def test_flow_equivariance_and_projection(group, rng):
    Xt = random_invariant_field(group, CHART, rng, 0.4)
    x = rng.uniform(-1, 1, 3)
    g, h = group.random_element(rng), group.random_element(rng)
    end = flow_invariant(Xt, PrincipalPoint(x, g @ h), 0.2)
    ref = flow_invariant(Xt, PrincipalPoint(x, g), 0.2)
    assert np.max(np.abs(end.g - ref.g @ h)) <= 1e-9
    assert np.max(np.abs(end.x - flow(Xt.base, x, 0.2))) <= 1e-10


def test_horizontal_lift_properties(rng):
    G = so3()
    X = random_field(CHART, rng, 0.4)
    flat = horizontal_lift(flat_connection(CHART, G), X)
    x = rng.uniform(-1, 1, 3)
    assert np.array_equal(flat.vertical_at(x), np.zeros((3, 3)))

    conn = random_connection(CHART, G, rng)
    XH = horizontal_lift(conn, X)
    cfg = FlowConfig(rk4_steps=64)
    p = PrincipalPoint(x, G.random_element(rng))
    for t in (0.05, 0.1):
        q = flow_invariant(XH, p, t, cfg)
        v, gdot = XH.at(q)
        assert np.max(np.abs(conn.on_P(q, v, gdot))) <= 1e-10

    other = random_connection(CHART, G, rng)
    a = lambda y: G.vee(other.gamma(y, X(y)) - conn.gamma(y, X(y)))  # noqa: E731
    diff = XH - horizontal_lift(other, X)
    assert np.max(np.abs(diff.vertical_at(x) - G.hat(a(x)))) <= 1e-12
    assert np.max(np.abs(diff.base(x))) == 0.0


@pytest.mark.parametrize("group", GROUPS, ids=lambda g: g.name)
def test_decomposition(group, rng):
    Xt = random_invariant_field(group, CHART, rng, 0.4)
    conn = random_connection(CHART, group, rng)
    a = decompose(Xt, conn)
    rebuilt = horizontal_lift(conn, Xt.base) + vertical_from_section(group, CHART, a)
    for _ in range(5):
        x = rng.uniform(-1, 1, 3)
        assert np.max(np.abs(rebuilt.vertical_at(x) - Xt.vertical_at(x))) <= 1e-9
