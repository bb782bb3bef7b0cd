import numpy as np
import pytest

from darbouxlie import stencil
from darbouxlie.associated import (BundleMap, ConjugationSpace, ModuleSpace, ProductSpace,
                                   Sphere2, act_on_map, ad_section, assoc_divide, check_equivariant,
                                   default_form, eval_form, inverse_map, pullback_form,
                                   section_map, star_omega)
from darbouxlie.errors import NotEquivariant, NotTangent, TargetNotModule
from darbouxlie.lie import adjoint_rep, expm, gl, hat3, so3, standard_rep, tensor_rep
from darbouxlie.natural import base_point
from darbouxlie.principal import PrincipalPoint
from darbouxlie.sampling import star_omega_exact

SO3 = so3()
SPACES = {
    "module-so3": ModuleSpace(standard_rep(SO3)),
    "adjoint-gl2": ModuleSpace(adjoint_rep(gl(2))),
    "tensor-gl2": ModuleSpace(tensor_rep(standard_rep(gl(2)), adjoint_rep(gl(2)))),
    "conj-so3": ConjugationSpace(SO3),
    "conj-gl3": ConjugationSpace(gl(3)),
    "sphere": Sphere2(),
    "product": ProductSpace(Sphere2(), ModuleSpace(standard_rep(SO3))),
}


def random_tangent(space, y, rng):
    def ambient(z):
        if isinstance(z, tuple):
            return tuple(ambient(c) for c in z)
        return rng.normal(size=np.shape(z))
    return space.project_tangent(y, ambient(y))[0]


def close(a, b, tol):
    a, b = stencil.tree_flatten(a), stencil.tree_flatten(b)
    return np.max(np.abs(a - b)) <= tol * (1 + np.max(np.abs(b)))


@pytest.mark.parametrize("name", SPACES)
def test_action_axioms(name, rng):
    space = SPACES[name]
    G = space.group
    for _ in range(100):
        g, h = G.random_element(rng), G.random_element(rng)
        y = space.random_point(rng)
        assert close(space.act(G.identity, y), y, 1e-12)
        assert close(space.act(g @ h, y), space.act(g, space.act(h, y)), 1e-9)
        assert space.contains(space.act(g, y), 1e-9)


def test_sphere_membership_preserved(rng):
    S = Sphere2()
    for _ in range(100):
        z = S.act(SO3.random_element(rng, 3.0), S.random_point(rng))
        assert abs(np.linalg.norm(z) - 1) <= 1e-12


@pytest.mark.parametrize("name", SPACES)
def test_forms_equivariant(name, rng):
    space = SPACES[name]
    omega = default_form(space)
    G = space.group
    for _ in range(10):
        g = G.random_element(rng)
        y = space.random_point(rng)
        Y = random_tangent(space, y, rng)
        curve = space.curve(y, Y)
        moved = space.curve_derivative(lambda s: space.act(g, curve(s)))
        lhs = eval_form(omega, space.act(g, y), moved)
        rhs = omega.module.apply(g, eval_form(omega, y, Y))
        assert close(lhs, rhs, 1e-7)


def test_conjugation_action_and_tangents(rng):
    C = ConjugationSpace(SO3)
    g, h = SO3.random_element(rng), SO3.random_element(rng)
    assert np.allclose(C.act(g, h), g @ h @ g.T)
    with pytest.raises(NotTangent):
        eval_form(default_form(C), h, np.eye(3))


def test_assoc_divide(rng):
    S = Sphere2()
    x = rng.uniform(-1, 1, 3)
    y = S.random_point(rng)
    assert np.allclose(assoc_divide(S, PrincipalPoint(x, np.eye(3)), (x, y)), y)
    g = SO3.random_element(rng)
    assert np.allclose(assoc_divide(S, PrincipalPoint(x, g), (x, y)), g.T @ y, atol=1e-15)


def test_eval_form_examples(rng):
    V = SPACES["module-so3"]
    v, w = rng.normal(size=3), rng.normal(size=3)
    assert np.allclose(eval_form(default_form(V), v, V.curve_derivative(lambda t: v + t * w)), w)
    C = SPACES["conj-so3"]
    g, a = SO3.random_element(rng), SO3.random_algebra(rng)
    got = eval_form(default_form(C), g, C.curve_derivative(lambda t: g @ expm(a * t)))
    assert np.max(np.abs(got - SO3.vee(a))) <= 1e-9
    P = SPACES["product"]
    y = P.random_point(rng)
    Y = random_tangent(P, y, rng)
    w1, w2 = default_form(P.factors[0]), default_form(P.factors[1])
    assert np.allclose(eval_form(default_form(P), y, Y),
                       np.concatenate([w1(y[0], Y[0]), w2(y[1], Y[1])]))


def test_act_on_map(rng):
    V = SPACES["module-so3"]
    h = section_map(lambda x: np.array([x[0], 1.0, x[1] * x[2]]), V, "h")
    y = base_point(rng.uniform(-1, 1, 3))
    assert np.allclose(act_on_map(lambda x: np.zeros(3), h)(y), 0)
    u = rng.normal(size=3)
    assert np.allclose(act_on_map(lambda x: u, h)(y), np.cross(u, h(y)))
    with pytest.raises(TargetNotModule):
        act_on_map(lambda x: u, section_map(lambda x: np.eye(3), SPACES["conj-so3"]))


def test_act_on_map_frame_covariance(rng):
    """Changing frame p -> p g turns a . h into g^-1 (a . h)."""
    V = SPACES["module-so3"]
    g = SO3.random_element(rng)
    u, v = rng.normal(size=3), rng.normal(size=3)
    in_frame = np.cross(g.T @ u, g.T @ v)
    assert np.max(np.abs(in_frame - g.T @ np.cross(u, v))) <= 1e-9
    h = section_map(lambda x: v, V)
    assert np.allclose(g.T @ act_on_map(lambda x: u, h)(base_point(np.zeros(3))), in_frame)


def test_ad_section_and_inverse(rng):
    C = SPACES["conj-so3"]
    y = base_point(rng.uniform(-1, 1, 3))
    u = rng.normal(size=3)
    e = section_map(lambda x: np.eye(3), C)
    assert np.allclose(ad_section(e, lambda x: u)(y), u)
    R = SO3.random_element(rng)
    h = section_map(lambda x: R, C)
    assert np.allclose(hat3(ad_section(h, lambda x: u)(y)), hat3(R @ u), atol=1e-14)
    assert np.max(np.abs(inverse_map(inverse_map(h))(y) - R)) <= 1e-12


def test_star_omega(rng):
    S = Sphere2()
    z = S.random_point(rng)
    b = SO3.random_algebra(rng)
    omega = default_form(S)
    assert np.allclose(star_omega(np.zeros((3, 3)), z, omega), 0)
    assert np.max(np.abs(star_omega(b, z, omega) - b @ z)) <= 1e-9
    V = SPACES["tensor-gl2"]
    b = gl(2).random_algebra(rng)
    v = V.random_point(rng)
    want = V.infinitesimal(b, v)
    assert close(star_omega(b, v, default_form(V)), want, 1e-8)
    assert close(star_omega_exact(b, v, default_form(V)), want, 1e-14)


def test_pullback_and_equivariance_check(rng):
    S = Sphere2()
    V = ModuleSpace(standard_rep(SO3))
    # inclusion S^2 -> R^3 pulls the canonical form back to the ambient form
    pulled = pullback_form(lambda z: np.asarray(z, dtype=float), S, default_form(V))
    z = S.random_point(rng)
    Z = random_tangent(S, z, rng)
    assert np.allclose(pulled(z, Z), Z, atol=1e-10)
    check_equivariant(lambda z: 2.0 * z, V, V, rng)
    with pytest.raises(NotEquivariant):
        check_equivariant(lambda z: z + np.array([1.0, 0, 0]), V, V, rng)


def test_bundle_map_kind_check(rng):
    from darbouxlie.errors import KindMismatch
    from darbouxlie.natural import tangent_point
    h = BundleMap(base_point(np.zeros(3)).kind, SPACES["module-so3"], lambda y: y.x)
    with pytest.raises(KindMismatch):
        h(tangent_point(np.zeros(3), np.ones(3)))
