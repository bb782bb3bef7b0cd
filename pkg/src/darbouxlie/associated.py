"""G-spaces, equivariant forms and maps into associated bundles.

Everything is stored in the identity frame ``p = (x, e)`` of the trivial
bundle: a point ``[(x, e), y]`` of ``P x_G N`` is represented by ``y``, a map
``h: F(M) -> P x_G N`` by ``y -> p \\ h(y)``.  Tangent vectors of ``N`` are
ambient representatives (arrays, or tuples of arrays on products).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import stencil
from .errors import DifferentFibers, KindMismatch, NotEquivariant, NotTangent, TargetNotModule
from .lie import (MatrixLieGroup, Representation, adjoint_rep, algebra_action_matrix,
                  direct_sum, expm, same_group, so3, standard_rep)
from .natural import BASE, FiberPoint, NaturalBundleKind
from .principal import FIBER_TOL, PrincipalPoint

TANGENT_TOL = 1e-6


class GSpace:
    """A manifold ``N`` embedded in an ambient space with a left G-action."""

    kind = "abstract"
    group: MatrixLieGroup

    def contains(self, y, tol=1e-9):
        raise NotImplementedError

    def act(self, g, y):
        raise NotImplementedError

    def infinitesimal(self, a, y):
        """``d/dt|0 exp(a t) y`` for an algebra matrix ``a``."""
        raise NotImplementedError

    def project_tangent(self, y, Y):
        """Closest tangent vector at ``y`` and the size of the removed part."""
        raise NotImplementedError

    def curve(self, y, Y):
        """A curve ``s -> N`` through ``y`` with velocity ``Y``."""
        raise NotImplementedError

    def random_point(self, rng, scale=1.0):
        raise NotImplementedError

    def tangent_from_samples(self, y0, weights, values):
        return self.project_tangent(y0, stencil.tree_combine(weights, values))[0]

    def curve_derivative(self, curve, t0=0.0, scheme="central4", eps=1e-3):
        offsets, weights = stencil.nodes(scheme, eps)
        return self.tangent_from_samples(curve(t0), weights, [curve(t0 + s) for s in offsets])


class ModuleSpace(GSpace):
    kind = "module"

    def __init__(self, rep: Representation):
        self.rep = rep
        self.group = rep.group

    def __repr__(self):
        return f"ModuleSpace({self.rep.name}, dim={self.rep.module_dim})"

    def contains(self, y, tol=1e-9):
        y = np.asarray(y)
        return y.shape == (self.rep.module_dim,) and bool(np.all(np.isfinite(y)))

    def act(self, g, y):
        return self.rep.apply(g, np.asarray(y, dtype=float))

    def infinitesimal(self, a, y):
        return algebra_action_matrix(a, y, self.rep)

    def project_tangent(self, y, Y):
        return np.asarray(Y, dtype=float), 0.0

    def curve(self, y, Y):
        return lambda s: np.asarray(y, dtype=float) + s * np.asarray(Y, dtype=float)

    def random_point(self, rng, scale=1.0):
        return scale * rng.normal(size=self.rep.module_dim)


class ConjugationSpace(GSpace):
    """The group acting on itself by conjugation."""

    kind = "conjugation"

    def __init__(self, group: MatrixLieGroup):
        self.group = group

    def __repr__(self):
        return f"ConjugationSpace({self.group.name})"

    def contains(self, y, tol=1e-9):
        return self.group.is_member(y, max(tol, self.group.membership_tol))

    def act(self, g, y):
        return g @ y @ self.group.inverse(g)

    def infinitesimal(self, a, y):
        return a @ y - y @ a

    def project_tangent(self, y, Y):
        coords, resid = self.group.vee_residual(self.group.inverse(y) @ Y)
        return y @ self.group.hat(coords), resid

    def tangent_from_samples(self, y0, weights, values):
        return y0 @ self.group.project(self.group.inverse(y0) @ stencil.tree_combine(weights, values))

    def curve(self, y, Y):
        a = self.group.inverse(y) @ Y
        return lambda s: y @ expm(s * a)

    def random_point(self, rng, scale=1.0):
        return self.group.random_element(rng, scale)


class Sphere2(GSpace):
    """The unit sphere in R^3 under rotations."""

    kind = "sphere2"

    def __init__(self, group: Optional[MatrixLieGroup] = None):
        self.group = group or so3()
        if self.group.kind != "SO3":
            raise ValueError("Sphere2 is an SO(3)-space")

    def __repr__(self):
        return "Sphere2()"

    def contains(self, y, tol=1e-9):
        y = np.asarray(y)
        return y.shape == (3,) and abs(np.linalg.norm(y) - 1.0) <= tol

    def act(self, g, y):
        return g @ y

    def infinitesimal(self, a, y):
        return a @ y

    def project_tangent(self, y, Y):
        y = np.asarray(y, dtype=float)
        Y = np.asarray(Y, dtype=float)
        radial = float(y @ Y)
        return Y - radial * y, abs(radial)

    def curve(self, y, Y):
        def c(s):
            z = y + s * Y
            return z / np.linalg.norm(z)
        return c

    def random_point(self, rng, scale=1.0):
        z = rng.normal(size=3)
        return z / np.linalg.norm(z)


class ProductSpace(GSpace):
    kind = "product"

    def __init__(self, first: GSpace, second: GSpace):
        if not same_group(first.group, second.group):
            raise ValueError("factors must carry the same group")
        self.factors = (first, second)
        self.group = first.group

    def __repr__(self):
        return f"ProductSpace{self.factors}"

    def contains(self, y, tol=1e-9):
        return all(f.contains(c, tol) for f, c in zip(self.factors, y))

    def act(self, g, y):
        return tuple(f.act(g, c) for f, c in zip(self.factors, y))

    def infinitesimal(self, a, y):
        return tuple(f.infinitesimal(a, c) for f, c in zip(self.factors, y))

    def project_tangent(self, y, Y):
        parts = [f.project_tangent(c, v) for f, c, v in zip(self.factors, y, Y)]
        return tuple(p[0] for p in parts), max(p[1] for p in parts)

    def tangent_from_samples(self, y0, weights, values):
        return tuple(f.tangent_from_samples(y0[i], weights, [v[i] for v in values])
                     for i, f in enumerate(self.factors))

    def curve(self, y, Y):
        curves = [f.curve(c, v) for f, c, v in zip(self.factors, y, Y)]
        return lambda s: tuple(c(s) for c in curves)

    def random_point(self, rng, scale=1.0):
        return tuple(f.random_point(rng, scale) for f in self.factors)


@dataclass(frozen=True, eq=False)
class EquivariantForm:
    """A G-equivariant 1-form ``omega: TN -> V``; ``eval(y, Y)`` returns a vector of ``V``."""

    space: GSpace
    module: Representation
    eval: Callable
    name: str = ""

    def __call__(self, y, Y):
        return eval_form(self, y, Y)


def eval_form(omega: EquivariantForm, y, Y, tol=TANGENT_TOL):
    Yp, resid = omega.space.project_tangent(y, Y)
    if resid > tol * (1.0 + float(np.max(np.abs(stencil.tree_flatten(Y)), initial=0.0))):
        raise NotTangent(f"tangent residual {resid:.3g} at {omega.name or 'form'}")
    return np.asarray(omega.eval(y, Yp), dtype=float)


def canonical_form(space: ModuleSpace) -> EquivariantForm:
    """``pr_2 o vl_V^{-1}``: a tangent vector of ``V`` is its own value."""
    return EquivariantForm(space, space.rep, lambda y, Y: np.asarray(Y, dtype=float), "canonical")


def maurer_cartan_form(space: ConjugationSpace) -> EquivariantForm:
    group = space.group
    return EquivariantForm(space, adjoint_rep(group),
                           lambda y, Y: group.vee(group.inverse(y) @ Y), "maurer-cartan")


def ambient_form(space: Sphere2) -> EquivariantForm:
    """Inclusion ``T S^2 -> R^3``, equivariant for the standard rotation action."""
    return EquivariantForm(space, standard_rep(space.group),
                           lambda y, Y: np.asarray(Y, dtype=float), "ambient")


def product_form(w1: EquivariantForm, w2: EquivariantForm) -> EquivariantForm:
    space = ProductSpace(w1.space, w2.space)
    return EquivariantForm(space, direct_sum(w1.module, w2.module),
                           lambda y, Y: np.concatenate([w1.eval(y[0], Y[0]), w2.eval(y[1], Y[1])]),
                           f"({w1.name}x{w2.name})")


def default_form(space: GSpace) -> EquivariantForm:
    if isinstance(space, ModuleSpace):
        return canonical_form(space)
    if isinstance(space, ConjugationSpace):
        return maurer_cartan_form(space)
    if isinstance(space, Sphere2):
        return ambient_form(space)
    if isinstance(space, ProductSpace):
        return product_form(*(default_form(f) for f in space.factors))
    raise KindMismatch(f"no default form for {space!r}")


def pullback_form(f: Callable, source: GSpace, omega: EquivariantForm, eps=1e-4) -> EquivariantForm:
    """``f^* omega`` for an equivariant ``f: source -> omega.space``.

    ``f`` must be defined on an ambient neighbourhood; its differential is
    taken by a central 4-point stencil in the ambient coordinates.
    """
    target = omega.space

    def ev(y, Y):
        image = f(y)
        df = stencil.derivative(lambda s: f(stencil.tree_add(y, stencil.tree_scale(s, Y))),
                                0.0, "central4", eps)
        return omega.eval(image, target.project_tangent(image, df)[0])

    return EquivariantForm(source, omega.module, ev, f"pullback({omega.name})")


@dataclass(frozen=True, eq=False)
class Section:
    """Identity-frame representative ``x -> N`` of a section over a chart."""

    chart: object
    rep: Callable

    def __call__(self, x):
        return self.rep(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class BundleMap:
    """A fiber-bundle map ``F(M) -> P x_G N`` given by ``y -> p \\ h(y)`` at ``p = (x, e)``."""

    source: NaturalBundleKind
    target: GSpace
    rep: Callable
    linear: bool = False
    name: str = ""

    def __call__(self, y: FiberPoint):
        if y.kind != self.source:
            raise KindMismatch(f"{self.name or 'map'} expects {self.source}, got {y.kind}")
        return self.rep(y)


def section_map(section, target: GSpace, name="") -> BundleMap:
    rep = section.rep if isinstance(section, Section) else section
    return BundleMap(BASE, target, lambda y: rep(y.x), False, name)


def _coords_fn(a):
    return a.rep if isinstance(a, Section) else a


def assoc_divide(space: GSpace, p: PrincipalPoint, z):
    """``p \\ [(x, e), y]`` for ``z = (x, y)``; equals ``g^{-1} y`` when ``p = (x, g)``."""
    x, y = z
    if np.max(np.abs(np.asarray(x) - p.x)) > FIBER_TOL:
        raise DifferentFibers("point and associated-bundle point lie over different base points")
    return space.act(space.group.inverse(p.g), y)


def act_on_map(a, h: BundleMap) -> BundleMap:
    """``a . h``: the algebra section acting on a module-valued map."""
    if not isinstance(h.target, ModuleSpace):
        raise TargetNotModule(f"{h.name or 'map'} does not take values in a module")
    group, rep, coords = h.target.group, h.target.rep, _coords_fn(a)

    def ev(y):
        return algebra_action_matrix(group.hat(coords(y.x)), h(y), rep)

    return BundleMap(h.source, h.target, ev, h.linear, f"a.{h.name}")


def ad_section(h: BundleMap, a) -> BundleMap:
    """``Ad_h(a)`` for ``h`` into the conjugation space; values in algebra coordinates."""
    if not isinstance(h.target, ConjugationSpace):
        raise KindMismatch("Ad_h(a) needs h with values in the conjugation space")
    group, coords = h.target.group, _coords_fn(a)
    target = ModuleSpace(adjoint_rep(group))
    return BundleMap(h.source, target,
                     lambda y: group.vee(group.adjoint(h(y), group.hat(coords(y.x)))),
                     False, f"Ad_{h.name}")


def inverse_map(h: BundleMap) -> BundleMap:
    """``h^{-1}(y) = [p, (p \\ h(y))^{-1}]`` (pointwise inverse, not an inverse map)."""
    if not isinstance(h.target, ConjugationSpace):
        raise KindMismatch("h^{-1} needs h with values in the conjugation space")
    group = h.target.group
    return BundleMap(h.source, h.target, lambda y: group.inverse(h(y)), False, f"{h.name}^-1")


def star_omega(b, z, omega: EquivariantForm, scheme="central4", eps=1e-3):
    """``b *_omega z = omega(d/dt|0 exp(b t) z)`` with the orbit derivative by finite differences."""
    space = omega.space
    b = np.asarray(b, dtype=float)
    tangent = space.curve_derivative(lambda t: space.act(expm(b * t), z), 0.0, scheme, eps)
    return eval_form(omega, z, tangent)


def check_equivariant(f, source: GSpace, target: GSpace, rng, samples=5, tol=1e-7):
    """Spot-check ``f(g y) = g f(y)``; raises :class:`NotEquivariant`."""
    group = source.group
    for _ in range(samples):
        g = group.random_element(rng, 1.0)
        y = source.random_point(rng)
        lhs = stencil.tree_flatten(f(source.act(g, y)))
        rhs = stencil.tree_flatten(target.act(g, f(y)))
        if np.max(np.abs(lhs - rhs)) > tol * (1.0 + np.max(np.abs(rhs))):
            raise NotEquivariant("map does not commute with the group action")
