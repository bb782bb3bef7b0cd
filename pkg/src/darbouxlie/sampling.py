"""Seeded random test data: quadratic polynomial fields, sections, connections, forms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .associated import (BundleMap, ConjugationSpace, ModuleSpace, ProductSpace, Sphere2,
                         eval_form, section_map)
from .errors import KindMismatch
from .flows import Chart, VectorField
from .forms import antisymmetrize, form_map
from .lie import MatrixLieGroup, expm
from .natural import dense_size, dense
from .principal import ConnectionForm, InvariantVectorField


@dataclass(frozen=True, eq=False)
class Quadratic:
    """``c0 + c1 . x + c2 . x x`` with values of shape ``c0.shape``; batched in ``x``."""

    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray

    def __post_init__(self):
        d, n = self.c0.size, self.c1.shape[-1]
        # one matmul against the monomials (1, x, x x)
        weights = np.concatenate([self.c0.reshape(1, d), self.c1.reshape(d, n).T,
                                  self.c2.reshape(d, n * n).T])
        object.__setattr__(self, "_weights", weights)
        sym = self.c2 + np.swapaxes(self.c2, -1, -2)
        object.__setattr__(self, "_sym", sym.reshape(d * n, n).T.copy())

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lead = x.shape[:-1]
        x2 = x.reshape(-1, x.shape[-1])
        mono = np.concatenate([np.ones((len(x2), 1)), x2,
                               (x2[:, :, None] * x2[:, None, :]).reshape(len(x2), -1)], axis=1)
        return (mono @ self._weights).reshape(lead + self.c0.shape)

    def derivative(self, x):
        """Jacobian with the input axis last."""
        x = np.asarray(x, dtype=float)
        d, n = self.c0.size, self.c1.shape[-1]
        out = self.c1.reshape(d, n) + (x @ self._sym).reshape(x.shape[:-1] + (d, n))
        return out.reshape(x.shape[:-1] + self.c1.shape)


def random_quadratic(rng, shape, n, scale=1.0, quad_scale=None) -> Quadratic:
    shape = tuple(shape)
    q = scale if quad_scale is None else quad_scale
    return Quadratic(scale * rng.normal(size=shape), scale * rng.normal(size=shape + (n,)),
                     q * rng.normal(size=shape + (n, n)) / 2)


def poly_field(chart: Chart, poly: Quadratic) -> VectorField:
    return VectorField(chart, poly, poly.derivative)


def random_field(chart: Chart, rng, scale=1.0) -> VectorField:
    return poly_field(chart, random_quadratic(rng, (chart.dim,), chart.dim, scale))


def random_invariant_field(group: MatrixLieGroup, chart: Chart, rng, scale=1.0,
                           vertical_scale=1.0) -> InvariantVectorField:
    base = random_field(chart, rng, scale)
    a = random_quadratic(rng, (group.dim,), chart.dim, vertical_scale)
    return InvariantVectorField(group, base, lambda x: group.hat(a(x)))


def random_vertical_coords(group, chart, rng, scale=1.0) -> Quadratic:
    return random_quadratic(rng, (group.dim,), chart.dim, scale)


def random_module_section(space: ModuleSpace, chart: Chart, rng, scale=1.0) -> BundleMap:
    poly = random_quadratic(rng, (space.rep.module_dim,), chart.dim, scale)
    return section_map(poly, space, "s")


def random_group_section(group: MatrixLieGroup, chart: Chart, rng, scale=0.5) -> BundleMap:
    poly = random_quadratic(rng, (group.dim,), chart.dim, scale)
    return section_map(lambda x: expm(group.hat(poly(x))), ConjugationSpace(group), "g")


def random_connection(chart: Chart, group: MatrixLieGroup, rng, scale=0.5) -> ConnectionForm:
    return ConnectionForm(chart, group, random_quadratic(rng, (group.dim, chart.dim), chart.dim,
                                                         scale))


def random_form(chart: Chart, k: int, space: ModuleSpace, rng, scale=1.0, source=None,
                name="beta") -> BundleMap:
    """Random ``k``-form with quadratic coefficients (alternated); ``Ext^k`` source by default."""
    m, n = space.rep.module_dim, chart.dim
    poly = random_quadratic(rng, (m,) + (n,) * k, n, scale)
    if k == 0:
        return form_map(poly, 0, space, name=name)
    return form_map(lambda x: antisymmetrize(poly(x)), k, space, source, name)



def _ambient_dim(space):
    if isinstance(space, ModuleSpace):
        return space.rep.module_dim
    if isinstance(space, ConjugationSpace):
        return space.group.dim
    if isinstance(space, Sphere2):
        return 3
    raise KindMismatch(f"no random maps into {space!r}")


def random_map(space, kind, chart: Chart, rng, scale=0.5, name="h") -> BundleMap:
    """Random smooth map ``F(M) -> N`` built from ``P(x) + M(x) dense(y)``.

    Maps from vector kinds into a module are fiberwise linear (no ``P`` term).
    """
    if isinstance(space, ProductSpace):
        k1, k2 = kind.factors if kind.tag == "product" else (kind, kind)
        h1 = random_map(space.factors[0], k1, chart, rng, scale, name + "1")
        h2 = random_map(space.factors[1], k2, chart, rng, scale, name + "2")
        if kind.tag == "product":
            return BundleMap(kind, space, lambda y: (h1(y.data[0]), h2(y.data[1])), False, name)
        return BundleMap(kind, space, lambda y: (h1(y), h2(y)), False, name)
    d, n = _ambient_dim(space), chart.dim
    size = dense_size(kind, n)
    offset = random_quadratic(rng, (d,), n, scale)
    coupling = random_quadratic(rng, (d, size), n, scale)
    linear = isinstance(space, ModuleSpace) and kind.is_vector
    if isinstance(space, Sphere2):
        shift = np.zeros(3)
        shift[0] = 4.0

    def raw(y):
        z = coupling(y.x) @ dense(y) if size else np.zeros(d)
        return z if linear else z + offset(y.x)

    if isinstance(space, ModuleSpace):
        ev = raw
    elif isinstance(space, ConjugationSpace):
        def ev(y):
            return expm(space.group.hat(raw(y)))
    else:
        def ev(y):
            z = raw(y) + shift
            return z / np.linalg.norm(z)
    return BundleMap(kind, space, ev, linear, name)


def star_omega_exact(b, z, omega):
    """``b *_omega z`` with the orbit velocity taken from the infinitesimal action."""
    return eval_form(omega, z, omega.space.infinitesimal(np.asarray(b, dtype=float), z))
