"""Covariant derivative, exterior covariant derivative and covariant Lie derivative.

Forms are module-valued bundle maps on ``Ext^k`` (or ``TM`` for ``k = 1``;
sections are maps on ``Base``).  The covariant derivative of a section along
``X`` is the Darboux-Lie derivative along the horizontal lift ``X^H``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import stencil
from .associated import BundleMap, ModuleSpace
from .darboux import DarbouxContext, darboux_lie, darboux_lie_map
from .errors import KindMismatch
from .flows import FlowConfig, VectorField, constant_field, lie_bracket
from .forms import degree, evaluate
from .lie import Representation, same_group
from .natural import BASE, base_point, ext_power
from .principal import ConnectionForm, horizontal_lift

CLASSICAL_EPS = 1e-5


@dataclass(frozen=True, eq=False)
class CovariantContext:
    conn: ConnectionForm
    module: Representation
    cfg: FlowConfig = field(default_factory=FlowConfig)

    def __post_init__(self):
        if not same_group(self.module.group, self.conn.group):
            raise KindMismatch("module and connection use different groups")
        object.__setattr__(self, "space", ModuleSpace(self.module))

    @property
    def chart(self):
        return self.conn.chart

    def nabla(self, X: VectorField, section: Callable, x):
        """``nabla_X s (x) = L_{X^H} s (x)`` for ``s: chart -> V``."""
        ctx = DarbouxContext(self.conn.group, BASE, self.space, None, self.cfg)
        s = BundleMap(BASE, self.space, lambda y: section(y.x))
        return darboux_lie(ctx, horizontal_lift(self.conn, X), s, base_point(x))


def _require_module(ctx, beta):
    if not isinstance(beta.target, ModuleSpace) or \
            beta.target.rep.module_dim != ctx.module.module_dim:
        raise KindMismatch("form values do not lie in the context module")


def _dcov_vectors(ctx: CovariantContext, beta: BundleMap, x, vectors):
    out = 0.0
    for j, v in enumerate(vectors):
        rest = vectors[:j] + vectors[j + 1:]
        term = ctx.nabla(constant_field(ctx.chart, v), lambda xp, r=rest: evaluate(beta, xp, r), x)
        out = out + (-1) ** j * term
    return np.asarray(out, dtype=float)


def exterior_covariant_derivative(ctx: CovariantContext, beta: BundleMap) -> BundleMap:
    """``d^nabla beta`` evaluated on constant extensions of the fiber vectors."""
    _require_module(ctx, beta)
    k = degree(beta.source)
    if k + 1 > ctx.chart.dim:
        raise KindMismatch("degree exceeds the chart dimension")

    def ev(y):
        out = 0.0
        for c, vs in y.data:
            out = out + c * _dcov_vectors(ctx, beta, y.x, list(vs))
        return np.asarray(out, dtype=float) * np.ones(ctx.module.module_dim)

    return BundleMap(ext_power(k + 1), beta.target, ev, True, f"d({beta.name})")


def d_cov_fields(ctx: CovariantContext, beta: BundleMap, fields: Sequence[VectorField], x):
    """``d^nabla beta (X_0, ..., X_k)(x)`` for genuine vector fields, bracket terms included."""
    _require_module(ctx, beta)
    fields = list(fields)
    if len(fields) != degree(beta.source) + 1:
        raise KindMismatch("wrong number of vector fields")
    out = 0.0
    for j, X in enumerate(fields):
        rest = fields[:j] + fields[j + 1:]
        term = ctx.nabla(X, lambda xp, r=rest: evaluate(beta, xp, [Y(xp) for Y in r]), x)
        out = out + (-1) ** j * term
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            rest = [Y(x) for m, Y in enumerate(fields) if m not in (i, j)]
            bracket = lie_bracket(fields[i], fields[j])(x)
            out = out + (-1) ** (i + j) * evaluate(beta, x, [bracket] + rest)
    return np.asarray(out, dtype=float)


def interior(Z: VectorField, beta: BundleMap) -> BundleMap:
    """``i_Z beta``; uses ``Z`` at the base point of each fiber point."""
    k = degree(beta.source)
    if k == 0:
        raise KindMismatch("cannot contract a section")
    if k == 1:
        return BundleMap(BASE, beta.target, lambda y: evaluate(beta, y.x, [Z(y.x)]), False,
                         f"i({beta.name})")

    def ev(y):
        z = Z(y.x)
        out = 0.0
        for c, vs in y.data:
            out = out + c * evaluate(beta, y.x, [z] + list(vs))
        return np.asarray(out, dtype=float)

    return BundleMap(ext_power(k - 1), beta.target, ev, True, f"i({beta.name})")


def covariant_lie(ctx: CovariantContext, Z: VectorField, beta: BundleMap) -> BundleMap:
    """``i_Z d^nabla beta + d^nabla i_Z beta`` as a map on ``Ext^k``."""
    k = degree(beta.source)
    first = interior(Z, exterior_covariant_derivative(ctx, beta))
    if k == 0:
        return first
    second = exterior_covariant_derivative(ctx, interior(Z, beta))

    def ev(y):
        return first(y) + second(y)

    return BundleMap(ext_power(k), beta.target, ev, True, f"Lcov({beta.name})")


def covariant_lie_via_lift(ctx: CovariantContext, Z: VectorField, beta: BundleMap) -> BundleMap:
    """``L_{Z^H} beta`` through the Darboux-Lie derivative."""
    dctx = DarbouxContext(ctx.conn.group, beta.source, beta.target, None, ctx.cfg)
    return darboux_lie_map(dctx, horizontal_lift(ctx.conn, Z), beta)


def covariant_darboux_lie(ctx_or_conn, X: VectorField, h: BundleMap, omega=None,
                          cfg: FlowConfig = FlowConfig()) -> BundleMap:
    """``L^{omega, nabla}_X h = L^omega_{X^H} h`` for any target space."""
    conn = getattr(ctx_or_conn, "conn", ctx_or_conn)
    dctx = DarbouxContext(conn.group, h.source, h.target, omega, cfg)
    return darboux_lie_map(dctx, horizontal_lift(conn, X), h)


def classical_lie_derivative(beta: BundleMap, Z: VectorField, x, vectors, eps=CLASSICAL_EPS):
    """``(L_Z beta)(Y_1..Y_k) = Z(beta(Y)) + sum_j beta(.., J_Z Y_j, ..)`` with constant ``Y``.

    Valid for a flat connection in the trivial gauge; the directional
    derivative uses a central 2-point difference.
    """
    x = np.asarray(x, dtype=float)
    vectors = [np.asarray(v, dtype=float) for v in vectors]
    z = Z(x)
    out = stencil.derivative(lambda s: np.asarray(evaluate(beta, x + s * z, vectors)), 0.0,
                             "central2", eps)
    jac = Z.jac(x)
    for j in range(len(vectors)):
        moved = list(vectors)
        moved[j] = jac @ vectors[j]
        out = out + evaluate(beta, x, moved)
    return np.asarray(out, dtype=float)


def classical_exterior_derivative(beta: BundleMap, x, vectors, eps=CLASSICAL_EPS):
    """Flat-space ``d beta`` on constant vectors: ``sum_j (-1)^j D_{Y_j} beta(.. no j ..)``."""
    x = np.asarray(x, dtype=float)
    out = 0.0
    for j, v in enumerate(vectors):
        rest = list(vectors[:j]) + list(vectors[j + 1:])
        out = out + (-1) ** j * stencil.derivative(
            lambda s: np.asarray(evaluate(beta, x + s * np.asarray(v), rest)), 0.0, "central2", eps)
    return np.asarray(out, dtype=float)

