"""Trautman lifts and Darboux-Lie derivatives.

All values are identity-frame representatives unless a ``frame`` is passed,
in which case the result is ``p \\ L h(y)`` for ``p = (x, frame)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import stencil
from .associated import (BundleMap, ConjugationSpace, EquivariantForm, GSpace, ModuleSpace,
                         act_on_map, default_form, eval_form, star_omega)
from .errors import KindMismatch
from .flows import FlowConfig, VectorField, flow_batch
from .lie import MatrixLieGroup, adjoint_rep
from .natural import BASE, FiberPoint, NaturalBundleKind, canonical_flow_batch, move
from .principal import InvariantVectorField, PrincipalPoint, invariant_flow_batch


@dataclass(frozen=True, eq=False)
class DarbouxContext:
    """Binds the natural bundle, target space, form and numerical settings."""

    group: MatrixLieGroup
    F: NaturalBundleKind
    target: GSpace
    omega: Optional[EquivariantForm] = None
    cfg: FlowConfig = field(default_factory=FlowConfig)

    def __post_init__(self):
        if self.omega is None:
            object.__setattr__(self, "omega", default_form(self.target))
        if self.omega.space is not self.target and type(self.omega.space) is not type(self.target):
            raise KindMismatch("form is defined on a different space than the target")

    def with_cfg(self, **changes):
        return DarbouxContext(self.group, self.F, self.target, self.omega,
                              replace(self.cfg, **changes))


def context_for(h: BundleMap, omega=None, cfg=FlowConfig()) -> DarbouxContext:
    return DarbouxContext(h.target.group, h.source, h.target, omega, cfg)


def trautman_lift(h, X1: VectorField, X2: VectorField, pt, cfg: FlowConfig = FlowConfig()):
    """``d/dt|0 Phi_{X2}^{-t} h Phi_{X1}^t (pt)`` for maps between charts."""
    offsets, weights = stencil.nodes(cfg.fd_scheme, cfg.fd_eps)
    starts = flow_batch(X1, pt, offsets, cfg)
    values = flow_batch(X2, np.stack([h(x) for x in starts]), -np.asarray(offsets), cfg)
    return stencil.tree_combine(weights, values)


def trautman_lift_direct(h, X1: VectorField, X2: VectorField, pt, eps=1e-4):
    """``(T h)(X1) - X2(h(pt))`` with the tangent map by a central 4-point stencil."""
    pt = np.asarray(pt, dtype=float)
    v = X1(pt)
    th = stencil.derivative(lambda s: np.asarray(h(pt + s * v), dtype=float), 0.0, "central4", eps)
    return th - X2(h(pt))


def _check(ctx, h, y):
    if h.source != ctx.F or y.kind != ctx.F:
        raise KindMismatch(f"context bundle {ctx.F}, map source {h.source}, point {y.kind}")


def darboux_lie(ctx: DarbouxContext, Xt: InvariantVectorField, h: BundleMap, y: FiberPoint,
                frame=None):
    """Darboux-Lie derivative of ``h`` along ``Xt`` at ``y`` via flows.

    Builds ``c(t) = (Phi^t p) \\ h(Phi^t_{F(X)} y)`` in ``N``, differentiates it
    with the configured stencil and applies ``omega``.
    """
    _check(ctx, h, y)
    cfg, target, group = ctx.cfg, ctx.target, ctx.group
    g0 = group.identity if frame is None else np.asarray(frame, dtype=float)
    offsets, weights = stencil.nodes(cfg.fd_scheme, cfg.fd_eps)
    lifted = ctx.F != BASE
    res = invariant_flow_batch(Xt, PrincipalPoint(y.x, g0), offsets, cfg, with_jacobian=lifted)
    xs, gs = res[0], res[1]
    values = []
    for i in range(len(offsets)):
        yt = move(y, xs[i], res[2][i]) if lifted else FiberPoint(BASE, xs[i])
        values.append(target.act(group.inverse(gs[i]), h(yt)))
    z0 = target.act(group.inverse(g0), h(y))
    return eval_form(ctx.omega, z0, target.tangent_from_samples(z0, weights, values))


def darboux_lie_direct(ctx: DarbouxContext, Xt: InvariantVectorField, h: BundleMap,
                       y: FiberPoint):
    """Same quantity from the Trautman lift ``T h(F(X)_y) - X_N(h(y))`` and ``omega``.

    The first term differentiates ``h`` along the canonical lift alone; the
    second is the infinitesimal action of ``A(x)`` on ``h(y)``.
    """
    _check(ctx, h, y)
    cfg, target = ctx.cfg, ctx.target
    offsets, weights = stencil.nodes(cfg.fd_scheme, cfg.fd_eps)
    z0 = h(y)
    moved = canonical_flow_batch(ctx.F, Xt.base, y, offsets, cfg)
    along = target.tangent_from_samples(z0, weights, [h(yt) for yt in moved])
    vertical = target.infinitesimal(Xt.vertical_at(y.x), z0)
    return eval_form(ctx.omega, z0, stencil.tree_sub(along, vertical))


def darboux_lie_map(ctx: DarbouxContext, Xt: InvariantVectorField, h: BundleMap) -> BundleMap:
    """``L^omega_Xt h`` as a bundle map into the form's module."""
    return BundleMap(ctx.F, ModuleSpace(ctx.omega.module),
                     lambda y: darboux_lie(ctx, Xt, h, y), h.linear, f"L({h.name})")


def darboux_lie_vertical_closed(a, h: BundleMap, mode: str, omega=None, scheme="central4",
                                eps=1e-3) -> BundleMap:
    """Closed forms along a vertical field ``X^a``.

    ``mode``: ``"module"`` gives ``-a.h``; ``"conjugation"`` gives
    ``a - Ad_{h^-1}(a)``; ``"generic"`` gives ``-(p\\a) *_omega (p\\h)``.
    """
    coords = getattr(a, "rep", a)
    group = h.target.group
    if mode == "module":
        if not isinstance(h.target, ModuleSpace):
            raise KindMismatch("module mode needs a module-valued map")
        minus = act_on_map(a, h)
        return BundleMap(h.source, h.target, lambda y: -minus(y), h.linear, f"-a.{h.name}")
    if mode == "conjugation":
        if not isinstance(h.target, ConjugationSpace):
            raise KindMismatch("conjugation mode needs a map into the conjugation space")

        def ev(y):
            av = coords(y.x)
            return av - group.vee(group.adjoint(group.inverse(h(y)), group.hat(av)))

        return BundleMap(h.source, ModuleSpace(adjoint_rep(group)), ev, False,
                         f"a-Ad_{h.name}^-1(a)")
    if mode == "generic":
        omega = omega or default_form(h.target)

        def ev(y):
            return -star_omega(group.hat(coords(y.x)), h(y), omega, scheme, eps)

        return BundleMap(h.source, ModuleSpace(omega.module), ev, False, f"-a*{h.name}")
    raise KindMismatch(f"unknown mode {mode!r}")

