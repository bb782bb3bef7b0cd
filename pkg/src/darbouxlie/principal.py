"""The trivial principal bundle ``U x G`` over a chart.

Points are pairs ``(x, g)`` with right action ``(x, g) h = (x, g h)``.  A
G-invariant vector field is ``(x, g) -> (X(x), A(x) g)``, stored as the base
field ``X`` and the vertical coefficient ``A: U -> g`` (a matrix evaluator,
``None`` meaning zero).  Sections of ``P x_G g`` are stored by their
identity-frame representative in algebra coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DifferentFibers, LeftDomain
from .flows import (Chart, FlowConfig, VectorField, domain_check, memoized_flow, rk4_batch,
                    zero_field)
from .lie import MatrixLieGroup, mc_matrix

FIBER_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PrincipalPoint:
    x: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "g", np.asarray(self.g, dtype=float))

    def act(self, h):
        """Right action ``p h``."""
        return PrincipalPoint(self.x, self.g @ h)


def divide(p1: PrincipalPoint, p2: PrincipalPoint, group: Optional[MatrixLieGroup] = None):
    """Division ``p1 \\ p2``: the element with ``p1 (p1 \\ p2) = p2``."""
    if np.max(np.abs(p1.x - p2.x)) > FIBER_TOL:
        raise DifferentFibers("points lie over different base points")
    inv = group.inverse(p1.g) if group is not None else np.linalg.inv(p1.g)
    return inv @ p2.g


@dataclass(frozen=True, eq=False)
class InvariantVectorField:
    group: MatrixLieGroup
    base: VectorField
    vertical: Optional[Callable] = None

    def vertical_at(self, x):
        x = np.asarray(x, dtype=float)
        if self.vertical is None:
            return np.zeros(x.shape[:-1] + (self.group.n, self.group.n))
        return np.asarray(self.vertical(x), dtype=float)

    def at(self, p: PrincipalPoint):
        """Velocity ``(X(x), A(x) g)`` at ``p``."""
        return self.base(p.x), self.vertical_at(p.x) @ p.g

    def __add__(self, other):
        return InvariantVectorField(self.group, self.base + other.base,
                                    lambda x: self.vertical_at(x) + other.vertical_at(x))

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, c):
        return InvariantVectorField(self.group, c * self.base,
                                    lambda x: c * self.vertical_at(x))


def invariant_flow_batch(Xt: InvariantVectorField, p: PrincipalPoint, ts, cfg=FlowConfig(),
                         with_jacobian=False):
    """Flow ``(x, g)`` (and optionally the base flow Jacobian) to each time in ``ts``.

    Returns ``(xs, gs)`` or ``(xs, gs, jacs)`` with leading batch axis.
    """
    X = Xt.base
    n = X.chart.dim
    m = Xt.group.n
    if not X.chart.contains(p.x, cfg.domain_guard):
        raise LeftDomain("start point outside the guarded chart")
    ts = np.asarray(ts, dtype=float)
    parts = [p.x, p.g.ravel()]
    if with_jacobian:
        parts.append(np.eye(n).ravel())
    s0 = np.tile(np.concatenate(parts), (len(ts), 1))
    vertical = Xt.vertical

    def rhs(s):
        xs = s[:, :n]
        gs = s[:, n:n + m * m].reshape(-1, m, m)
        out = [X.eval(xs)]
        if vertical is None:
            out.append(np.zeros((len(s), m * m)))
        else:
            out.append((vertical(xs) @ gs).reshape(len(s), -1))
        if with_jacobian:
            jac = s[:, n + m * m:].reshape(-1, n, n)
            out.append((X.jac(xs) @ jac).reshape(len(s), -1))
        return np.concatenate(out, axis=1)

    def compute():
        s = rk4_batch(rhs, s0, ts, cfg.rk4_steps, domain_check(X.chart, cfg.domain_guard, n))
        xs = s[:, :n]
        gs = s[:, n:n + m * m].reshape(-1, m, m)
        if with_jacobian:
            return xs, gs, s[:, n + m * m:].reshape(-1, n, n)
        return xs, gs

    return memoized_flow(("invariant", with_jacobian), Xt, cfg, (p.x, p.g, ts), compute)


def flow_invariant(Xt: InvariantVectorField, p: PrincipalPoint, t: float,
                   cfg: FlowConfig = FlowConfig()) -> PrincipalPoint:
    xs, gs = invariant_flow_batch(Xt, p, [t], cfg)
    return PrincipalPoint(xs[0], gs[0])


def vertical_from_section(group: MatrixLieGroup, chart: Chart, a: Callable) -> InvariantVectorField:
    """The vertical field ``X^a`` of a section ``a`` of ``P x_G g``.

    ``a`` maps chart points to algebra coordinates of the identity-frame
    representative; the flow is ``(x, g) -> (x, exp(a(x) t) g)``.
    """
    return InvariantVectorField(group, zero_field(chart), lambda x: group.hat(a(x)))


def section_from_vertical(Xt: InvariantVectorField, x, cfg=FlowConfig()):
    """Recover ``a(x)`` (coordinates) as ``d/dt|0 p \\ Phi^t p`` at ``p = (x, e)``."""
    group = Xt.group
    p = PrincipalPoint(x, group.identity)

    def curve(t):
        return divide(p, flow_invariant(Xt, p, t, cfg), group) if t else group.identity

    return group.vee(mc_matrix(group, curve, 0.0, cfg.fd_scheme, cfg.fd_eps))


@dataclass(frozen=True, eq=False)
class ConnectionForm:
    """Local connection 1-form; ``coeff(x)`` has shape ``(..., dim g, n)``.

    On ``P`` the form is ``theta(x, g)(v, gdot) = Ad_{g^-1}(Gamma(x) v + gdot g^-1)``.
    """

    chart: Chart
    group: MatrixLieGroup
    coeff: Callable

    def gamma(self, x, v):
        """``Gamma(x) v`` as algebra matrices."""
        c = np.asarray(self.coeff(x), dtype=float)
        return self.group.hat((c @ np.asarray(v, dtype=float)[..., None])[..., 0])

    def on_P(self, p: PrincipalPoint, v, gdot):
        g_inv = self.group.inverse(p.g)
        return g_inv @ (self.gamma(p.x, v) + gdot @ g_inv) @ p.g


def flat_connection(chart, group):
    return ConnectionForm(chart, group,
                          lambda x: np.zeros(np.shape(x)[:-1] + (group.dim, chart.dim)))


def horizontal_lift(conn: ConnectionForm, X: VectorField) -> InvariantVectorField:
    """The invariant lift of ``X`` annihilated by ``conn``: vertical part ``-Gamma(X)``."""
    if conn.chart != X.chart:
        raise ValueError("connection and field live on different charts")
    return InvariantVectorField(conn.group, X, lambda x: -conn.gamma(x, X(x)))


def decompose(Xt: InvariantVectorField, conn: ConnectionForm):
    """Split ``Xt = horizontal_lift(conn, X) + X^a``; returns the section ``a`` (coordinates)."""
    group = Xt.group

    def a(x):
        return group.vee(Xt.vertical_at(x) + conn.gamma(x, Xt.base(x)))

    return a
