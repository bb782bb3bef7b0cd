"""Charts, vector fields and their RK4 flows.

Every evaluator on a chart (vector fields, Jacobians, sections, connection
coefficients) must accept points with leading batch axes, ``(..., n)``.
The integrators advance all requested times at once: the stencil nodes of a
finite-difference derivative are integrated as one batch, each from ``t = 0``
with its own step ``t / rk4_steps``.
"""
from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import LeftDomain

JACOBIAN_EPS = 1e-5


@dataclass(frozen=True)
class Chart:
    """An open box ``prod (lo_i, hi_i)`` in ``R^dim``."""

    dim: int
    bounds: tuple

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(b) != self.dim:
            raise ValueError("bounds must have one interval per coordinate")
        if any(not lo < hi for lo, hi in b):
            raise ValueError("each bound needs lo < hi")
        object.__setattr__(self, "bounds", b)

    @classmethod
    def cube(cls, dim, half_width=1.0):
        return cls(dim, tuple((-half_width, half_width) for _ in range(dim)))

    def box(self, margin=0.0):
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        pad = margin * (hi - lo)
        return lo + pad, hi - pad

    def contains(self, x, margin=0.0):
        lo, hi = self.box(margin)
        x = np.asarray(x)
        return bool(np.all((x > lo) & (x < hi)))

    def sample(self, rng, margin=0.0):
        lo, hi = self.box(margin)
        return rng.uniform(lo, hi)


@dataclass(frozen=True, eq=False)
class VectorField:
    chart: Chart
    eval: Callable
    jacobian: Optional[Callable] = None

    def __call__(self, x):
        return np.asarray(self.eval(np.asarray(x, dtype=float)), dtype=float)

    def jac(self, x):
        x = np.asarray(x, dtype=float)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(x), dtype=float)
        return fd_jacobian(self.eval, x, self.chart.dim)

    def __add__(self, other):
        return VectorField(self.chart, lambda x: self(x) + other(x),
                           lambda x: self.jac(x) + other.jac(x))

    def __rmul__(self, c):
        return VectorField(self.chart, lambda x: c * self(x), lambda x: c * self.jac(x))

    def __neg__(self):
        return (-1.0) * self


def fd_jacobian(f, x, n, eps=JACOBIAN_EPS):
    """Central-difference Jacobian ``(..., n_out, n)`` of a batched map."""
    x = np.asarray(x, dtype=float)
    steps = eps * np.eye(n)
    plus = x[..., None, :] + steps
    minus = x[..., None, :] - steps
    both = np.asarray(f(np.concatenate([plus, minus], axis=-2)), dtype=float)
    diff = (both[..., :n, :] - both[..., n:, :]) / (2 * eps)
    return np.swapaxes(diff, -1, -2)


def zero_field(chart):
    n = chart.dim
    return VectorField(chart, lambda x: np.zeros(np.shape(x)),
                       lambda x: np.zeros(np.shape(x)[:-1] + (n, n)))


def linear_field(chart, a):
    a = np.asarray(a, dtype=float)
    return VectorField(chart, lambda x: x @ a.T,
                       lambda x: np.broadcast_to(a, np.shape(x)[:-1] + a.shape))


def constant_field(chart, v):
    v = np.asarray(v, dtype=float)
    n = chart.dim
    return VectorField(chart, lambda x: np.broadcast_to(v, np.shape(x)).copy(),
                       lambda x: np.zeros(np.shape(x)[:-1] + (n, n)))


@dataclass(frozen=True)
class FlowConfig:
    rk4_steps: int = 32
    fd_scheme: str = "central4"
    fd_eps: float = 1e-3
    domain_guard: float = 0.05

    def __post_init__(self):
        if self.rk4_steps < 1:
            raise ValueError("rk4_steps must be >= 1")
        if not self.fd_eps > 0:
            raise ValueError("fd_eps must be positive")
        if self.fd_scheme not in ("central2", "central4"):
            raise ValueError(f"unknown fd_scheme {self.fd_scheme!r}")


def rk4_batch(rhs, state, ts, steps, check=None):
    """Integrate ``s' = rhs(s)`` for a batch of end times.

    ``state`` has shape ``(B, d)`` and ``ts`` shape ``(B,)``; row ``i`` is
    advanced to time ``ts[i]`` in ``steps`` equal steps.  ``check`` is called
    on every stage state and may raise.
    """
    s = np.array(state, dtype=float)
    h = (np.asarray(ts, dtype=float) / steps)[:, None]
    if not np.any(h):
        return s
    for _ in range(steps):
        k1 = rhs(s)
        s2 = s + 0.5 * h * k1
        if check:
            check(s2)
        k2 = rhs(s2)
        s3 = s + 0.5 * h * k2
        if check:
            check(s3)
        k3 = rhs(s3)
        s4 = s + h * k3
        if check:
            check(s4)
        k4 = rhs(s4)
        s = s + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        if check:
            check(s)
    return s


_CACHE: OrderedDict = OrderedDict()
_CACHE_LOCK = threading.Lock()
CACHE_SIZE = 256


def memoized_flow(tag, owner, cfg, arrays, compute):
    """Reuse flow results for the same (frozen) field, start data, times and config.

    Keys hold ``id(owner)``; the entry keeps ``owner`` alive so ids cannot be
    recycled while cached.  Returned arrays are read-only.
    """
    key = (tag, id(owner), cfg) + tuple(np.asarray(a, dtype=float).tobytes() for a in arrays)
    with _CACHE_LOCK:
        hit = _CACHE.get(key)
        if hit is not None and hit[0] is owner:
            _CACHE.move_to_end(key)
            return hit[1]
    out = compute()
    for a in out:
        a.flags.writeable = False
    with _CACHE_LOCK:
        _CACHE[key] = (owner, out)
        while len(_CACHE) > CACHE_SIZE:
            _CACHE.popitem(last=False)
    return out


def clear_flow_cache():
    with _CACHE_LOCK:
        _CACHE.clear()


def domain_check(chart, margin, n):
    lo, hi = chart.box(margin)

    def check(s):
        x = s[:, :n]
        # comparisons with NaN are false, so non-finite states fail too
        if not ((x > lo).all() and (x < hi).all()):
            raise LeftDomain("flow left the guarded chart")

    return check


def _start(chart, x, cfg):
    x = np.asarray(x, dtype=float)
    if not chart.contains(x, cfg.domain_guard):
        raise LeftDomain("start point outside the guarded chart")
    return x


def flow_batch(X: VectorField, x, ts: Sequence[float], cfg=FlowConfig()):
    """Flow ``x`` to each time in ``ts``; ``x`` may also hold one start point per time."""
    n = X.chart.dim
    x = _start(X.chart, x, cfg)
    ts = np.asarray(ts, dtype=float)

    def compute():
        s0 = np.array(np.broadcast_to(x, (len(ts), n)))
        return (rk4_batch(X.eval, s0, ts, cfg.rk4_steps,
                          domain_check(X.chart, cfg.domain_guard, n)),)

    return memoized_flow("flow", X, cfg, (x, ts), compute)[0]


def flow(X: VectorField, x, t: float, cfg: FlowConfig = FlowConfig()):
    """Point reached from ``x`` after time ``t`` along ``X`` (fixed-step RK4)."""
    return flow_batch(X, x, [t], cfg)[0]


def flow_jacobian_batch(X: VectorField, x, ts, cfg=FlowConfig()):
    """Flowed points ``(B, n)`` and flow Jacobians ``(B, n, n)`` via the variational equation.

    As in :func:`flow_batch`, ``x`` is one start point or one per time.
    """
    n = X.chart.dim
    x = _start(X.chart, x, cfg)
    ts = np.asarray(ts, dtype=float)

    def rhs(s):
        xs = s[:, :n]
        jac = s[:, n:].reshape(-1, n, n)
        return np.concatenate([X.eval(xs), (X.jac(xs) @ jac).reshape(len(s), -1)], axis=1)

    def compute():
        s0 = np.concatenate([np.broadcast_to(x, (len(ts), n)),
                             np.tile(np.eye(n).ravel(), (len(ts), 1))], axis=1)
        s = rk4_batch(rhs, s0, ts, cfg.rk4_steps, domain_check(X.chart, cfg.domain_guard, n))
        return s[:, :n], s[:, n:].reshape(-1, n, n)

    return memoized_flow("tangent", X, cfg, (x, ts), compute)


def tangent_flow(X: VectorField, x, v, t: float, cfg: FlowConfig = FlowConfig()):
    """``(Phi^t x, T Phi^t v)`` from the joint state/variational integration."""
    xs, jacs = flow_jacobian_batch(X, x, [t], cfg)
    return xs[0], jacs[0] @ np.asarray(v, dtype=float)


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """``[X, Y] = J_Y X - J_X Y``."""
    if X.chart != Y.chart:
        raise ValueError("fields live on different charts")

    def ev(x):
        return (Y.jac(x) @ X(x)[..., None])[..., 0] - (X.jac(x) @ Y(x)[..., None])[..., 0]

    return VectorField(X.chart, ev)
