"""A fixed family of natural bundles over a chart and their canonical lifts.

Fiber data by kind:

* ``base``       -- ``None``
* ``tangent``    -- a vector
* ``ext`` (k)    -- tuple of ``(coeff, (Z_1, ..., Z_k))`` decomposable wedges
* ``tensor``     -- tuple of ``(coeff, y1, y2)`` with ``y1, y2`` FiberPoints
* ``product``    -- ``(y1, y2)`` FiberPoints over the same base point

Formal sums are never canonicalized; compare fiber points through
:func:`coordinates` or by evaluating maps on them.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import KindMismatch
from .flows import FlowConfig, VectorField, flow_batch, flow_jacobian_batch


@dataclass(frozen=True)
class NaturalBundleKind:
    tag: str
    k: int = 0
    factors: tuple = ()

    def __str__(self):
        if self.tag == "ext":
            return f"Ext{self.k}"
        if self.factors:
            op = "x" if self.tag == "product" else "(x)"
            return f"({self.factors[0]} {op} {self.factors[1]})"
        return self.tag.capitalize()

    @property
    def is_vector(self):
        if self.tag in ("tangent", "ext", "tensor"):
            return True
        return False


BASE = NaturalBundleKind("base")
TANGENT = NaturalBundleKind("tangent")


def ext_power(k):
    if k not in (1, 2, 3):
        raise ValueError("exterior powers are supported for k in {1, 2, 3}")
    return NaturalBundleKind("ext", k)


def product_kind(f1, f2):
    return NaturalBundleKind("product", 0, (f1, f2))


def tensor_kind(e1, e2):
    if not (e1.is_vector and e2.is_vector):
        raise KindMismatch("tensor products need vector natural bundles")
    return NaturalBundleKind("tensor", 0, (e1, e2))


TENSOR_SQUARE = tensor_kind(TANGENT, TANGENT)


@dataclass(frozen=True, eq=False)
class FiberPoint:
    kind: NaturalBundleKind
    x: np.ndarray
    data: object = None

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))


def base_point(x):
    return FiberPoint(BASE, x)


def tangent_point(x, v):
    return FiberPoint(TANGENT, x, np.asarray(v, dtype=float))


def wedge_point(x, *vectors, coeff=1.0):
    vs = tuple(np.asarray(v, dtype=float) for v in vectors)
    return FiberPoint(ext_power(len(vs)), x, ((float(coeff), vs),))


def tensor_point(y1, y2, coeff=1.0):
    return FiberPoint(tensor_kind(y1.kind, y2.kind), y1.x, ((float(coeff), y1, y2),))


def product_point(y1, y2):
    return FiberPoint(product_kind(y1.kind, y2.kind), y1.x, (y1, y2))


def fiber_add(y1, y2):
    """Sum of two fiber points of the same vector kind over the same base point."""
    if y1.kind != y2.kind or not y1.kind.is_vector:
        raise KindMismatch("can only add fiber points of one vector kind")
    if y1.kind == TANGENT:
        return FiberPoint(TANGENT, y1.x, y1.data + y2.data)
    return FiberPoint(y1.kind, y1.x, tuple(y1.data) + tuple(y2.data))


def fiber_scale(c, y):
    if y.kind == TANGENT:
        return FiberPoint(TANGENT, y.x, c * y.data)
    if y.kind.tag in ("ext", "tensor"):
        return FiberPoint(y.kind, y.x, tuple((c * t[0],) + tuple(t[1:]) for t in y.data))
    raise KindMismatch(f"{y.kind} is not a vector bundle")


def move(y: FiberPoint, x_new, jac):
    """Push ``y`` forward by a diffeomorphism with Jacobian ``jac`` landing at ``x_new``."""
    tag = y.kind.tag
    if tag == "base":
        return FiberPoint(y.kind, x_new)
    if tag == "tangent":
        return FiberPoint(y.kind, x_new, jac @ y.data)
    if tag == "ext":
        return FiberPoint(y.kind, x_new,
                          tuple((c, tuple(jac @ v for v in vs)) for c, vs in y.data))
    if tag == "tensor":
        return FiberPoint(y.kind, x_new,
                          tuple((c, move(a, x_new, jac), move(b, x_new, jac)) for c, a, b in y.data))
    if tag == "product":
        return FiberPoint(y.kind, x_new, tuple(move(c, x_new, jac) for c in y.data))
    raise KindMismatch(f"unknown kind {y.kind}")


def canonical_flow_batch(F: NaturalBundleKind, X: VectorField, y: FiberPoint, ts,
                         cfg=FlowConfig()):
    """Flow of the canonical lift of ``X`` from ``y`` to each time in ``ts``."""
    if y.kind != F:
        raise KindMismatch(f"fiber point of kind {y.kind} given for {F}")
    if F == BASE:
        return [FiberPoint(F, x) for x in flow_batch(X, y.x, ts, cfg)]
    xs, jacs = flow_jacobian_batch(X, y.x, ts, cfg)
    return [move(y, x, j) for x, j in zip(xs, jacs)]


def canonical_flow_rows(F: NaturalBundleKind, X: VectorField, ys, ts, cfg=FlowConfig()):
    """Flow each ``ys[i]`` to its own time ``ts[i]`` in one batched integration."""
    if any(y.kind != F for y in ys):
        raise KindMismatch(f"fiber points must all be of kind {F}")
    starts = np.stack([y.x for y in ys])
    if F == BASE:
        return [FiberPoint(F, x) for x in flow_batch(X, starts, ts, cfg)]
    xs, jacs = flow_jacobian_batch(X, starts, ts, cfg)
    return [move(y, x, j) for y, x, j in zip(ys, xs, jacs)]


def canonical_flow(F: NaturalBundleKind, X: VectorField, y: FiberPoint, t: float,
                   cfg: FlowConfig = FlowConfig()) -> FiberPoint:
    """Canonical lift flow: base flow on points, tangent flow on every vector factor."""
    return canonical_flow_batch(F, X, y, [t], cfg)[0]


def alternation(vectors):
    """``sum_sigma sign(sigma) Z_sigma(1) (x) ... (x) Z_sigma(k)`` as a flat array."""
    k = len(vectors)
    n = len(vectors[0])
    out = np.zeros(n**k)
    for perm in itertools.permutations(range(k)):
        t = np.ones(1)
        for i in perm:
            t = np.kron(t, vectors[i])
        out += permutation_sign(perm) * t
    return out


def permutation_sign(perm):
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def dense(y: FiberPoint):
    """Fiber components as a flat vector (formal sums evaluated)."""
    tag = y.kind.tag
    n = len(y.x)
    if tag == "base":
        return np.zeros(0)
    if tag == "tangent":
        return np.asarray(y.data, dtype=float)
    if tag == "ext":
        out = np.zeros(n**y.kind.k)
        for c, vs in y.data:
            out += c * alternation(vs)
        return out
    if tag == "tensor":
        out = None
        for c, a, b in y.data:
            term = c * np.kron(dense(a), dense(b))
            out = term if out is None else out + term
        if out is None:
            return np.zeros(dense_size(y.kind, n))
        return out
    if tag == "product":
        return np.concatenate([dense(c) for c in y.data])
    raise KindMismatch(f"unknown kind {y.kind}")


def dense_size(kind, n):
    if kind.tag == "base":
        return 0
    if kind.tag == "tangent":
        return n
    if kind.tag == "ext":
        return n**kind.k
    a, b = (dense_size(f, n) for f in kind.factors)
    return a * b if kind.tag == "tensor" else a + b


def coordinates(y: FiberPoint):
    """Base point followed by fiber components."""
    return np.concatenate([y.x, dense(y)])


def shuffles(k, l):
    """All ``(k, l)``-shuffles as ``(permutation, sign)``; lexicographic order."""
    out = []
    for first in itertools.combinations(range(k + l), k):
        rest = tuple(i for i in range(k + l) if i not in first)
        perm = first + rest
        out.append((perm, permutation_sign(perm)))
    return out


@dataclass(frozen=True)
class NaturalMap:
    """Natural maps between the supported bundles.

    Tags: ``diagonal_base`` (x -> (x, x)), ``insert_base`` (Z -> (x, Z), with
    ``inner`` the kind of Z), ``wedge_to_tensor`` (Z1^Z2 -> Z1(x)Z2 - Z2(x)Z1)
    and ``shuffle_split`` (Ext(k+l) -> Ext(k) (x) Ext(l)).
    """

    tag: str
    k: int = 0
    l: int = 0
    inner: Optional[NaturalBundleKind] = None

    @property
    def source(self):
        if self.tag == "diagonal_base":
            return BASE
        if self.tag == "insert_base":
            return self.inner
        if self.tag == "wedge_to_tensor":
            return ext_power(2)
        if self.tag == "shuffle_split":
            return ext_power(self.k + self.l)
        raise KindMismatch(f"unknown natural map {self.tag}")

    @property
    def target(self):
        if self.tag == "diagonal_base":
            return product_kind(BASE, BASE)
        if self.tag == "insert_base":
            return product_kind(BASE, self.inner)
        if self.tag == "wedge_to_tensor":
            return TENSOR_SQUARE
        if self.tag == "shuffle_split":
            return tensor_kind(ext_power(self.k), ext_power(self.l))
        raise KindMismatch(f"unknown natural map {self.tag}")


DIAGONAL_BASE = NaturalMap("diagonal_base")
WEDGE_TO_TENSOR = NaturalMap("wedge_to_tensor")


def insert_base(inner):
    return NaturalMap("insert_base", inner=inner)


def shuffle_split(k, l):
    return NaturalMap("shuffle_split", k, l)


def eval_natural_map(eta: NaturalMap, y: FiberPoint) -> FiberPoint:
    if y.kind != eta.source:
        raise KindMismatch(f"{eta.tag} expects {eta.source}, got {y.kind}")
    x = y.x
    if eta.tag == "diagonal_base":
        return FiberPoint(eta.target, x, (base_point(x), base_point(x)))
    if eta.tag == "insert_base":
        return FiberPoint(eta.target, x, (base_point(x), y))
    if eta.tag == "wedge_to_tensor":
        terms = []
        for c, (z1, z2) in y.data:
            terms.append((c, tangent_point(x, z1), tangent_point(x, z2)))
            terms.append((-c, tangent_point(x, z2), tangent_point(x, z1)))
        return FiberPoint(eta.target, x, tuple(terms))
    k, l = eta.k, eta.l
    terms = []
    for c, vs in y.data:
        for perm, sign in shuffles(k, l):
            left = FiberPoint(ext_power(k), x, ((1.0, tuple(vs[i] for i in perm[:k])),))
            right = FiberPoint(ext_power(l), x, ((1.0, tuple(vs[i] for i in perm[k:])),))
            terms.append((sign * c, left, right))
    return FiberPoint(eta.target, x, tuple(terms))


def random_fiber_point(kind: NaturalBundleKind, x, rng, scale=1.0) -> FiberPoint:
    n = len(x)
    if kind.tag == "base":
        return base_point(x)
    if kind.tag == "tangent":
        return tangent_point(x, scale * rng.normal(size=n))
    if kind.tag == "ext":
        return wedge_point(x, *(scale * rng.normal(size=n) for _ in range(kind.k)))
    if kind.tag == "tensor":
        return tensor_point(random_fiber_point(kind.factors[0], x, rng, scale),
                            random_fiber_point(kind.factors[1], x, rng, scale))
    return product_point(random_fiber_point(kind.factors[0], x, rng, scale),
                         random_fiber_point(kind.factors[1], x, rng, scale))

