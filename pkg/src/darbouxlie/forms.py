"""Vector-valued differential forms as bundle maps from tangent powers."""
from __future__ import annotations

import itertools

import numpy as np

from .associated import BundleMap, GSpace
from .errors import KindMismatch
from .natural import (BASE, TANGENT, TENSOR_SQUARE, FiberPoint, base_point, ext_power,
                      permutation_sign, tangent_point)


def antisymmetrize(coeff):
    """Alternate the trailing ``k`` axes of ``(m,) + (n,)*k`` (divided by ``k!``)."""
    coeff = np.asarray(coeff, dtype=float)
    k = coeff.ndim - 1
    if k <= 1:
        return coeff
    out = np.zeros_like(coeff)
    perms = list(itertools.permutations(range(k)))
    for perm in perms:
        out += permutation_sign(perm) * np.transpose(coeff, (0,) + tuple(1 + p for p in perm))
    return out / len(perms)


def contract(coeff, vectors):
    """``sum coeff[:, i1..ik] Z1[i1] ... Zk[ik]``."""
    out = np.asarray(coeff, dtype=float)
    for v in reversed(vectors):
        out = out @ v
    return out


def form_map(coeff, k, target: GSpace, source=None, name="") -> BundleMap:
    """A ``k``-form with values in a module given by its coefficient tensor field.

    ``coeff(x)`` returns an array ``(m,) + (n,)*k`` alternating in the last
    ``k`` axes.  ``source`` defaults to ``Ext^k`` (``Base`` for ``k = 0``);
    pass ``TANGENT`` for a 1-form on ``TM``.
    """
    if source is None:
        source = BASE if k == 0 else ext_power(k)
    if source == TANGENT and k != 1:
        raise KindMismatch("only 1-forms act on the tangent bundle")

    def ev(y):
        c = coeff(y.x)
        if source == BASE:
            return np.asarray(c, dtype=float)
        if source == TANGENT:
            return c @ y.data
        out = 0.0
        for w, vs in y.data:
            out = out + w * contract(c, vs)
        return np.asarray(out, dtype=float) * np.ones(c.shape[0])

    return BundleMap(source, target, ev, source != BASE, name)


def bilinear_map(coeff, target: GSpace, name="") -> BundleMap:
    """A map ``T M (x) T M -> V`` with coefficients ``(m, n, n)`` (no symmetry assumed)."""

    def ev(y):
        c = coeff(y.x)
        out = np.zeros(c.shape[0])
        for w, a, b in y.data:
            out = out + w * ((c @ b.data) @ a.data)
        return out

    return BundleMap(TENSOR_SQUARE, target, ev, True, name)


def fiber_of(kind, x, vectors):
    """Decomposable fiber point of ``kind`` built from ``vectors`` at ``x``."""
    if kind == BASE:
        return base_point(x)
    if kind == TANGENT:
        return tangent_point(x, vectors[0])
    return FiberPoint(kind, x, ((1.0, tuple(np.asarray(v, dtype=float) for v in vectors)),))


def degree(kind):
    if kind == BASE:
        return 0
    if kind == TANGENT:
        return 1
    if kind.tag == "ext":
        return kind.k
    raise KindMismatch(f"{kind} is not a form degree")


def evaluate(beta: BundleMap, x, vectors):
    return beta(fiber_of(beta.source, x, vectors))
