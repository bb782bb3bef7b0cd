"""Central finite-difference stencils.

Values may be arrays or nested tuples of arrays; the weighted sums are taken
leaf by leaf so product spaces need no special handling.
"""
from __future__ import annotations

import numpy as np

SCHEMES = ("central2", "central4")


def nodes(scheme="central4", eps=1e-3):
    """Return ``(offsets, weights)`` with ``f'(t0) ~ sum(w * f(t0 + offset))``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if scheme == "central2":
        return np.array([-eps, eps]), np.array([-1.0, 1.0]) / (2 * eps)
    if scheme == "central4":
        return (np.array([-2 * eps, -eps, eps, 2 * eps]),
                np.array([1.0, -8.0, 8.0, -1.0]) / (12 * eps))
    raise ValueError(f"unknown stencil {scheme!r}; expected one of {SCHEMES}")


def tree_combine(weights, values):
    """sum_i weights[i] * values[i], recursing into tuples."""
    first = values[0]
    if isinstance(first, tuple):
        return tuple(tree_combine(weights, [v[i] for v in values]) for i in range(len(first)))
    out = weights[0] * np.asarray(first, dtype=float)
    for w, v in zip(weights[1:], values[1:]):
        out = out + w * np.asarray(v, dtype=float)
    return out


def tree_sub(a, b):
    if isinstance(a, tuple):
        return tuple(tree_sub(x, y) for x, y in zip(a, b))
    return np.asarray(a, dtype=float) - np.asarray(b, dtype=float)


def tree_add(a, b):
    if isinstance(a, tuple):
        return tuple(tree_add(x, y) for x, y in zip(a, b))
    return np.asarray(a, dtype=float) + np.asarray(b, dtype=float)


def tree_scale(c, a):
    if isinstance(a, tuple):
        return tuple(tree_scale(c, x) for x in a)
    return c * np.asarray(a, dtype=float)


def tree_flatten(a):
    if isinstance(a, tuple):
        return np.concatenate([tree_flatten(x) for x in a]) if a else np.zeros(0)
    return np.ravel(np.asarray(a, dtype=float))


def derivative(f, t0=0.0, scheme="central4", eps=1e-3):
    """Finite-difference derivative of ``f`` at ``t0``."""
    offsets, weights = nodes(scheme, eps)
    return tree_combine(weights, [f(t0 + s) for s in offsets])
