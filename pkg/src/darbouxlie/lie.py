"""Matrix Lie groups, their algebras and representations.

Groups are described by a :class:`MatrixLieGroup`; its methods work on raw
``numpy`` matrices so that the bundle code can stay array based.  The
module-level functions (:func:`exp`, :func:`log`, :func:`adjoint`, ...) take
the validated :class:`GroupElement` / :class:`AlgebraElement` wrappers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import stencil
from .errors import NotMember, OutOfBranch, ProjectionResidual

EXP_SERIES_TERMS = 18
EXP_SCALE_TARGET = 0.5
SQRT_ITERATIONS = 20
SQRT_RESIDUAL = 1e-13
PROJECTION_TOL = 1e-6


def expm(a):
    """Matrix exponential by scaling and squaring of a Taylor series.

    Works on a single matrix or a stack ``(..., n, n)``.
    """
    a = np.asarray(a, dtype=float)
    norm = np.max(np.abs(a).sum(axis=-1)) if a.size else 0.0
    squarings = 0
    if norm > EXP_SCALE_TARGET:
        squarings = int(np.ceil(np.log2(norm / EXP_SCALE_TARGET)))
    x = a / 2.0**squarings
    eye = np.broadcast_to(np.eye(a.shape[-1]), a.shape)
    # Horner: I + x(I + x/2(I + x/3(...)))
    result = eye.copy()
    for k in range(EXP_SERIES_TERMS, 0, -1):
        result = eye + (x @ result) / k
    for _ in range(squarings):
        result = result @ result
    return result


def sqrtm_db(a):
    """Principal square root by the Denman-Beavers iteration."""
    y = np.array(a, dtype=float)
    z = np.eye(y.shape[0])
    scale = max(1.0, np.linalg.norm(a))
    for _ in range(SQRT_ITERATIONS):
        y, z = 0.5 * (y + np.linalg.inv(z)), 0.5 * (z + np.linalg.inv(y))
        if np.linalg.norm(y @ y - a) <= SQRT_RESIDUAL * scale:
            break
    return y


def logm(g):
    """Principal matrix logarithm for ``||g - I||_2 < 1``.

    Takes square roots until ``g`` is within 0.25 of the identity, then sums
    the Mercator series and undoes the scaling.
    """
    g = np.asarray(g, dtype=float)
    eye = np.eye(g.shape[0])
    dist = np.linalg.norm(g - eye, 2)
    if not dist < 1.0:
        raise OutOfBranch(f"||g - I||_2 = {dist:.3g} is not < 1")
    roots = 0
    y = g
    while np.linalg.norm(y - eye, 2) > 0.25:
        y = sqrtm_db(y)
        roots += 1
    x = y - eye
    term = x.copy()
    total = x.copy()
    for k in range(2, 200):
        term = -term @ x
        inc = term / k
        total = total + inc
        if np.max(np.abs(inc)) < 1e-18:
            break
    return total * 2.0**roots


def hat3(u):
    """so(3) hat map; accepts ``(..., 3)``."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape[:-1] + (3, 3))
    out[..., 0, 1] = -u[..., 2]
    out[..., 0, 2] = u[..., 1]
    out[..., 1, 0] = u[..., 2]
    out[..., 1, 2] = -u[..., 0]
    out[..., 2, 0] = -u[..., 1]
    out[..., 2, 1] = u[..., 0]
    return out


@dataclass(frozen=True, eq=False)
class MatrixLieGroup:
    """A matrix Lie group with a basis of its Lie algebra.

    ``kind`` is one of ``"GL"``, ``"SO3"``, ``"T"`` (translations of R^d as
    unitriangular ``(d+1) x (d+1)`` matrices).
    """

    name: str
    kind: str
    n: int
    basis: np.ndarray
    membership_tol: float = 1e-8
    _pinv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        flat = self.basis.reshape(len(self.basis), self.n * self.n).T
        if flat.shape[1] and np.linalg.matrix_rank(flat) != flat.shape[1]:
            raise ValueError("algebra basis is linearly dependent")
        pinv = np.linalg.pinv(flat) if flat.shape[1] else np.zeros((0, flat.shape[0]))
        object.__setattr__(self, "_pinv", pinv)

    def __repr__(self):
        return f"MatrixLieGroup({self.name})"

    @property
    def dim(self):
        return len(self.basis)

    @property
    def identity(self):
        return np.eye(self.n)

    def hat(self, coords):
        """Algebra coordinates ``(..., dim)`` to matrices ``(..., n, n)``."""
        coords = np.asarray(coords, dtype=float)
        if self.kind == "SO3":
            return hat3(coords)
        return np.tensordot(coords, self.basis, axes=([-1], [0]))

    def vee_residual(self, a):
        """Least-squares algebra coordinates of ``a`` and the residual norm."""
        a = np.asarray(a, dtype=float)
        flat = a.reshape(a.shape[:-2] + (-1,))
        coords = flat @ self._pinv.T
        resid = flat - self.hat(coords).reshape(flat.shape)
        return coords, float(np.max(np.abs(resid))) if resid.size else 0.0

    def vee(self, a, tol=PROJECTION_TOL):
        coords, resid = self.vee_residual(a)
        scale = 1.0 + float(np.max(np.abs(a))) if np.size(a) else 1.0
        if resid > tol * scale:
            raise ProjectionResidual(f"algebra projection residual {resid:.3g} exceeds {tol:g}")
        return coords

    def project(self, a, tol=PROJECTION_TOL):
        return self.hat(self.vee(a, tol))

    def bracket(self, a, b):
        return a @ b - b @ a

    def is_member(self, g, tol=None):
        tol = self.membership_tol if tol is None else tol
        g = np.asarray(g, dtype=float)
        if g.shape != (self.n, self.n) or not np.all(np.isfinite(g)):
            return False
        if self.kind == "GL":
            return abs(np.linalg.det(g)) > tol
        if self.kind == "SO3":
            return (np.max(np.abs(g.T @ g - np.eye(3))) <= tol
                    and np.linalg.det(g) > 0)
        d = self.n - 1
        pattern = g.copy()
        pattern[:d, d] = 0.0
        return np.max(np.abs(pattern - np.eye(self.n))) <= tol

    def inverse(self, g):
        if self.kind == "SO3":
            return np.swapaxes(g, -1, -2)
        return np.linalg.inv(g)

    def exp(self, a):
        return expm(a)

    def log(self, g):
        return logm(g)

    def adjoint(self, g, a):
        return g @ a @ self.inverse(g)

    def adjoint_coords(self, g, coords):
        return self.vee(self.adjoint(g, self.hat(coords)))

    def random_algebra(self, rng, scale=1.0):
        """Random algebra matrix with coordinates of norm at most ``scale``."""
        c = rng.normal(size=self.dim)
        norm = np.linalg.norm(c)
        if norm > 0:
            c *= scale * rng.uniform(0.2, 1.0) / norm
        return self.hat(c)

    def random_element(self, rng, scale=1.0):
        return expm(self.random_algebra(rng, scale))


def _elementary(n, pairs):
    out = np.zeros((len(pairs), n, n))
    for k, (i, j) in enumerate(pairs):
        out[k, i, j] = 1.0
    return out


def same_group(g1: MatrixLieGroup, g2: MatrixLieGroup) -> bool:
    """Structural equality: same kind, matrix size and algebra basis."""
    return g1 is g2 or (g1.kind == g2.kind and g1.n == g2.n
                        and np.array_equal(g1.basis, g2.basis))


def gl(n):
    return MatrixLieGroup(f"GL({n})", "GL", n,
                          _elementary(n, [(i, j) for i in range(n) for j in range(n)]))


def so3():
    return MatrixLieGroup("SO(3)", "SO3", 3, hat3(np.eye(3)))


def translation(d):
    return MatrixLieGroup(f"Translation(R^{d})", "T", d + 1,
                          _elementary(d + 1, [(i, d) for i in range(d)]))


@dataclass(frozen=True)
class GroupElement:
    group: MatrixLieGroup
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if not self.group.is_member(m):
            raise NotMember(f"matrix is not an element of {self.group.name}")
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other):
        return GroupElement(self.group, self.matrix @ other.matrix)

    def inverse(self):
        return GroupElement(self.group, self.group.inverse(self.matrix))


@dataclass(frozen=True)
class AlgebraElement:
    group: MatrixLieGroup
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        coords, resid = self.group.vee_residual(m)
        if resid > 1e-10 * (1.0 + np.max(np.abs(m), initial=0.0)):
            raise ProjectionResidual(f"matrix is not in the Lie algebra of {self.group.name}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_coords(cls, group, coords):
        return cls(group, group.hat(coords))

    @property
    def coords(self):
        return self.group.vee(self.matrix)

    def __neg__(self):
        return AlgebraElement(self.group, -self.matrix)

    def __add__(self, other):
        return AlgebraElement(self.group, self.matrix + other.matrix)

    def __rmul__(self, c):
        return AlgebraElement(self.group, c * self.matrix)


def exp(a: AlgebraElement) -> GroupElement:
    return GroupElement(a.group, expm(a.matrix))


def log(g: GroupElement) -> AlgebraElement:
    """Principal logarithm; raises :class:`OutOfBranch` unless ``||g - I||_2 < 1``."""
    return AlgebraElement(g.group, g.group.project(logm(g.matrix)))


def adjoint(g: GroupElement, a: AlgebraElement) -> AlgebraElement:
    if g.group is not a.group:
        raise ValueError("group mismatch")
    return AlgebraElement(a.group, g.group.adjoint(g.matrix, a.matrix))


def mc_matrix(group, curve, t0=0.0, scheme="central4", eps=1e-3):
    """``g(t0)^{-1} g'(t0)`` projected onto the algebra; ``curve`` returns matrices."""
    gdot = stencil.derivative(lambda t: np.asarray(curve(t), dtype=float), t0, scheme, eps)
    return group.project(group.inverse(np.asarray(curve(t0), dtype=float)) @ gdot)


def mc_derivative(curve: Callable, t0: float = 0.0, scheme: str = "central4",
                  eps: float = 1e-3, group: Optional[MatrixLieGroup] = None) -> AlgebraElement:
    """Maurer-Cartan derivative of a group-valued curve.

    ``curve`` may return :class:`GroupElement` objects or plain matrices (in
    which case ``group`` is required).
    """
    start = curve(t0)
    if isinstance(start, GroupElement):
        group = start.group
        raw = lambda t: curve(t).matrix  # noqa: E731
    else:
        if group is None:
            raise TypeError("group is required for matrix-valued curves")
        raw = curve
    return AlgebraElement(group, mc_matrix(group, raw, t0, scheme, eps))


@dataclass(frozen=True, eq=False)
class Representation:
    """A linear action of ``group`` on ``R^module_dim``.

    ``apply(g, v)`` takes a group matrix.  ``derivative(a, v)``, when given,
    is the induced algebra action ``d/dt|0 apply(exp(a t), v)``; otherwise it
    is obtained by finite differences.
    """

    group: MatrixLieGroup
    module_dim: int
    apply: Callable
    derivative: Optional[Callable] = None
    name: str = ""

    def matrix_of(self, g):
        return np.column_stack([self.apply(g, e) for e in np.eye(self.module_dim)]) \
            if self.module_dim else np.zeros((0, 0))

    def derivative_matrix(self, a):
        return np.column_stack([algebra_action_matrix(a, e, self) for e in np.eye(self.module_dim)]) \
            if self.module_dim else np.zeros((0, 0))


def algebra_action_matrix(a, v, rep: Representation, scheme="central4", eps=1e-3):
    a = np.asarray(a, dtype=float)
    v = np.asarray(v, dtype=float)
    if rep.derivative is not None:
        return rep.derivative(a, v)
    return stencil.derivative(lambda t: rep.apply(expm(a * t), v), 0.0, scheme, eps)


def algebra_action(a: AlgebraElement, v, rep: Representation):
    """Induced action of a Lie-algebra element on a module vector."""
    v = np.asarray(v, dtype=float)
    if v.shape != (rep.module_dim,):
        raise ValueError(f"expected a vector of length {rep.module_dim}")
    return algebra_action_matrix(a.matrix, v, rep)


def standard_rep(group):
    return Representation(group, group.n, lambda g, v: g @ v, lambda a, v: a @ v,
                          name="standard")


def trivial_rep(group, dim=1):
    return Representation(group, dim, lambda g, v: np.array(v, dtype=float),
                          lambda a, v: np.zeros(dim), name=f"trivial({dim})")


def adjoint_rep(group):
    """Adjoint representation on algebra coordinates."""
    def apply(g, v):
        return group.vee(group.adjoint(g, group.hat(v)))

    def derivative(a, v):
        return group.vee(group.bracket(a, group.hat(v)))

    return Representation(group, group.dim, apply, derivative, name="adjoint")


def direct_sum(r1, r2):
    d1 = r1.module_dim

    def apply(g, v):
        return np.concatenate([r1.apply(g, v[:d1]), r2.apply(g, v[d1:])])

    def derivative(a, v):
        return np.concatenate([algebra_action_matrix(a, v[:d1], r1),
                               algebra_action_matrix(a, v[d1:], r2)])

    return Representation(r1.group, d1 + r2.module_dim, apply, derivative,
                          name=f"({r1.name}+{r2.name})")


def tensor_rep(r1, r2):
    """Tensor product; vectors are ``kron``-ordered (row-major ``d1 x d2``)."""
    d1, d2 = r1.module_dim, r2.module_dim

    def apply(g, v):
        w = np.asarray(v, dtype=float).reshape(d1, d2)
        return (r1.matrix_of(g) @ w @ r2.matrix_of(g).T).ravel()

    def derivative(a, v):
        w = np.asarray(v, dtype=float).reshape(d1, d2)
        return (r1.derivative_matrix(a) @ w + w @ r2.derivative_matrix(a).T).ravel()

    return Representation(r1.group, d1 * d2, apply, derivative,
                          name=f"({r1.name}x{r2.name})")
