"""Products, tensor products, post-composition and the synthesized Leibniz rules."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .associated import (BundleMap, ConjugationSpace, GSpace, ModuleSpace, ProductSpace,
                         check_equivariant, default_form)
from .errors import KindMismatch
from .forms import degree, evaluate
from .lie import adjoint_rep, algebra_action_matrix, tensor_rep
from .natural import (BASE, TANGENT, NaturalMap, WEDGE_TO_TENSOR, eval_natural_map,
                      insert_base, permutation_sign, product_kind, shuffle_split, tensor_kind,
                      DIAGONAL_BASE)

EQUIVARIANCE_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class EquivariantMap:
    """An equivariant ``f: N -> N'``, optionally with its chain-rule factor ``phi``.

    ``phi(z, w)`` maps ``w`` in the module of the default form on ``N`` to the
    module of the default form on ``N'`` so that ``(f^* omega')_z = phi(z) o omega_z``.
    Equivariance is spot-checked on construction.
    """

    source: GSpace
    target: GSpace
    f: Callable
    phi: Optional[Callable] = None
    name: str = ""
    check_seed: int = 0

    def __post_init__(self):
        check_equivariant(self.f, self.source, self.target,
                          np.random.default_rng(self.check_seed), tol=EQUIVARIANCE_TOL)

    def __call__(self, z):
        return self.f(z)


def product_map(h1: BundleMap, h2: BundleMap) -> BundleMap:
    """``(y1, y2) -> (h1(y1), h2(y2))`` into the product space."""
    space = ProductSpace(h1.target, h2.target)

    def ev(y):
        return (h1(y.data[0]), h2(y.data[1]))

    return BundleMap(product_kind(h1.source, h2.source), space, ev, False,
                     f"({h1.name}x{h2.name})")


def tensor_map(h1: BundleMap, h2: BundleMap) -> BundleMap:
    """``y1 (x) y2 -> h1(y1) (x) h2(y2)`` extended linearly over formal sums."""
    for h in (h1, h2):
        if not isinstance(h.target, ModuleSpace):
            raise KindMismatch("tensor products need module-valued maps")
        if not h.linear:
            raise KindMismatch(f"{h.name or 'map'} is not fiberwise linear")
    space = ModuleSpace(tensor_rep(h1.target.rep, h2.target.rep))

    def ev(y):
        out = np.zeros(space.rep.module_dim)
        for c, a, b in y.data:
            out = out + c * np.kron(h1(a), h2(b))
        return out

    return BundleMap(tensor_kind(h1.source, h2.source), space, ev, True,
                     f"({h1.name}(x){h2.name})")


def postcompose(f: EquivariantMap, h: BundleMap) -> BundleMap:
    """``(id x_G f) o h``."""
    if type(h.target) is not type(f.source):
        raise KindMismatch(f"cannot compose {f.name} after a map into {h.target!r}")
    linear = h.linear and isinstance(f.source, ModuleSpace) and isinstance(f.target, ModuleSpace)
    return BundleMap(h.source, f.target, lambda y: f(h(y)), linear, f"{f.name}o{h.name}")


def compose_natural(h: BundleMap, eta: NaturalMap) -> BundleMap:
    """``h o eta_M``."""
    if h.source != eta.target:
        raise KindMismatch(f"{eta.tag} lands in {eta.target}, map expects {h.source}")
    return BundleMap(eta.source, h.target, lambda y: h(eval_natural_map(eta, y)), h.linear,
                     f"{h.name}o{eta.tag}")


def chain_rule(f: EquivariantMap, h: BundleMap, lie_h: BundleMap) -> BundleMap:
    """Derivative of ``(id x_G f) o h`` from the derivative ``lie_h`` of ``h``.

    With ``phi`` registered: ``phi(h(y)) (L h(y))``.  Without it ``f`` must be
    a linear map between modules and the result is ``f(L h(y))``.
    """
    if f.phi is not None:
        ev = lambda y: np.asarray(f.phi(h(y), lie_h(y)), dtype=float)  # noqa: E731
        module = default_form(f.target).module
    elif isinstance(f.source, ModuleSpace) and isinstance(f.target, ModuleSpace):
        ev = lambda y: np.asarray(f(lie_h(y)), dtype=float)  # noqa: E731
        module = f.target.rep
    else:
        raise KindMismatch(f"{f.name} has no phi and is not a map of modules")
    return BundleMap(h.source, ModuleSpace(module), ev, h.linear, f"chain({f.name})")


def times_f_eta(h1: BundleMap, h2: BundleMap, f: EquivariantMap, eta: NaturalMap) -> BundleMap:
    """``h1 x_{f, eta} h2 = (id x_G f) o (h1 x h2) o eta_M``."""
    return postcompose(f, compose_natural(product_map(h1, h2), eta))


def otimes_f_eta(h1: BundleMap, h2: BundleMap, f: EquivariantMap, eta: NaturalMap) -> BundleMap:
    """``h1 (x)_{f, eta} h2`` for linear maps and a linear ``f`` on the tensor module."""
    return postcompose(f, compose_natural(tensor_map(h1, h2), eta))


def leibniz_times(h1, h2, lie1, lie2, f: EquivariantMap, eta: NaturalMap) -> BundleMap:
    """Synthesized derivative of ``h1 x_{f,eta} h2``: ``phi(h1, h2)(L h1, L h2)`` at ``eta(y)``."""
    if f.phi is None:
        raise KindMismatch(f"{f.name} has no registered phi")

    def ev(y):
        y1, y2 = eval_natural_map(eta, y).data
        return np.asarray(f.phi((h1(y1), h2(y2)), np.concatenate([lie1(y1), lie2(y2)])))

    return BundleMap(eta.source, ModuleSpace(default_form(f.target).module), ev, False,
                     "leibniz-times")


def leibniz_otimes(h1, h2, lie1, lie2, f: EquivariantMap, eta: NaturalMap) -> BundleMap:
    """Synthesized derivative of ``h1 (x)_{f,eta} h2``: ``f(L h1 (x) h2 + h1 (x) L h2)``."""

    def ev(y):
        out = 0.0
        for c, y1, y2 in eval_natural_map(eta, y).data:
            out = out + c * f(np.kron(lie1(y1), h2(y2)) + np.kron(h1(y1), lie2(y2)))
        return np.asarray(out, dtype=float)

    return BundleMap(eta.source, f.target, ev, True, "leibniz-otimes")


# Standard equivariant maps.

def action_map(group, rep) -> EquivariantMap:
    """``G x V -> V``, ``(g, v) -> g v`` with ``phi(g, v)(a, u) = g(a v + u)``."""
    source = ProductSpace(ConjugationSpace(group), ModuleSpace(rep))
    target = ModuleSpace(rep)
    d = group.dim

    def phi(z, w):
        g, v = z
        return rep.apply(g, algebra_action_matrix(group.hat(w[:d]), v, rep) + w[d:])

    return EquivariantMap(source, target, lambda z: rep.apply(z[0], z[1]), phi, "action")


def multiplication_map(group) -> EquivariantMap:
    """``mu: G x G -> G`` with ``phi(h1, h2)(a1, a2) = Ad_{h2^-1}(a1) + a2``."""
    conj = ConjugationSpace(group)
    source = ProductSpace(conj, ConjugationSpace(group))
    d = group.dim

    def phi(z, w):
        return group.adjoint_coords(group.inverse(z[1]), w[:d]) + w[d:]

    return EquivariantMap(source, conj, lambda z: z[0] @ z[1], phi, "mult")


def algebra_action_map(group, rep) -> EquivariantMap:
    """Linear ``g (x) V -> V``, ``a (x) v -> a v``."""
    source = ModuleSpace(tensor_rep(adjoint_rep(group), rep))
    target = ModuleSpace(rep)
    m = rep.module_dim
    basis = group.basis

    def f(w):
        w = np.asarray(w, dtype=float).reshape(group.dim, m)
        return sum(algebra_action_matrix(basis[i], w[i], rep) for i in range(group.dim))

    return EquivariantMap(source, target, f, None, "g-action")


def linear_module_map(source_rep, target_rep, matrix, name="linear") -> EquivariantMap:
    matrix = np.asarray(matrix, dtype=float)
    return EquivariantMap(ModuleSpace(source_rep), ModuleSpace(target_rep),
                          lambda v: matrix @ v, None, name)


# Worked instances.

def mult_section_map(s: BundleMap, beta: BundleMap) -> BundleMap:
    """``s . beta`` for ``s`` a section into the conjugation space."""
    if s.source != BASE or not isinstance(s.target, ConjugationSpace):
        raise KindMismatch("s must be a section of the conjugation bundle")
    if not isinstance(beta.target, ModuleSpace):
        raise KindMismatch("beta must be module valued")
    out = times_f_eta(s, beta, action_map(s.target.group, beta.target.rep),
                      insert_base(beta.source))
    return BundleMap(out.source, out.target, out.rep, beta.linear, f"{s.name}.{beta.name}")


def mult_sections(s1: BundleMap, s2: BundleMap) -> BundleMap:
    """Pointwise product ``s1 . s2`` of two group-valued sections."""
    for s in (s1, s2):
        if s.source != BASE or not isinstance(s.target, ConjugationSpace):
            raise KindMismatch("both factors must be sections of the conjugation bundle")
    return times_f_eta(s1, s2, multiplication_map(s1.target.group), DIAGONAL_BASE)


def wedge_split(alpha: BundleMap, beta: BundleMap) -> NaturalMap:
    k, l = degree(alpha.source), degree(beta.source)
    if alpha.source == TANGENT and beta.source == TANGENT:
        return WEDGE_TO_TENSOR
    if TANGENT in (alpha.source, beta.source):
        raise KindMismatch("mix of tangent and exterior sources")
    return shuffle_split(k, l)


def wedge(alpha: BundleMap, beta: BundleMap) -> BundleMap:
    """``alpha ^ beta`` for a g-valued ``k``-form and a V-valued ``l``-form."""
    if not isinstance(alpha.target, ModuleSpace) or alpha.target.rep.name != "adjoint":
        raise KindMismatch("alpha must take values in the adjoint module")
    if not isinstance(beta.target, ModuleSpace):
        raise KindMismatch("beta must be module valued")
    group = beta.target.group
    out = otimes_f_eta(alpha, beta, algebra_action_map(group, beta.target.rep),
                       wedge_split(alpha, beta))
    return BundleMap(out.source, out.target, out.rep, True, f"{alpha.name}^{beta.name}")


def wedge_brute_force(alpha: BundleMap, beta: BundleMap, x, vectors):
    """``1/(k! l!) sum_sigma sign(sigma) alpha(..) . beta(..)`` over all permutations."""
    k, l = degree(alpha.source), degree(beta.source)
    rep = beta.target.rep
    group = beta.target.group
    out = 0.0
    for perm in itertools.permutations(range(k + l)):
        a = evaluate(alpha, x, [vectors[i] for i in perm[:k]])
        b = evaluate(beta, x, [vectors[i] for i in perm[k:]])
        out = out + permutation_sign(perm) * algebra_action_matrix(group.hat(a), b, rep)
    return out / (math.factorial(k) * math.factorial(l))


def sum_maps(*maps: BundleMap) -> BundleMap:
    first = maps[0]
    for m in maps[1:]:
        if m.source != first.source:
            raise KindMismatch("summands live on different bundles")

    def ev(y):
        return sum(np.asarray(m(y), dtype=float) for m in maps)

    return BundleMap(first.source, first.target, ev, all(m.linear for m in maps), "sum")

