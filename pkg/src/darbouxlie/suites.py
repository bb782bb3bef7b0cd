"""Verification suites.

Each suite draws random configurations on the scenario's chart, evaluates an
identity two ways and records the worst error per case.  Scenario entities
named in a suite selection (field, section, vertical, connection, form) are
used where their kind fits; everything else is seeded random polynomial data.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import __version__
from .associated import (ConjugationSpace, ModuleSpace, ProductSpace, Sphere2,
                         default_form)
from .covariant import (CovariantContext, classical_exterior_derivative,
                        classical_lie_derivative, covariant_lie, covariant_lie_via_lift,
                        exterior_covariant_derivative)
from .darboux import (DarbouxContext, context_for, darboux_lie, darboux_lie_direct,
                      darboux_lie_map, darboux_lie_vertical_closed, trautman_lift,
                      trautman_lift_direct)
from .errors import LeftDomain, UnknownSuite
from .flows import Chart, FlowConfig, flow, linear_field
from .forms import bilinear_map
from .leibniz import (action_map, algebra_action_map, chain_rule, compose_natural,
                      leibniz_otimes, leibniz_times, linear_module_map, mult_section_map,
                      mult_sections, multiplication_map, postcompose, product_map, tensor_map,
                      wedge)
from .lie import adjoint_rep, direct_sum, expm
from .natural import (BASE, DIAGONAL_BASE, TANGENT, WEDGE_TO_TENSOR, base_point,
                      canonical_flow_batch, canonical_flow_rows,
                      coordinates, eval_natural_map, ext_power, insert_base,
                      product_point, random_fiber_point, shuffle_split, tensor_point)
from .principal import (InvariantVectorField, divide, flat_connection, horizontal_lift,
                        PrincipalPoint, vertical_from_section)
from .sampling import (Quadratic, poly_field, random_connection, random_field, random_form,
                       random_group_section, random_map, random_module_section,
                       random_quadratic, random_vertical_coords, star_omega_exact)
from .stencil import nodes, tree_combine, tree_flatten

MASK64 = (1 << 64) - 1
MAX_SKIP_FRACTION = 0.2
SAMPLE_MARGIN = 0.05
CONVERGENCE_EPS = (4e-3, 2e-3, 1e-3)
CONVERGENCE_TARGET = 16.0
CONVERGENCE_TOL = 4.0 / 17.0  # |ratio - 16| / 17 <= 4/17  <=>  ratio in [12, 20]
CONVERGENCE_NORM = 9.0
RK4_ORACLE_STEPS = (8, 16, 32)


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def case_seed(seed: int, suite: str, index: int) -> int:
    """Independent stream per (seed, suite, case index)."""
    return splitmix64((splitmix64(seed ^ zlib.crc32(suite.encode())) + index) & MASK64)


@dataclass(frozen=True)
class RunOptions:
    eps: Optional[float] = None
    stencil: Optional[str] = None
    rk4_steps: Optional[int] = None
    samples: Optional[int] = None
    seed: Optional[int] = None


@dataclass
class CaseResult:
    name: str
    samples: int
    skipped: int
    max_abs_err: Optional[float]
    max_rel_err: Optional[float]
    tol: float
    passed: bool

    def to_dict(self):
        return {"name": self.name, "samples": self.samples, "skipped": self.skipped,
                "max_abs_err": self.max_abs_err, "max_rel_err": self.max_rel_err,
                "tol": self.tol, "pass": self.passed}


class Env:
    """Per-suite state: configuration, spaces, role lookup and case streams."""

    def __init__(self, scenario, suite, selection=None, options=RunOptions()):
        self.sc = scenario
        self.suite = suite
        self.selection = selection
        self.cfg = scenario.flow_config(fd_eps=options.eps, fd_scheme=options.stencil,
                                        rk4_steps=options.rk4_steps)
        self.seed = scenario.seed if options.seed is None else options.seed
        self.samples = options.samples or scenario.config.get("samples")
        self.group = scenario.group
        self.chart = scenario.chart
        self.n = self.chart.dim
        self.V = ModuleSpace(scenario.module)
        self.A = ModuleSpace(adjoint_rep(self.group))
        self.C = ConjugationSpace(self.group)
        self.cases = []

    # sampling helpers
    def point(self, rng):
        return self.chart.sample(rng, self.cfg.domain_guard + SAMPLE_MARGIN)

    def role(self, key):
        return None if self.selection is None else self.selection.role(key)

    def field(self, rng, scale=0.5):
        name = self.role("field")
        return self.sc.fields[name][1] if name else random_field(self.chart, rng, scale)

    def vertical_coords(self, rng, scale=1.0):
        name = self.role("vertical")
        if name and self.sc.sections[name].target == "g":
            return self.sc.sections[name].fn
        return random_vertical_coords(self.group, self.chart, rng, scale)

    def invariant(self, rng):
        a = self.vertical_coords(rng)
        return InvariantVectorField(self.group, self.field(rng), lambda x: self.group.hat(a(x)))

    def module_section(self, rng):
        name = self.role("section")
        if name and self.sc.sections[name].target == "V":
            return self.sc.sections[name].bundle_map
        return random_module_section(self.V, self.chart, rng)

    def group_section(self, rng):
        name = self.role("section")
        if name and self.sc.sections[name].target == "G":
            return self.sc.sections[name].bundle_map
        return random_group_section(self.group, self.chart, rng)

    def connection(self, rng, scale=0.5):
        name = self.role("connection")
        if name:
            return self.sc.connections[name][1]
        return random_connection(self.chart, self.group, rng, scale)

    def form(self, rng, k, space=None):
        space = space or self.V
        name = self.role("form")
        if name:
            spec = self.sc.forms[name]
            want = "V" if space is self.V else "g"
            if spec.degree == k and spec.target == want:
                return spec.bundle_map
        return random_form(self.chart, k, space, rng)

    def sample_count(self, default):
        return int(self.samples or default)

    def lie(self, h, Xt, omega=None, cfg=None):
        return darboux_lie_map(context_for(h, omega, cfg or self.cfg), Xt, h)

    # case execution
    def case(self, name, tol, default_samples, sample: Callable, absolute=False):
        index = len(self.cases)
        rng = np.random.default_rng(case_seed(self.seed, self.suite, index))
        total = self.sample_count(default_samples)
        worst_abs = worst_rel = 0.0
        skipped = 0
        for _ in range(total):
            try:
                value, ref = sample(rng)
            except LeftDomain:
                skipped += 1
                continue
            value, ref = tree_flatten(value), tree_flatten(ref)
            err = float(np.max(np.abs(value - ref), initial=0.0))
            rel = err if absolute else err / (1.0 + float(np.max(np.abs(ref), initial=0.0)))
            worst_abs, worst_rel = max(worst_abs, err), max(worst_rel, rel)
        if skipped > MAX_SKIP_FRACTION * total or skipped == total:
            result = CaseResult(name, total, skipped, None, None, tol, False)
        else:
            result = CaseResult(name, total, skipped, worst_abs, worst_rel, tol,
                                bool(worst_rel <= tol))
        self.cases.append(result)
        return result


def _vector_kinds(n):
    kinds = [BASE, TANGENT]
    if n >= 2:
        kinds.append(ext_power(2))
    return kinds


def _targets(env):
    out = [("module", env.V), ("conjugation", env.C)]
    if env.group.kind == "SO3":
        out.append(("sphere", Sphere2(env.group)))
    out.append(("product", ProductSpace(env.C, env.V)))
    return out


def suite_division(env: Env):
    group = env.group

    def triple(rng):
        x = env.point(rng)
        p = PrincipalPoint(x, group.random_element(rng, 1.0))
        q = PrincipalPoint(x, group.random_element(rng, 1.0))
        return p, q, group.random_element(rng, 1.0)

    def left(rng):
        p, q, g = triple(rng)
        return divide(p.act(g), q, group), group.inverse(g) @ divide(p, q, group)

    def right(rng):
        p, q, g = triple(rng)
        return divide(p, q.act(g), group), divide(p, q, group) @ g

    def swap(rng):
        p, q, _ = triple(rng)
        return divide(q, p, group), group.inverse(divide(p, q, group))

    def self_div(rng):
        p, _, _ = triple(rng)
        return divide(p, p, group), group.identity

    for name, fn in (("left-translate", left), ("right-translate", right), ("swap", swap),
                     ("self", self_div)):
        env.case(name, 1e-12, 100, fn, absolute=True)


def suite_flow_consistency(env: Env):
    kinds = _vector_kinds(env.n)
    group, chart = env.group, env.chart

    for label, space in _targets(env):
        def sample(rng, space=space):
            F = kinds[rng.integers(len(kinds))]
            Xt = env.invariant(rng)
            h = random_map(space, F, chart, rng)
            y = random_fiber_point(F, env.point(rng), rng)
            ctx = DarbouxContext(group, F, space, cfg=env.cfg)
            return darboux_lie(ctx, Xt, h, y), darboux_lie_direct(ctx, Xt, h, y)
        env.case(label, 1e-5, 50, sample)

    def frame(rng):
        space = (env.V, env.C)[rng.integers(2)]
        F = kinds[rng.integers(len(kinds))]
        Xt = env.invariant(rng)
        h = random_map(space, F, chart, rng)
        y = random_fiber_point(F, env.point(rng), rng)
        ctx = DarbouxContext(group, F, space, cfg=env.cfg)
        g = group.random_element(rng, 1.0)
        moved = darboux_lie(ctx, Xt, h, y, frame=g)
        return ctx.omega.module.apply(g, moved), darboux_lie(ctx, Xt, h, y)
    env.case("frame-independence", 1e-7, 20, frame)

    def additivity(rng):
        space = (env.V, env.C)[rng.integers(2)]
        X1, X2 = env.invariant(rng), env.invariant(rng)
        h = random_map(space, TANGENT, chart, rng)
        y = random_fiber_point(TANGENT, env.point(rng), rng)
        c1, c2 = rng.normal(size=2)
        ctx = DarbouxContext(group, TANGENT, space, cfg=env.cfg)
        lhs = darboux_lie(ctx, c1 * X1 + c2 * X2, h, y)
        return lhs, c1 * darboux_lie(ctx, X1, h, y) + c2 * darboux_lie(ctx, X2, h, y)
    env.case("linearity", 1e-5, 20, additivity)

    big = Chart.cube(env.n, 10.0)

    def maps(rng):
        h = random_quadratic(rng, (env.n,), env.n, 0.3)
        return h, poly_field(big, random_quadratic(rng, (env.n,), env.n, 0.5))

    def lift(rng):
        h, X2 = maps(rng)
        X1 = poly_field(big, random_quadratic(rng, (env.n,), env.n, 0.5))
        x = rng.uniform(-1, 1, env.n)
        return trautman_lift(h, X1, X2, x, env.cfg), trautman_lift_direct(h, X1, X2, x)
    env.case("trautman-direct", 1e-5, 20, lift)

    def composition(rng):
        h1, X2 = maps(rng)
        h2, X3 = maps(rng)
        X1 = poly_field(big, random_quadratic(rng, (env.n,), env.n, 0.5))
        x = rng.uniform(-1, 1, env.n)
        lhs = trautman_lift(lambda z: h2(h1(z)), X1, X3, x, env.cfg)
        rhs = h2.derivative(h1(x)) @ trautman_lift(h1, X1, X2, x, env.cfg) \
            + trautman_lift(h2, X2, X3, h1(x), env.cfg)
        return lhs, rhs
    env.case("trautman-composition", 1e-5, 20, composition)


def _vertical(env, rng, scale=1.0):
    a = env.vertical_coords(rng, scale)
    return a, vertical_from_section(env.group, env.chart, a)


def suite_prop41(env: Env):
    def section(rng):
        a, Xa = _vertical(env, rng)
        h = env.module_section(rng)
        y = base_point(env.point(rng))
        return env.lie(h, Xa)(y), darboux_lie_vertical_closed(a, h, "module")(y)
    env.case("section", 1e-5, 50, section)

    def form(rng):
        a, Xa = _vertical(env, rng)
        h = random_map(env.V, TANGENT, env.chart, rng)
        y = random_fiber_point(TANGENT, env.point(rng), rng)
        return env.lie(h, Xa)(y), darboux_lie_vertical_closed(a, h, "module")(y)
    env.case("one-form", 1e-5, 50, form)

    if env.group.kind == "SO3" and env.sc.module_name == "standard":
        def cross(rng):
            a, Xa = _vertical(env, rng)
            h = env.module_section(rng)
            x = env.point(rng)
            return env.lie(h, Xa)(base_point(x)), -np.cross(a(x), h(base_point(x)))
        env.case("cross-product", 1e-5, 50, cross)


def suite_prop42(env: Env):
    def section(rng):
        a, Xa = _vertical(env, rng)
        h = env.group_section(rng)
        y = base_point(env.point(rng))
        return env.lie(h, Xa)(y), darboux_lie_vertical_closed(a, h, "conjugation")(y)
    env.case("group-section", 1e-5, 50, section)

    def tangent(rng):
        a, Xa = _vertical(env, rng)
        h = random_map(env.C, TANGENT, env.chart, rng)
        y = random_fiber_point(TANGENT, env.point(rng), rng)
        return env.lie(h, Xa)(y), darboux_lie_vertical_closed(a, h, "conjugation")(y)
    env.case("tangent-map", 1e-5, 50, tangent)


def _generic_space(env):
    if env.group.kind == "SO3":
        return "sphere", Sphere2(env.group)
    return "conjugation", env.C


def suite_generic_star(env: Env):
    label, space = _generic_space(env)
    omega = default_form(space)

    def closed(rng):
        a, Xa = _vertical(env, rng)
        h = random_map(space, BASE, env.chart, rng)
        y = base_point(env.point(rng))
        ref = darboux_lie_vertical_closed(a, h, "generic", omega, env.cfg.fd_scheme,
                                          env.cfg.fd_eps)(y)
        return env.lie(h, Xa, omega)(y), ref
    env.case(label, 1e-5, 50, closed)

    def exact(rng):
        a, Xa = _vertical(env, rng)
        h = random_map(space, TANGENT, env.chart, rng)
        y = random_fiber_point(TANGENT, env.point(rng), rng)
        ref = -star_omega_exact(env.group.hat(a(y.x)), h(y), omega)
        return env.lie(h, Xa, omega)(y), ref
    env.case(f"{label}-orbit", 1e-5, 50, exact)


def suite_leibniz(env: Env):
    group, chart, V, A, C = env.group, env.chart, env.V, env.A, env.C
    tol = 1e-4

    def product(rng):
        Xt = env.invariant(rng)
        h1 = random_map(C, BASE, chart, rng)
        h2 = random_map(V, TANGENT, chart, rng)
        x = env.point(rng)
        y1, y2 = base_point(x), random_fiber_point(TANGENT, x, rng)
        lhs = env.lie(product_map(h1, h2), Xt)(product_point(y1, y2))
        return lhs, np.concatenate([env.lie(h1, Xt)(y1), env.lie(h2, Xt)(y2)])
    env.case("product", tol, 30, product)

    def tensor(rng):
        Xt = env.invariant(rng)
        h1 = random_form(chart, 1, A, rng, source=TANGENT)
        h2 = random_form(chart, 1, V, rng, source=TANGENT)
        x = env.point(rng)
        y1, y2 = random_fiber_point(TANGENT, x, rng), random_fiber_point(TANGENT, x, rng)
        lhs = env.lie(tensor_map(h1, h2), Xt)(tensor_point(y1, y2))
        return lhs, np.kron(env.lie(h1, Xt)(y1), h2(y2)) + np.kron(h1(y1), env.lie(h2, Xt)(y2))
    env.case("tensor", tol, 30, tensor)

    def postcomposition(rng):
        Xt = env.invariant(rng)
        c = rng.normal(size=2)
        m = V.rep.module_dim
        f = linear_module_map(V.rep, direct_sum(V.rep, V.rep),
                              np.vstack([c[0] * np.eye(m), c[1] * np.eye(m)]))
        h = random_map(V, TANGENT, chart, rng)
        y = random_fiber_point(TANGENT, env.point(rng), rng)
        return env.lie(postcompose(f, h), Xt)(y), chain_rule(f, h, env.lie(h, Xt))(y)
    env.case("postcompose", tol, 30, postcomposition)

    def chain_action(rng):
        Xt = env.invariant(rng)
        h = product_map(env.group_section(rng), random_form(chart, 1, V, rng, source=TANGENT))
        x = env.point(rng)
        y = product_point(base_point(x), random_fiber_point(TANGENT, x, rng))
        f = action_map(group, V.rep)
        return env.lie(postcompose(f, h), Xt)(y), chain_rule(f, h, env.lie(h, Xt))(y)
    env.case("chain-action", tol, 30, chain_action)

    def chain_product(rng):
        Xt = env.invariant(rng)
        h = product_map(env.group_section(rng), random_group_section(group, chart, rng))
        x = env.point(rng)
        y = product_point(base_point(x), base_point(x))
        f = multiplication_map(group)
        return env.lie(postcompose(f, h), Xt)(y), chain_rule(f, h, env.lie(h, Xt))(y)
    env.case("chain-product", tol, 30, chain_product)

    def s_beta(rng):
        Xt = env.invariant(rng)
        s = env.group_section(rng)
        beta = random_form(chart, 1, V, rng, source=TANGENT)
        y = random_fiber_point(TANGENT, env.point(rng), rng)
        # s . (L s . beta + L beta), written out with the action
        ls, lb = env.lie(s, Xt)(base_point(y.x)), env.lie(beta, Xt)(y)
        g = s(base_point(y.x))
        explicit = V.rep.apply(g, V.infinitesimal(group.hat(ls), beta(y)) + lb)
        return env.lie(mult_section_map(s, beta), Xt)(y), explicit
    env.case("s-beta", tol, 30, s_beta)

    def s_beta_synthesis(rng):
        Xt = env.invariant(rng)
        s = env.group_section(rng)
        beta = random_form(chart, 1, V, rng, source=TANGENT)
        y = random_fiber_point(TANGENT, env.point(rng), rng)
        synth = leibniz_times(s, beta, env.lie(s, Xt), env.lie(beta, Xt),
                              action_map(group, V.rep), insert_base(TANGENT))
        return env.lie(mult_section_map(s, beta), Xt)(y), synth(y)
    env.case("s-beta-synthesis", tol, 30, s_beta_synthesis)

    def s1s2(rng):
        Xt = env.invariant(rng)
        s1, s2 = env.group_section(rng), random_group_section(group, chart, rng)
        y = base_point(env.point(rng))
        l1, l2 = env.lie(s1, Xt)(y), env.lie(s2, Xt)(y)
        explicit = group.adjoint_coords(group.inverse(s2(y)), l1) + l2
        return env.lie(mult_sections(s1, s2), Xt)(y), explicit
    env.case("s1s2", tol, 30, s1s2)

    def wedge_case(k, l, tangent=False):
        def sample(rng):
            Xt = env.invariant(rng)
            src = TANGENT if tangent else None
            alpha = random_form(chart, k, A, rng, source=src, name="alpha")
            beta = random_form(chart, l, V, rng, source=src, name="beta")
            y = random_fiber_point(ext_power(k + l), env.point(rng), rng)
            la, lb = env.lie(alpha, Xt), env.lie(beta, Xt)
            return env.lie(wedge(alpha, beta), Xt)(y), wedge(la, beta)(y) + wedge(alpha, lb)(y)
        return sample
    env.case("wedge11", tol, 30, wedge_case(1, 1, tangent=True))
    if env.n >= 3:
        env.case("wedge12", tol, 30, wedge_case(1, 2))

    def wedge_synthesis(rng):
        Xt = env.invariant(rng)
        alpha = random_form(chart, 1, A, rng)
        beta = random_form(chart, 1, V, rng)
        y = random_fiber_point(ext_power(2), env.point(rng), rng)
        synth = leibniz_otimes(alpha, beta, env.lie(alpha, Xt), env.lie(beta, Xt),
                               algebra_action_map(group, V.rep), shuffle_split(1, 1))
        return env.lie(wedge(alpha, beta), Xt)(y), synth(y)
    env.case("wedge-synthesis", tol, 30, wedge_synthesis)


def _natural_instances(env, rng):
    """``(tag, h, eta, y)`` for each natural map, with random data."""
    chart, V, A, C = env.chart, env.V, env.A, env.C
    x = env.point(rng)
    out = []
    h = product_map(random_map(C, BASE, chart, rng), random_map(V, BASE, chart, rng))
    out.append(("diagonal-base", h, DIAGONAL_BASE, base_point(x)))
    h = product_map(random_map(C, BASE, chart, rng), random_map(V, TANGENT, chart, rng))
    out.append(("insert-base", h, insert_base(TANGENT), random_fiber_point(TANGENT, x, rng)))
    if env.n >= 2:
        coeff = random_quadratic(rng, (V.rep.module_dim, env.n, env.n), env.n)
        h = bilinear_map(coeff, V, "b")
        out.append(("wedge-to-tensor", h, WEDGE_TO_TENSOR,
                    random_fiber_point(ext_power(2), x, rng)))
        h = tensor_map(random_form(chart, 1, A, rng), random_form(chart, 1, V, rng))
        out.append(("shuffle-split", h, shuffle_split(1, 1),
                    random_fiber_point(ext_power(2), x, rng)))
    return out


def suite_naturality(env: Env):
    tags = [t for t, *_ in _natural_instances(env, np.random.default_rng(0))]
    for i, tag in enumerate(tags):
        def sample(rng, i=i):
            Xt = env.invariant(rng)
            _, h, eta, y = _natural_instances(env, rng)[i]
            lhs = env.lie(compose_natural(h, eta), Xt)(y)
            return lhs, env.lie(h, Xt)(eval_natural_map(eta, y))
        env.case(tag, 1e-5, 30, sample)

    for i, tag in enumerate(tags):
        def lift(rng, i=i):
            X = env.field(rng)
            _, _, eta, y = _natural_instances(env, rng)[i]
            offsets, weights = nodes(env.cfg.fd_scheme, env.cfg.fd_eps)
            moved = [eval_natural_map(eta, z)
                     for z in canonical_flow_batch(eta.source, X, y, offsets, env.cfg)]
            back = canonical_flow_rows(eta.target, X, moved, -np.asarray(offsets), env.cfg)
            derivative = tree_combine(weights, [coordinates(b) for b in back])
            return derivative, np.zeros_like(derivative)
        env.case(f"{tag}-lift", 1e-6, 30, lift)


def _magic_case(env, label, k, conn_fn, classical=False, tol=1e-3):
    def sample(rng):
        conn = conn_fn(rng)
        cc = CovariantContext(conn, env.sc.module, env.cfg)
        Z = env.field(rng)
        beta = env.form(rng, k)
        y = random_fiber_point(ext_power(k), env.point(rng), rng)
        value = covariant_lie(cc, Z, beta)(y)
        if classical:
            return value, classical_lie_derivative(beta, Z, y.x, y.data[0][1])
        return value, covariant_lie_via_lift(cc, Z, beta)(y)
    env.case(label, tol, 20, sample)


def _is_flat(conn, env):
    rng = np.random.default_rng(0)
    return all(np.max(np.abs(conn.coeff(env.point(rng)))) == 0.0 for _ in range(5))


def suite_magic(env: Env):
    degrees = [k for k in (1, 2) if k + 1 <= env.n]
    for k in degrees:
        _magic_case(env, f"magic-k{k}", k, env.connection)
    name = env.role("connection")
    if name and _is_flat(env.sc.connections[name][1], env):
        for k in degrees:
            _magic_case(env, f"classical-k{k}", k, env.connection, classical=True, tol=1e-4)


def suite_magic_flat(env: Env):
    flat = lambda rng: flat_connection(env.chart, env.group)  # noqa: E731
    degrees = [k for k in (1, 2) if k + 1 <= env.n]
    for k in degrees:
        _magic_case(env, f"magic-k{k}", k, flat, tol=1e-4)
        _magic_case(env, f"classical-k{k}", k, flat, classical=True, tol=1e-4)

    def exterior(rng):
        cc = CovariantContext(flat(rng), env.sc.module, env.cfg)
        beta = env.form(rng, 1)
        y = random_fiber_point(ext_power(2), env.point(rng), rng)
        value = exterior_covariant_derivative(cc, beta)(y)
        return value, classical_exterior_derivative(beta, y.x, y.data[0][1])
    if env.n >= 2:
        env.case("d-classical", 1e-4, 20, exterior)


def suite_connection_difference(env: Env):
    group, chart = env.group, env.chart

    for label, space, mode in (("module", env.V, "module"),
                               ("conjugation", env.C, "conjugation")):
        def sample(rng, space=space, mode=mode):
            c1, c2 = env.connection(rng), random_connection(chart, group, rng)
            X = env.field(rng)
            F = (BASE, TANGENT)[rng.integers(2)]
            h = random_map(space, F, chart, rng)
            y = random_fiber_point(F, env.point(rng), rng)
            l1 = env.lie(h, horizontal_lift(c1, X))(y)
            l2 = env.lie(h, horizontal_lift(c2, X))(y)

            def a(x):
                return group.vee(c2.gamma(x, X(x)) - c1.gamma(x, X(x)))

            return l1 - l2, darboux_lie_vertical_closed(a, h, mode)(y)
        env.case(label, 1e-5, 30, sample)


def suite_convergence(env: Env):
    group, chart = env.group, env.chart
    label, gspace = _generic_space(env)
    omega = default_form(gspace)

    def big_vertical(rng):
        direction = rng.normal(size=group.dim)
        c0 = CONVERGENCE_NORM * direction / np.linalg.norm(direction)
        wobble = random_quadratic(rng, (group.dim,), chart.dim, 0.2)
        a = Quadratic(c0 + wobble.c0, wobble.c1, wobble.c2)
        return a, vertical_from_section(group, chart, a)

    def ratios(errors):
        return np.array([errors[0] / errors[1], errors[1] / errors[2]])

    oracles = {
        "prop41": (env.V, lambda a, h, y: -env.V.infinitesimal(group.hat(a(y.x)), h(y))),
        "prop42": (env.C, lambda a, h, y: darboux_lie_vertical_closed(a, h, "conjugation")(y)),
        label: (gspace, lambda a, h, y: -star_omega_exact(group.hat(a(y.x)), h(y), omega)),
    }
    for name, (space, closed) in oracles.items():
        def sample(rng, space=space, closed=closed):
            a, Xa = big_vertical(rng)
            h = random_map(space, BASE, chart, rng)
            y = base_point(env.point(rng))
            ref = closed(a, h, y)
            errors = []
            for eps in CONVERGENCE_EPS:
                cfg = replace(env.cfg, fd_scheme="central4", fd_eps=eps)
                value = darboux_lie(DarbouxContext(group, BASE, space, default_form(space), cfg),
                                    Xa, h, y)
                errors.append(np.max(np.abs(value - ref)))
            return ratios(errors), np.full(2, CONVERGENCE_TARGET)
        env.case(f"central4-{name}", CONVERGENCE_TOL, 10, sample)

    big = Chart.cube(env.n, 1e3)

    def rk4(rng):
        a = rng.normal(size=(env.n, env.n))
        a *= 1.5 / np.linalg.norm(a, 2)
        x = rng.uniform(-1, 1, env.n)
        exact = expm(a) @ x
        X = linear_field(big, a)
        errors = [np.max(np.abs(flow(X, x, 1.0, FlowConfig(rk4_steps=s)) - exact))
                  for s in RK4_ORACLE_STEPS]
        return ratios(errors), np.full(2, CONVERGENCE_TARGET)
    env.case("rk4-linear", CONVERGENCE_TOL, 10, rk4)


SUITES = {
    "division": (suite_division, "division operator identities (absolute 1e-12)"),
    "flow-consistency": (suite_flow_consistency,
                         "flow stencil vs Trautman lift, frame independence, linearity"),
    "prop41": (suite_prop41, "vertical fields on module-valued maps: -a.h"),
    "prop42": (suite_prop42, "vertical fields on group-valued maps: a - Ad_{h^-1} a"),
    "generic-star": (suite_generic_star, "vertical fields with a general equivariant form"),
    "leibniz": (suite_leibniz, "product, tensor, chain rules, s.beta, s1.s2, wedge"),
    "naturality": (suite_naturality, "commuting with natural maps and their lifts"),
    "magic": (suite_magic, "Cartan formula with the scenario (or a random) connection"),
    "magic-flat": (suite_magic_flat, "flat connection vs classical Lie and exterior derivative"),
    "connection-difference": (suite_connection_difference,
                              "change of connection equals a vertical derivative"),
    "convergence": (suite_convergence, "Central4 and RK4 error ratios per halving"),
}


def run_suite(scenario, name, options: RunOptions = RunOptions(), selection=None) -> dict:
    """Run one suite; returns its report section."""
    if name not in SUITES:
        raise UnknownSuite(name)
    env = Env(scenario, name, selection, options)
    SUITES[name][0](env)
    return {"name": name, "cases": [c.to_dict() for c in env.cases]}


def environment(scenario, options: RunOptions = RunOptions()) -> dict:
    cfg = scenario.flow_config(fd_eps=options.eps, fd_scheme=options.stencil,
                               rk4_steps=options.rk4_steps)
    return {"seed": scenario.seed if options.seed is None else options.seed,
            "eps": cfg.fd_eps, "stencil": cfg.fd_scheme, "rk4_steps": cfg.rk4_steps,
            "version": __version__}


def run_scenario(scenario, suites=None, options: RunOptions = RunOptions()) -> dict:
    """Run the named suites (default: the scenario's selection, else all) sequentially."""
    from .scenario import SuiteSelection
    if suites:
        selections = []
        by_name = {s.name: s for s in scenario.suites}
        for name in suites:
            selections.append(by_name.get(name, SuiteSelection(name)))
    elif scenario.suites:
        selections = list(scenario.suites)
    else:
        selections = [SuiteSelection(name) for name in SUITES]
    for sel in selections:
        if sel.name not in SUITES:
            raise UnknownSuite(sel.name)
    results = [run_suite(scenario, sel.name, options, sel) for sel in selections]
    return {"suites": results, "env": environment(scenario, options)}


def report_passed(report: dict) -> bool:
    return all(c["pass"] for s in report["suites"] for c in s["cases"])
