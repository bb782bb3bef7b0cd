"""Scenario files: JSON description of a group, chart, fields, sections, connections and suites."""
from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .associated import BundleMap, ConjugationSpace, ModuleSpace
from .errors import DimensionError, ExpressionError, ParseError, ResolveError, SchemaError
from .expr import compile_vector
from .flows import Chart, FlowConfig, VectorField
from .forms import form_map
from .lie import MatrixLieGroup, adjoint_rep, expm, gl, so3, standard_rep, translation, trivial_rep
from .natural import BASE, permutation_sign
from .principal import ConnectionForm
from .stencil import SCHEMES

_EXPRS = {"type": "array", "items": {"type": "string"}, "minItems": 1}
SCHEMA = {
    "type": "object",
    "required": ["group", "chart"],
    "additionalProperties": False,
    "properties": {
        "group": {"type": "string"},
        "module": {"type": "string"},
        "chart": {
            "type": "object",
            "required": ["dim", "bounds"],
            "additionalProperties": False,
            "properties": {
                "dim": {"type": "integer", "minimum": 1, "maximum": 6},
                "bounds": {"type": "array", "items": {
                    "type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
            },
        },
        "params": {"type": "object", "additionalProperties": {"type": "number"}},
        "fields": {"type": "object", "additionalProperties": _EXPRS},
        "sections": {"type": "object", "additionalProperties": {
            "type": "object",
            "required": ["target", "components"],
            "additionalProperties": False,
            "properties": {"target": {"enum": ["V", "g", "G"]}, "components": _EXPRS},
        }},
        "connections": {"type": "object", "additionalProperties": {
            "type": "array", "items": _EXPRS}},
        "forms": {"type": "object", "additionalProperties": {
            "type": "object",
            "required": ["target", "degree", "components"],
            "additionalProperties": False,
            "properties": {
                "target": {"enum": ["V", "g"]},
                "degree": {"type": "integer", "minimum": 1, "maximum": 3},
                "components": {"type": "array", "items": _EXPRS},
            },
        }},
        "suites": {"type": "array", "items": {"anyOf": [
            {"type": "string"},
            {"type": "object", "required": ["name"], "additionalProperties": False,
             "properties": {r: {"type": "string"} for r in
                            ("name", "field", "section", "vertical", "connection", "form")}},
        ]}},
        "config": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "stencil": {"enum": list(SCHEMES)},
                "rk4_steps": {"type": "integer", "minimum": 1},
                "samples": {"type": "integer", "minimum": 1},
            },
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    },
}

ROLES = ("field", "section", "vertical", "connection", "form")
ROLE_KINDS = {"field": "fields", "section": "sections", "vertical": "sections",
              "connection": "connections", "form": "forms"}


def parse_group(text: str) -> MatrixLieGroup:
    if text == "SO3":
        return so3()
    m = re.fullmatch(r"(GL|T)([1-9])", text)
    if not m:
        raise SchemaError("group", f"unknown group {text!r}; use SO3, GL<n> or T<d>")
    n = int(m.group(2))
    return gl(n) if m.group(1) == "GL" else translation(n)


def parse_module(text: str, group: MatrixLieGroup):
    if text == "standard":
        return standard_rep(group)
    if text == "adjoint":
        return adjoint_rep(group)
    m = re.fullmatch(r"trivial:([1-9])", text)
    if m:
        return trivial_rep(group, int(m.group(1)))
    raise SchemaError("module", f"unknown module {text!r}")


@dataclass(frozen=True, eq=False)
class SectionSpec:
    target: str
    components: tuple
    fn: object
    bundle_map: BundleMap


@dataclass(frozen=True, eq=False)
class FormSpec:
    target: str
    degree: int
    components: tuple
    bundle_map: BundleMap


@dataclass(frozen=True)
class SuiteSelection:
    name: str
    roles: tuple = ()

    def role(self, key) -> Optional[str]:
        return dict(self.roles).get(key)


@dataclass(eq=False)
class Scenario:
    group_name: str
    group: MatrixLieGroup
    module_name: str
    module: object
    chart: Chart
    params: dict
    fields: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)
    connections: dict = field(default_factory=dict)
    forms: dict = field(default_factory=dict)
    suites: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    seed: int = 42
    source: Optional[str] = None

    def flow_config(self, **overrides) -> FlowConfig:
        kw = {}
        if "eps" in self.config:
            kw["fd_eps"] = float(self.config["eps"])
        if "stencil" in self.config:
            kw["fd_scheme"] = self.config["stencil"]
        if "rk4_steps" in self.config:
            kw["rk4_steps"] = int(self.config["rk4_steps"])
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return FlowConfig(**kw)

    def to_dict(self) -> dict:
        """Canonical JSON-ready form; expressions are re-printed from their ASTs."""
        canon = lambda fn: [e.canonical() for e in fn.expressions]  # noqa: E731
        out = {
            "group": self.group_name,
            "module": self.module_name,
            "chart": {"dim": self.chart.dim, "bounds": [list(b) for b in self.chart.bounds]},
            "params": dict(self.params),
            "fields": {k: canon(v[1].eval) for k, v in self.fields.items()},
            "sections": {k: {"target": s.target, "components": canon(s.fn)}
                         for k, s in self.sections.items()},
            "connections": {k: [canon(f) for f in v[0]] for k, v in self.connections.items()},
            "forms": {k: {"target": f.target, "degree": f.degree,
                          "components": [canon(c) for c in f.components]}
                      for k, f in self.forms.items()},
            "suites": [s.name if not s.roles else {"name": s.name, **dict(s.roles)}
                       for s in self.suites],
            "config": dict(self.config),
            "seed": self.seed,
        }
        return out


def dump_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario.to_dict(), sort_keys=True, indent=2) + "\n"


def _path(error) -> str:
    parts = []
    for p in error.absolute_path:
        if isinstance(p, int):
            parts.append(f"[{p}]")
        else:
            parts.append(("." if parts else "") + str(p))
    return "".join(parts) or "$"


def _compile(srcs, dim, params, where):
    try:
        return compile_vector(srcs, dim, params)
    except ParseError as e:
        raise SchemaError(where, str(e)) from e
    except ExpressionError as e:
        raise SchemaError(where, str(e)) from e


def _form_tensor(components, m, n, k):
    """Alternating coefficient tensor from values on increasing index tuples."""
    tuples = list(itertools.combinations(range(n), k))
    if len(components) != len(tuples):
        raise DimensionError(f"a {k}-form on a {n}-dim chart needs {len(tuples)} components")

    def coeff(x):
        out = np.zeros((m,) + (n,) * k)
        for idx, comp in zip(tuples, components):
            val = comp(x)
            for perm in itertools.permutations(range(k)):
                out[(slice(None),) + tuple(idx[p] for p in perm)] = permutation_sign(perm) * val
        return out

    return coeff


def build_scenario(data: dict, source: Optional[str] = None) -> Scenario:
    """Validate and resolve a scenario dictionary."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)),
                                                               e.message))
    if errors:
        raise SchemaError(_path(errors[0]), errors[0].message)

    group = parse_group(data["group"])
    module_name = data.get("module", "standard")
    module = parse_module(module_name, group)
    n = data["chart"]["dim"]
    bounds = data["chart"]["bounds"]
    if len(bounds) != n:
        raise DimensionError(f"chart.bounds has {len(bounds)} intervals for dim {n}")
    if any(not lo < hi for lo, hi in bounds):
        raise SchemaError("chart.bounds", "each interval needs lo < hi")
    chart = Chart(n, tuple(tuple(b) for b in bounds))
    params = dict(data.get("params", {}))
    reserved = set(f"x{i + 1}" for i in range(n)) | ({"x", "y", "z"} if n <= 3 else set())
    for p in params:
        if p in reserved or p == "pi":
            raise SchemaError(f"params.{p}", "parameter shadows a coordinate or constant")

    sc = Scenario(data["group"], group, module_name, module, chart, params,
                  config=dict(data.get("config", {})), seed=int(data.get("seed", 42)),
                  source=source)
    vspace = ModuleSpace(module)
    gspace = ModuleSpace(adjoint_rep(group))

    for name, comps in data.get("fields", {}).items():
        where = f"fields.{name}"
        if len(comps) != n:
            raise DimensionError(f"{where} has {len(comps)} components for dim {n}")
        fn = _compile(comps, n, params, where)
        sc.fields[name] = (comps, VectorField(chart, fn))

    for name, spec in data.get("sections", {}).items():
        where = f"sections.{name}"
        target, comps = spec["target"], spec["components"]
        want = module.module_dim if target == "V" else group.dim
        if len(comps) != want:
            raise DimensionError(f"{where} needs {want} components for target {target}")
        fn = _compile(comps, n, params, where)
        if target == "V":
            bmap = BundleMap(BASE, vspace, lambda y, f=fn: f(y.x),
                             False, name)
        elif target == "g":
            bmap = BundleMap(BASE, gspace, lambda y, f=fn: f(y.x),
                             False, name)
        else:
            bmap = BundleMap(BASE, ConjugationSpace(group),
                             lambda y, f=fn: expm(group.hat(f(y.x))), False, name)
        sc.sections[name] = SectionSpec(target, tuple(comps), fn, bmap)

    for name, rows in data.get("connections", {}).items():
        where = f"connections.{name}"
        if len(rows) != n or any(len(r) != group.dim for r in rows):
            raise DimensionError(f"{where} needs {n} rows of {group.dim} algebra coordinates")
        fns = [_compile(r, n, params, f"{where}[{i}]") for i, r in enumerate(rows)]

        def coeff(x, fns=fns):
            return np.stack([f(x) for f in fns], axis=-1)

        sc.connections[name] = (fns, ConnectionForm(chart, group, coeff))

    for name, spec in data.get("forms", {}).items():
        where = f"forms.{name}"
        k = spec["degree"]
        if k > n:
            raise DimensionError(f"{where}: degree {k} exceeds chart dim {n}")
        space = vspace if spec["target"] == "V" else gspace
        m = space.rep.module_dim
        if any(len(c) != m for c in spec["components"]):
            raise DimensionError(f"{where}: each component needs {m} entries")
        comps = [_compile(c, n, params, f"{where}.components[{i}]")
                 for i, c in enumerate(spec["components"])]
        bmap = form_map(_form_tensor(comps, m, n, k), k, space, name=name)
        sc.forms[name] = FormSpec(spec["target"], k, tuple(comps), bmap)

    for i, entry in enumerate(data.get("suites", [])):
        if isinstance(entry, str):
            sc.suites.append(SuiteSelection(entry))
            continue
        roles = tuple(sorted((k, v) for k, v in entry.items() if k != "name"))
        for role, ref in roles:
            table = getattr(sc, ROLE_KINDS[role])
            if ref not in table:
                raise ResolveError(ref, f"suites[{i}].{role}")
        sc.suites.append(SuiteSelection(entry["name"], roles))
    return sc


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SchemaError("$", f"cannot read {path}: {e.strerror}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("$", f"invalid JSON: {e.msg} at line {e.lineno}") from e
    return build_scenario(data, str(path))
