"""Run configuration: versioned JSON schema, field/domain/task parsing.

A config carries a polynomial potential (per component, monomial terms
{exponents, coeff}), a domain block, and one task block per subcommand.
Unknown keys are rejected up front so typos fail before any compute.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import jsonschema

from .geometry import Disk, HalfSpaceBox, Rectangle, SmoothStar
from .poly import Polynomial, PolyVectorField

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


_TERM = {
    "type": "object",
    "properties": {
        "exponents": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "coeff": {"type": "number"},
    },
    "required": ["exponents", "coeff"],
    "additionalProperties": False,
}

_FIELD = {
    "type": "object",
    "properties": {
        "dimension": {"type": "integer", "minimum": 2},
        "potential": {"type": "array", "items": {"type": "array", "items": _TERM}},
    },
    "required": ["dimension", "potential"],
    "additionalProperties": False,
}

_DOMAIN = {
    "type": "object",
    "properties": {
        "type": {"enum": ["rectangle", "disk", "smooth_star", "half_space_box"]},
        "center": {"type": "array", "items": {"type": "number"}},
        "sides": {"type": "array", "items": {"type": "number"}},
        "radius": {"type": "number"},
        "base_radius": {"type": "number"},
        "cos_coeffs": {"type": "array", "items": {"type": "number"}},
        "sin_coeffs": {"type": "array", "items": {"type": "number"}},
        "normal": {"type": "array", "items": {"type": "number"}},
        "extent": {"type": "number"},
    },
    "required": ["type"],
    "additionalProperties": False,
}

_CHECK = {
    "type": "object",
    "properties": {
        "type": {"enum": ["exponent", "ratio_at_max", "prefactor"]},
        "tolerance": {"type": "number"},
        "target": {"type": "number"},
        "value": {"type": "number"},
        "source": {"enum": ["theta", "value"]},
        "use_richardson": {"type": "boolean"},
    },
    "required": ["type"],
    "additionalProperties": False,
}

_SWEEP_TASK = {
    "type": "object",
    "properties": {
        "bc": {"enum": ["dirichlet", "neumann", "mixed", "dtn"]},
        "beta_list": {"type": "array", "items": {"type": "number"}, "minItems": 3},
        "kappa": {"type": "integer", "minimum": 0},
        "nodes_per_scale": {"type": "number"},
        "min_axis_nodes": {"type": "integer", "minimum": 8},
        "max_axis_nodes": {"type": "integer", "minimum": 16},
        "richardson": {"type": "boolean"},
        "tol": {"type": "number"},
    },
    "required": ["bc", "beta_list"],
    "additionalProperties": False,
}

_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "seed": {"type": ["string", "integer"]},
        "threads": {"type": "integer", "minimum": 1},
        "field": _FIELD,
        "domain": _DOMAIN,
        "task": {
            "type": "object",
            "properties": {
                "analyze": {
                    "type": "object",
                    "properties": {
                        "interior_step": {"type": "number", "exclusiveMinimum": 0},
                        "boundary_count": {"type": "integer", "minimum": 8},
                        "kappa_max": {"type": "integer", "minimum": 0},
                        "profile_step": {"type": "number", "exclusiveMinimum": 0},
                        "beta": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "additionalProperties": False,
                },
                "solve": {
                    "type": "object",
                    "properties": {
                        "bc": {"enum": ["dirichlet", "neumann", "mixed", "dtn"]},
                        "beta": {"type": "number", "minimum": 0},
                        "h": {"type": "number", "exclusiveMinimum": 0},
                        "tol": {"type": "number"},
                    },
                    "required": ["bc", "beta", "h"],
                    "additionalProperties": False,
                },
                "sweep": _SWEEP_TASK,
                "model": {
                    "type": "object",
                    "properties": {
                        "setting": {"enum": ["whole_space", "half_space"]},
                        "bc": {"enum": ["dirichlet", "neumann", "dtn"]},
                        "normal": {"type": "array", "items": {"type": "number"}},
                        "kappa": {"type": "integer", "minimum": 0},
                        "R_list": {"type": "array", "items": {"type": "number"}, "minItems": 3},
                        "nodes_across": {"type": "integer", "minimum": 32},
                        "tol": {"type": "number"},
                    },
                    "required": ["setting", "bc", "kappa"],
                    "additionalProperties": False,
                },
                "verify": {
                    "type": "object",
                    "properties": {
                        "sweep": _SWEEP_TASK,
                        "checks": {"type": "array", "items": _CHECK, "minItems": 1},
                        "gamma": {
                            "type": "object",
                            "properties": {
                                "interior_step": {"type": "number", "exclusiveMinimum": 0},
                                "boundary_count": {"type": "integer", "minimum": 8},
                            },
                            "additionalProperties": False,
                        },
                    },
                    "required": ["sweep", "checks"],
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
    },
    "required": ["version", "field", "domain", "task"],
    "additionalProperties": False,
}


@dataclass
class RunConfig:
    A: PolyVectorField
    domain: object
    task: dict
    seed: int = 0x5EED
    threads: int = 1
    raw: dict = field(default_factory=dict)


def parse_seed(value) -> int:
    if isinstance(value, int):
        return value
    try:
        return int(str(value), 16) if str(value).lower().startswith("0x") else int(value, 0)
    except ValueError as exc:
        raise ConfigError(f"bad seed {value!r}: {exc}") from exc


def parse_field(block: dict) -> PolyVectorField:
    d = block["dimension"]
    comps = block["potential"]
    if len(comps) != d:
        raise ConfigError(f"potential needs {d} components, got {len(comps)}")
    out = []
    for terms in comps:
        p = Polynomial.zero(d)
        for t in terms:
            if len(t["exponents"]) != d:
                raise ConfigError(f"term exponents {t['exponents']} not length {d}")
            p = p + Polynomial.monomial(d, t["exponents"], t["coeff"])
        out.append(p)
    return PolyVectorField(tuple(out))


def parse_domain(block: dict):
    kind = block["type"]
    try:
        if kind == "rectangle":
            return Rectangle(center=tuple(block["center"]), sides=tuple(block["sides"]))
        if kind == "disk":
            return Disk(center=tuple(block["center"]), radius=block["radius"])
        if kind == "smooth_star":
            return SmoothStar(center=tuple(block["center"]),
                              base_radius=block["base_radius"],
                              cos_coeffs=tuple(block.get("cos_coeffs", ())),
                              sin_coeffs=tuple(block.get("sin_coeffs", ())))
        if kind == "half_space_box":
            return HalfSpaceBox(normal=tuple(block["normal"]), extent=block["extent"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad domain block: {exc}") from exc
    raise ConfigError(f"unknown domain type {kind!r}")


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: line {exc.lineno}: {exc.msg}") from exc
    try:
        jsonschema.validate(raw, _SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config rejected at {where}: {exc.message}") from exc
    A = parse_field(raw["field"])
    domain = parse_domain(raw["domain"])
    if A.dim != domain.dim:
        raise ConfigError(f"field dimension {A.dim} != domain dimension {domain.dim}")
    return RunConfig(A=A, domain=domain, task=raw["task"],
                     seed=parse_seed(raw.get("seed", 0x5EED)),
                     threads=int(raw.get("threads", 1)), raw=raw)
