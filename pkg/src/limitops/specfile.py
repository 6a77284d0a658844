"""JSON operator spec files: schema, validation and decoding.

A spec file looks like::

    {
      "schema": "limitops/1",
      "name": "shift",
      "space": {"kind": "z_lattice", "dim": 1, "metric": "l1", "property_a": true},
      "operator": {"terms": [{"kind": "shift", "offset": [1],
                              "coeff": {"kind": "constant", "value": [1.0, 0.0]}}]}
    }

Complex numbers are ``[re, im]`` pairs; bare reals are accepted too.
"""
from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .errors import ConfigurationError, LimitOpsError
from .operator import (BlockTerm, Constant, Converging, DiagTerm, EventuallyPeriodic,
                       FiniteTerm, ShiftTerm, TermOperator)
from .space import Space, space_from_dict

SCHEMA_ID = "limitops/1"

_COMPLEX = {"oneOf": [{"type": "number"},
                      {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]}
_INTVEC = {"oneOf": [{"type": "integer"}, {"type": "array", "items": {"type": "integer"}, "minItems": 1}]}

_COEFF = {
    "type": "object",
    "required": ["kind"],
    "oneOf": [
        {"properties": {"kind": {"const": "constant"}, "value": _COMPLEX},
         "required": ["value"], "additionalProperties": False},
        {"properties": {"kind": {"const": "eventually_periodic"},
                        "period": {"type": "integer", "minimum": 1},
                        "left": {"type": "array", "items": _COMPLEX, "minItems": 1},
                        "right": {"type": "array", "items": _COMPLEX, "minItems": 1},
                        "table": {"type": "array", "items": {
                            "type": "object", "required": ["n", "value"],
                            "properties": {"n": {"type": "integer"}, "value": _COMPLEX},
                            "additionalProperties": False}}},
         "required": ["period", "left", "right"], "additionalProperties": False},
        {"properties": {"kind": {"const": "converging"}, "alpha": _COMPLEX, "beta": _COMPLEX},
         "required": ["alpha", "beta"], "additionalProperties": False},
    ],
}

_TERM = {
    "type": "object",
    "required": ["kind"],
    "oneOf": [
        {"properties": {"kind": {"const": "shift"}, "offset": _INTVEC, "coeff": _COEFF,
                        "axis": {"type": "integer", "minimum": 0}},
         "required": ["offset", "coeff"], "additionalProperties": False},
        {"properties": {"kind": {"const": "diag"}, "coeff": _COEFF, "axis": {"type": "integer", "minimum": 0}},
         "required": ["coeff"], "additionalProperties": False},
        {"properties": {"kind": {"const": "finite"}, "entries": {"type": "array", "items": {
            "type": "object", "required": ["row", "col", "value"],
            "properties": {"row": _INTVEC, "col": _INTVEC, "value": _COMPLEX},
            "additionalProperties": False}}},
         "required": ["entries"], "additionalProperties": False},
        {"properties": {"kind": {"const": "block"},
                        "generator": {"enum": ["averaging", "adjacency", "laplacian"]},
                        "scale": _COMPLEX},
         "required": ["generator"], "additionalProperties": False},
    ],
}

SPEC_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "space", "operator"],
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "name": {"type": "string"},
        "space": {
            "type": "object",
            "required": ["kind"],
            "oneOf": [
                {"properties": {"kind": {"const": "z_lattice"}, "dim": {"type": "integer", "minimum": 1},
                                "metric": {"enum": ["l1", "linf"]}, "property_a": {"type": "boolean"}},
                 "additionalProperties": False},
                {"properties": {"kind": {"const": "coarse_union"},
                                "property_a": {"type": "boolean"},
                                "horizon": {"type": "integer", "minimum": 1},
                                "components": {
                                    "type": "object", "required": ["family", "sizes"],
                                    "properties": {
                                        "family": {"enum": ["cycles", "paths"]},
                                        "sizes": {"oneOf": [
                                            {"type": "array", "items": {"type": "integer", "minimum": 1},
                                             "minItems": 1},
                                            {"type": "object", "required": ["start"],
                                             "properties": {"start": {"type": "integer", "minimum": 1},
                                                            "step": {"type": "integer", "minimum": 0},
                                                            "count": {"type": "integer", "minimum": 1}},
                                             "additionalProperties": False}]}},
                                    "additionalProperties": False}},
                 "required": ["components"], "additionalProperties": False},
            ],
        },
        "operator": {
            "type": "object",
            "required": ["terms"],
            "properties": {"terms": {"type": "array", "items": _TERM},
                           "declared_norm_bound": {"type": "number", "exclusiveMinimum": 0}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


class SpecError(LimitOpsError, ValueError):
    """Spec file failed to parse or validate; the message carries line or field location."""


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def coeff_from_dict(d: dict):
    kind = d["kind"]
    if kind == "constant":
        return Constant(_complex(d["value"]))
    if kind == "eventually_periodic":
        table = {int(e["n"]): _complex(e["value"]) for e in d.get("table", [])}
        return EventuallyPeriodic(int(d["period"]), tuple(map(_complex, d["left"])),
                                  tuple(map(_complex, d["right"])), table)
    if kind == "converging":
        return Converging(_complex(d["alpha"]), _complex(d["beta"]))
    raise ConfigurationError(f"unknown coefficient kind {kind!r}")


def term_from_dict(d: dict, space: Space):
    kind = d["kind"]
    if kind == "shift":
        off = d["offset"]
        off = (off,) if isinstance(off, int) else tuple(off)
        return ShiftTerm(off, coeff_from_dict(d["coeff"]), int(d.get("axis", 0)))
    if kind == "diag":
        return DiagTerm(coeff_from_dict(d["coeff"]), int(d.get("axis", 0)))
    if kind == "finite":
        return FiniteTerm(tuple((space.point(e["row"]), space.point(e["col"]), _complex(e["value"]))
                                for e in d["entries"]))
    if kind == "block":
        return BlockTerm(d["generator"], _complex(d.get("scale", 1.0)))
    raise ConfigurationError(f"unknown term kind {kind!r}")


def validate_spec(doc) -> None:
    validator = jsonschema.Draft202012Validator(SPEC_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors:
            if e.context:
                # oneOf failures: report the branch that got furthest
                e = jsonschema.exceptions.best_match(e.context)
            path = "/".join(str(p) for p in e.absolute_path) or "<root>"
            lines.append(f"field {path}: {e.message}")
        raise SpecError("spec validation failed:\n  " + "\n  ".join(lines))


def load_spec_text(text: str):
    """Parse, validate and decode a spec document. Returns ``(name, space, operator, doc)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    validate_spec(doc)
    try:
        space = space_from_dict(doc["space"])
        terms = []
        for i, t in enumerate(doc["operator"]["terms"]):
            try:
                term = term_from_dict(t, space)
                term.validate(space)
                terms.append(term)
            except (ConfigurationError, ValueError) as e:
                raise SpecError(f"field operator/terms/{i}: {e}") from None
        op = TermOperator(space, terms, doc["operator"].get("declared_norm_bound"))
    except ConfigurationError as e:
        raise SpecError(f"configuration error: {e}") from None
    return doc.get("name", ""), space, op, doc


def load_spec(path):
    return load_spec_text(Path(path).read_text())


def dump_spec(name: str, op: TermOperator) -> dict:
    """Inverse of :func:`load_spec_text` for term operators."""
    return {"schema": SCHEMA_ID, "name": name, "space": op.space.to_dict(), "operator": op.to_dict()}
