"""JSON schemas for scenario configs and curvature fixtures, and a validating loader.

Validation errors carry the file name and the line of the offending value,
e.g. ``scenario.json:9: -1 is less than or equal to the minimum of 0 (at step)``.
"""
from __future__ import annotations

import json
from pathlib import Path

from jsonschema import Draft202012Validator

from .errors import ConfigError, ParabolicScalesError

__all__ = [
    "FIXTURE_SCHEMAS",
    "CONFIG_SCHEMA",
    "COMMAND_SCHEMAS",
    "value_lines",
    "load_document",
    "validate_document",
    "load_fixture",
    "load_config",
]

_number = {"type": "number"}
_vector = {"type": "array", "items": _number, "minItems": 1}
_matrix = {"type": "array", "items": _vector, "minItems": 1}
_complex = {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}
_cvector = {"type": "array", "items": _complex, "minItems": 1}
_cmatrix = {"type": "array", "items": _cvector, "minItems": 1}

_legendrean_sample = {
    "type": "object",
    "properties": {"P": _matrix, "A_lo": _matrix, "A_hi": _matrix, "T_lo": _vector, "T_hi": _vector},
    "required": ["P", "A_lo", "A_hi", "T_lo", "T_hi"],
    "additionalProperties": False,
}

_cr_sample = {
    "type": "object",
    "properties": {"h": _cmatrix, "P": _cmatrix, "A": _cmatrix, "T": _cvector,
                   "T_bar": _cvector, "A_bar": _cmatrix},
    "required": ["P", "A", "T"],
    "additionalProperties": False,
}


def _fixture(sample: dict, extra: dict | None = None) -> dict:
    props = {
        "geometry": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "samples": {"type": "array", "items": sample, "minItems": 1},
        "curve_meta": {"type": "object"},
    }
    props.update(extra or {})
    return {"type": "object", "properties": props, "required": ["n", "samples"],
            "additionalProperties": False}


FIXTURE_SCHEMAS = {
    "legendrean": _fixture(_legendrean_sample, {"geometry": {"const": "legendrean"}}),
    "cr": _fixture(_cr_sample, {"geometry": {"const": "cr"}, "h": _cmatrix}),
}

_metric = {
    "type": "object",
    "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
    "required": ["name"],
    "additionalProperties": False,
}

_integrator = {
    "step": {"type": "number", "exclusiveMinimum": 0},
    "length": {"type": "number", "exclusiveMinimum": 0},
}

_tolerances = {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}}

_common = {
    "id": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0},
    "tolerances": _tolerances,
}


def _command(name: str, props: dict, required=()) -> dict:
    allp = {"command": {"const": name}, **_common, **props}
    return {"type": "object", "properties": allp, "required": ["command", *required],
            "additionalProperties": False}


COMMAND_SCHEMAS = {
    "symalg": _command("symalg", {
        "geometry": {"enum": ["conformal", "legendrean", "cr"]},
        "model": {"enum": ["line", "circle"]},
        "n": {"type": "integer", "minimum": 2, "maximum": 12},
        "U": _vector, "V": _vector, "C": _vector,
    }, ["geometry", "n"]),
    "integrate": _command("integrate", {
        "metric": _metric,
        "mode": {"enum": ["geodesic", "conformal_circle"]},
        "initial": {
            "type": "object",
            "properties": {"x": _vector, "U": _vector, "C": _vector},
            "required": ["x", "U"],
            "additionalProperties": False,
        },
        "closed_form": {"enum": ["flat_circle", "great_circle"]},
        **_integrator,
    }, ["metric", "mode", "initial"]),
    "check": _command("check", {
        "kind": {"enum": ["einstein", "closure", "legendrean", "cr"]},
        "metric": _metric,
        "points": {"type": "integer", "minimum": 1},
        "curves": {"type": "integer", "minimum": 1},
        "fixture": {"type": "string"},
        "expect_lambda": _number,
        "directions": {"type": "integer", "minimum": 0},
        **_integrator,
    }, ["kind"]),
    "suite": _command("suite", {
        "criteria": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 10}},
        "fixtures": {
            "type": "object",
            "properties": {
                "lambda_one": {"type": "array", "items": {"type": "string"}},
                "lambda_zero": {"type": "array", "items": {"type": "string"}},
            },
            "additionalProperties": False,
        },
    }),
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {"command": {"enum": sorted(COMMAND_SCHEMAS)}},
    "required": ["command"],
}


# ---------------------------------------------------------------------------
# line bookkeeping
# ---------------------------------------------------------------------------
_WS = " \t\n\r"


def value_lines(text: str) -> dict:
    """Map every JSON path (tuple of keys/indices) to the 1-based line where its value starts."""
    decoder = json.JSONDecoder()
    lines = {}

    def skip(i):
        while i < len(text) and text[i] in _WS:
            i += 1
        return i

    def parse(i, path):
        i = skip(i)
        lines[path] = text.count("\n", 0, i) + 1
        ch = text[i] if i < len(text) else ""
        if ch == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = decoder.raw_decode(text, skip(i))
                i = skip(i)
                i = parse(i + 1, path + (key,))
                i = skip(i)
                if text[i] == "}":
                    return i + 1
                i += 1
        if ch == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = skip(parse(i, path + (k,)))
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = decoder.raw_decode(text, i)
        return end

    parse(0, ())
    return lines


def _best_line(lines: dict, path: tuple) -> int:
    while path not in lines and path:
        path = path[:-1]
    return lines.get(path, 1)


def load_document(path) -> tuple:
    """Read and parse a JSON file; syntax errors become :class:`ConfigError` with a line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path.name}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    return doc, text


def validate_document(doc, schema: dict, text: str | None = None, source: str = "<config>") -> None:
    """Raise :class:`ConfigError` listing every schema violation with its line."""
    validator = Draft202012Validator(schema)
    errors = list(validator.iter_errors(doc))
    if not errors:
        return
    lines = value_lines(text) if text is not None else {}
    msgs = []
    for err in errors:
        path = tuple(err.absolute_path)
        where = ".".join(str(p) for p in path) or "<root>"
        line = _best_line(lines, path) if lines else None
        prefix = f"{source}:{line}" if line else source
        msgs.append((line or 0, f"{prefix}: {err.message} (at {where})"))
    msgs.sort()
    raise ConfigError("\n".join(m for _, m in msgs))


def _check_shapes(doc: dict, geometry: str, source: str, lines: dict) -> None:
    n = doc["n"]
    square = ("P", "A_lo", "A_hi") if geometry == "legendrean" else ("P", "A", "h", "A_bar")
    vectors = ("T_lo", "T_hi") if geometry == "legendrean" else ("T", "T_bar")
    problems = []
    if geometry == "cr" and "h" in doc and (len(doc["h"]) != n or any(len(r) != n for r in doc["h"])):
        problems.append((("h",), f"h must be {n} x {n}"))
    for k, s in enumerate(doc["samples"]):
        for key in square:
            if key in s and (len(s[key]) != n or any(len(r) != n for r in s[key])):
                problems.append((("samples", k, key), f"{key} must be {n} x {n}"))
        for key in vectors:
            if key in s and len(s[key]) != n:
                problems.append((("samples", k, key), f"{key} must have length {n}"))
    if problems:
        raise ConfigError("\n".join(f"{source}:{_best_line(lines, p)}: {msg}" for p, msg in problems))


def load_fixture(path, geometry: str | None = None):
    """Load a curvature fixture; returns ``(geometry, samples, curve_meta)``.

    ``geometry`` defaults to the document's own ``geometry`` field, else
    ``"legendrean"``.  CR samples inherit a top-level ``h`` when they do not
    carry their own.
    """
    from .cr import CRSample
    from .legendrean import LegendreanSample

    doc, text = load_document(path)
    source = Path(path).name
    if geometry is None:
        geometry = doc.get("geometry", "legendrean") if isinstance(doc, dict) else "legendrean"
    if geometry not in FIXTURE_SCHEMAS:
        raise ConfigError(f"{source}: unknown fixture geometry {geometry!r}")
    validate_document(doc, FIXTURE_SCHEMAS[geometry], text, source)
    _check_shapes(doc, geometry, source, value_lines(text))
    n = doc["n"]
    try:
        if geometry == "legendrean":
            samples = [LegendreanSample.from_json(n, s) for s in doc["samples"]]
        else:
            samples = [CRSample.from_json(n, {"h": doc.get("h"), **s}) for s in doc["samples"]]
    except ParabolicScalesError as exc:
        raise type(exc)(f"{source}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return geometry, samples, doc.get("curve_meta", {})


def load_config(path) -> dict:
    doc, text = load_document(path)
    source = Path(path).name
    validate_document(doc, CONFIG_SCHEMA, text, source)
    validate_document(doc, COMMAND_SCHEMAS[doc["command"]], text, source)
    return doc
