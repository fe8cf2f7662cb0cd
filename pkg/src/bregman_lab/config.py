"""Experiment configuration: flat ``key = value`` files with ``[section]`` headers.

Values are Python/JSON literals (``3``, ``0.5``, ``[1, 0, 0]``); anything
that does not parse as a literal is kept as a bare string.  Example::

    [experiment]
    kind = run
    seed = 0

    [domain]
    kind = simplex
    dim = 3

    [generator]
    name = neg_entropy

    [objective]
    name = linear
    c = [1, 0, 0]

    [algorithm]
    name = mirror_descent
    K = 1000
"""

from __future__ import annotations

import ast
import configparser
import importlib
import os
from dataclasses import dataclass, field

from .generators import GENERATORS
from .objectives import OBJECTIVES

KINDS = ("run", "probe-a", "probe-b", "counterexample", "blowup", "diagnose")
ALGORITHMS = ("mirror_descent", "bregman_gradient", "proximal_d", "alternating_projections")
DOMAIN_KINDS = ("simplex", "box", "ball", "polytope")
CURVE_KINDS = ("chord", "radial", "tangential")
SCHEDULES = ("decaying", "constant")
SEED_ENV = "BREGMAN_LAB_SEED"


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _vector(v):
    return isinstance(v, (list, tuple)) and len(v) > 0 and all(_is_num(e) for e in v)


def _matrix(v):
    return isinstance(v, (list, tuple)) and len(v) > 0 and all(_vector(r) for r in v)


TYPES = {
    "int": (lambda v: isinstance(v, int) and not isinstance(v, bool), "an integer"),
    "float": (_is_num, "a number"),
    "str": (lambda v: isinstance(v, str), "a name"),
    "vector": (_vector, "a list of numbers"),
    "matrix": (_matrix, "a list of lists of numbers"),
    "scalar_or_vector": (lambda v: _is_num(v) or _vector(v), "a number or list of numbers"),
    "vector_or_matrix": (lambda v: _vector(v) or _matrix(v), "a list (of lists) of numbers"),
    "names": (lambda v: isinstance(v, str) or (isinstance(v, (list, tuple))
                                               and all(isinstance(e, str) for e in v)),
              "a name or list of names"),
}

SCHEMA = {
    "experiment": {"kind": "str", "seed": "int"},
    "domain": {"kind": "str", "dim": "int", "lo": "scalar_or_vector", "hi": "scalar_or_vector",
               "radius": "float", "center": "vector", "A": "matrix", "b": "vector"},
    "generator": {"name": "str"},
    "objective": {"name": "str", "c": "vector", "a": "scalar_or_vector", "value": "float",
                  "solution": "vector_or_matrix"},
    "algorithm": {"name": "str", "K": "int", "alpha": "float", "alpha0": "float",
                  "exponent": "float", "schedule": "str", "x0": "vector", "A": "matrix",
                  "b": "vector", "witness": "vector"},
    "probe": {"target": "vector", "curves": "names", "n_anchors": "int", "anchors": "matrix",
              "j_min": "int", "j_max": "int", "tol": "float", "segment_x": "vector",
              "segment_y": "vector", "z0": "vector", "k_max": "int", "toward": "vector",
              "r_max": "float", "lam": "vector"},
    "diagnose": {"tol": "float"},
}

REQUIRED = {
    "run": [("domain", "kind"), ("generator", "name"), ("algorithm", "name"), ("algorithm", "K")],
    "diagnose": [("domain", "kind"), ("generator", "name"), ("algorithm", "name"),
                 ("algorithm", "K")],
    "probe-b": [("domain", "kind"), ("generator", "name"), ("probe", "target")],
    "probe-a": [("domain", "kind"), ("generator", "name"), ("probe", "segment_x"),
                ("probe", "segment_y"), ("probe", "z0")],
    "blowup": [("domain", "kind"), ("generator", "name"), ("probe", "target"),
               ("probe", "toward")],
    "counterexample": [],
}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    sections: dict
    text: str = ""
    outdir: str | None = None

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def section(self, name) -> dict:
        return dict(self.sections.get(name, {}))


def _literal(raw: str):
    raw = raw.strip()
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        return raw


def resolve_generator(name: str):
    """Registered generator class, or a ``module:attr`` factory taking a domain."""
    if name in GENERATORS:
        return GENERATORS[name]
    if ":" in name:
        module, attr = name.split(":", 1)
        try:
            return getattr(importlib.import_module(module), attr)
        except (ImportError, AttributeError) as exc:
            raise KeyError(f"cannot import generator {name!r}: {exc}") from exc
    raise KeyError(f"unknown generator {name!r}")


def parse_config(text: str, kind: str | None = None) -> ExperimentConfig:
    """Parse and validate; every problem found is reported in one ConfigError."""
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from exc

    errors = []
    sections = {}
    for sec in parser.sections():
        if sec not in SCHEMA:
            errors.append(f"[{sec}]: unknown section")
            continue
        values = {}
        for key, raw in parser.items(sec):
            if key not in SCHEMA[sec]:
                errors.append(f"[{sec}] {key}: unknown key")
                continue
            val = _literal(raw)
            check, desc = TYPES[SCHEMA[sec][key]]
            if SCHEMA[sec][key] == "float" and isinstance(val, int) and not isinstance(val, bool):
                val = float(val)
            if not check(val):
                errors.append(f"[{sec}] {key}: expected {desc}, got {raw!r}")
                continue
            values[key] = val
        sections[sec] = values

    file_kind = sections.get("experiment", {}).get("kind")
    if kind is None:
        kind = file_kind
    elif file_kind is not None and file_kind != kind:
        errors.append(f"[experiment] kind: file says {file_kind!r} but {kind!r} was requested")
    if kind not in KINDS:
        errors.append(f"[experiment] kind: must be one of {', '.join(KINDS)}")
        raise ConfigError(errors)

    for sec, key in REQUIRED[kind]:
        if key not in sections.get(sec, {}):
            errors.append(f"[{sec}] {key}: required for {kind}")

    errors.extend(_check_names_and_bounds(kind, sections))
    if errors:
        raise ConfigError(errors)

    seed = sections.get("experiment", {}).get("seed", 0)
    if os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise ConfigError([f"{SEED_ENV}: not an integer"]) from exc
    return ExperimentConfig(kind, seed, sections, text)


def _check_names_and_bounds(kind, sections):
    errors = []
    dom = sections.get("domain", {})
    if "kind" in dom and dom["kind"] not in DOMAIN_KINDS:
        errors.append(f"[domain] kind: unknown domain {dom['kind']!r}")
    if dom.get("kind") in ("simplex", "box", "ball") and "dim" not in dom \
            and not (dom.get("kind") == "box" and isinstance(dom.get("lo"), list)):
        errors.append("[domain] dim: required for this domain kind")
    if dom.get("kind") == "polytope" and not ("A" in dom and "b" in dom):
        errors.append("[domain] A: polytope needs A and b")
    if "dim" in dom and dom["dim"] < 1:
        errors.append("[domain] dim: must be positive")

    gen = sections.get("generator", {}).get("name")
    if gen is not None:
        try:
            resolve_generator(gen)
        except KeyError as exc:
            errors.append(f"[generator] name: {exc.args[0]}")

    obj = sections.get("objective", {}).get("name")
    if obj is not None and obj not in OBJECTIVES:
        errors.append(f"[objective] name: unknown objective {obj!r}")

    alg = sections.get("algorithm", {})
    if "name" in alg and alg["name"] not in ALGORITHMS:
        errors.append(f"[algorithm] name: unknown algorithm {alg['name']!r}")
    if "K" in alg and alg["K"] < 1:
        errors.append("[algorithm] K: must be >= 1")
    if alg.get("schedule", "decaying") not in SCHEDULES:
        errors.append(f"[algorithm] schedule: must be one of {', '.join(SCHEDULES)}")
    for key in ("alpha", "alpha0"):
        if key in alg and alg[key] <= 0:
            errors.append(f"[algorithm] {key}: must be positive")
    if kind in ("run", "diagnose") and alg.get("name") in ALGORITHMS:
        if alg["name"] == "alternating_projections":
            for key in ("A", "b", "witness"):
                if key not in alg:
                    errors.append(f"[algorithm] {key}: required for alternating_projections")
        elif obj is None:
            errors.append("[objective] name: required for this algorithm")
        if alg["name"] == "bregman_gradient" and "alpha" not in alg:
            errors.append("[algorithm] alpha: required for bregman_gradient")

    probe = sections.get("probe", {})
    curves = probe.get("curves", [])
    for c in [curves] if isinstance(curves, str) else curves:
        if c not in CURVE_KINDS:
            errors.append(f"[probe] curves: unknown curve kind {c!r}")
    if "r_max" in probe and not 0 < probe["r_max"] < 1:
        errors.append("[probe] r_max: must lie in the open interval (0, 1)")
    if "tol" in probe and probe["tol"] <= 0:
        errors.append("[probe] tol: must be positive")
    if probe.get("j_min", 0) > probe.get("j_max", 10 ** 9):
        errors.append("[probe] j_min: must not exceed j_max")
    if kind == "counterexample":
        if dom.get("kind", "ball") != "ball":
            errors.append("[domain] kind: the counterexample lives on the unit disk")
        if gen not in (None, "ball"):
            errors.append("[generator] name: the counterexample uses the ball generator")
    return errors


def load_config(path, kind=None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), kind)
