"""JSON system configuration: schema, parsing, validation and emission.

A config looks like::

    {
      "chart": {"k": 1, "n": 2, "V_box": [[0.5, 1.5]], "W_box": [[-1, 1], [-1, 1]]},
      "form": {
        "zz_block": [{"mu": 1, "nu": 2, "terms": [{"coeff": 1.0}]}],
        "Iz_block": [{"i": 1, "mu": 1, "terms": [{"coeff": 0.5}]}]
      },
      "hamiltonian": {
        "base": [{"coeff": 0.5, "i_pow": [2]}],
        "perturbation": [{"coeff": 1.0, "wave": [1]}],
        "epsilon": 0.01
      },
      "integrator": {"method": "splitting2", "step": 0.01, "steps": 1000, "record_every": 1},
      "analysis": {"T_total": 2000, "tol_torus": 1e-5,
                   "diophantine": {"gamma": 1e-6, "tau": 1, "K_max": 10}},
      "seed": 0
    }

Block indices ``i``, ``mu``, ``nu`` are 1-based, like the coordinate names
``I_1``, ``z_1``.  A term needs ``coeff``; ``i_pow``, ``z_pow`` and ``wave``
default to zero vectors and ``phase`` to 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import jsonschema

from .analysis import ClassifierSettings, DiophantineParams
from .dynamics import HamiltonianSpec
from .geometry import ChartSpec, ScalarField, SymplecticFormSpec, Term
from .integrate import METHODS, IntegratorConfig, atomic_write_text


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


_NUM = {"type": "number"}
_INT_VEC = {"type": "array", "items": {"type": "integer"}}
_BOX = {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}}
_TERM = {
    "type": "object",
    "required": ["coeff"],
    "additionalProperties": False,
    "properties": {
        "coeff": _NUM,
        "i_pow": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "z_pow": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "wave": _INT_VEC,
        "phase": _NUM,
    },
}
_TERMS = {"type": "array", "items": _TERM}

SCHEMA = {
    "type": "object",
    "required": ["chart", "hamiltonian"],
    "additionalProperties": False,
    "properties": {
        "chart": {
            "type": "object",
            "required": ["k", "n", "V_box"],
            "additionalProperties": False,
            "properties": {
                "k": {"type": "integer", "minimum": 1},
                "n": {"type": "integer", "minimum": 1},
                "V_box": _BOX,
                "W_box": _BOX,
            },
        },
        "form": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "zz_block": {"type": "array", "items": {
                    "type": "object", "required": ["mu", "nu", "terms"],
                    "additionalProperties": False,
                    "properties": {"mu": {"type": "integer", "minimum": 1},
                                   "nu": {"type": "integer", "minimum": 1},
                                   "terms": _TERMS}}},
                "Iz_block": {"type": "array", "items": {
                    "type": "object", "required": ["i", "mu", "terms"],
                    "additionalProperties": False,
                    "properties": {"i": {"type": "integer", "minimum": 1},
                                   "mu": {"type": "integer", "minimum": 1},
                                   "terms": _TERMS}}},
            },
        },
        "hamiltonian": {
            "type": "object",
            "required": ["base"],
            "additionalProperties": False,
            "properties": {
                "base": _TERMS,
                "perturbation": _TERMS,
                "epsilon": {"type": "number", "minimum": 0},
            },
        },
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": list(METHODS)},
                "step": {"type": "number", "exclusiveMinimum": 0},
                "steps": {"type": "integer", "minimum": 1},
                "record_every": {"type": "integer", "minimum": 1},
                "newton_tol": {"type": "number", "exclusiveMinimum": 0},
                "newton_max_iter": {"type": "integer", "minimum": 1},
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "T_total": {"type": "number", "exclusiveMinimum": 0},
                "tol_torus": {"type": "number", "exclusiveMinimum": 0},
                "window": {"enum": ["hann", "none"]},
                "diophantine": {
                    "type": "object",
                    "required": ["gamma", "tau", "K_max"],
                    "additionalProperties": False,
                    "properties": {
                        "gamma": {"type": "number", "exclusiveMinimum": 0},
                        "tau": _NUM,
                        "K_max": {"type": "integer", "minimum": 1},
                    },
                },
            },
        },
        "seed": {"type": "integer"},
        "description": {"type": "string"},
    },
}


@dataclass(frozen=True)
class SystemConfig:
    chart: ChartSpec
    form: SymplecticFormSpec
    hamiltonian: HamiltonianSpec
    integrator: IntegratorConfig
    analysis: ClassifierSettings
    seed: int = 0


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def _terms(items, k: int, m: int, where: str) -> ScalarField:
    terms = []
    for idx, item in enumerate(items):
        i_pow = item.get("i_pow", [0] * k)
        z_pow = item.get("z_pow", [0] * m)
        wave = item.get("wave", [0] * k)
        for name, vec, want in (("i_pow", i_pow, k), ("z_pow", z_pow, m), ("wave", wave, k)):
            if len(vec) != want:
                raise ConfigError(
                    f"{where} term {idx}: {name} has length {len(vec)}, expected {want}")
        terms.append(Term(item["coeff"], tuple(i_pow), tuple(z_pow), tuple(wave),
                          item.get("phase", 0.0)))
    return ScalarField(k, m, tuple(terms))


def config_from_dict(doc: dict) -> SystemConfig:
    """Validate a parsed JSON document and build the in-memory config."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is not None:
        raise ConfigError(f"schema violation at {_path(err.absolute_path)}: {err.message}")

    c = doc["chart"]
    k, n = c["k"], c["n"]
    if k > n:
        raise ConfigError(f"chart: need k <= n, got k={k}, n={n}")
    m = 2 * (n - k)
    w_box = c.get("W_box", [])
    if len(c["V_box"]) != k:
        raise ConfigError(f"chart.V_box has {len(c['V_box'])} intervals, expected k={k}")
    if len(w_box) != m:
        raise ConfigError(f"chart.W_box has {len(w_box)} intervals, expected 2(n-k)={m}")
    for name, box in (("V_box", c["V_box"]), ("W_box", w_box)):
        for j, (lo, hi) in enumerate(box):
            if lo > hi:
                raise ConfigError(f"chart.{name}[{j}] is empty: [{lo}, {hi}]")
    chart = ChartSpec(k, n, tuple(map(tuple, c["V_box"])), tuple(map(tuple, w_box)))

    f = doc.get("form", {})
    zz, iz = [], []
    for j, e in enumerate(f.get("zz_block", [])):
        if e["mu"] > m or e["nu"] > m or e["mu"] == e["nu"]:
            raise ConfigError(f"form.zz_block[{j}]: indices ({e['mu']}, {e['nu']}) invalid "
                              f"for m={m}")
        zz.append((e["mu"] - 1, e["nu"] - 1, _terms(e["terms"], k, m, f"form.zz_block[{j}]")))
    for j, e in enumerate(f.get("Iz_block", [])):
        if e["i"] > k or e["mu"] > m:
            raise ConfigError(f"form.Iz_block[{j}]: indices ({e['i']}, {e['mu']}) invalid "
                              f"for k={k}, m={m}")
        iz.append((e["i"] - 1, e["mu"] - 1, _terms(e["terms"], k, m, f"form.Iz_block[{j}]")))
    try:
        form = SymplecticFormSpec(chart, tuple(zz), tuple(iz))
    except ValueError as exc:
        raise ConfigError(f"form: {exc}") from exc

    h = doc["hamiltonian"]
    base = _terms(h["base"], k, m, "hamiltonian.base")
    pert = _terms(h.get("perturbation", []), k, m, "hamiltonian.perturbation")
    try:
        ham = HamiltonianSpec(base, pert, h.get("epsilon", 0.0))
    except ValueError as exc:
        raise ConfigError(f"hamiltonian: {exc}") from exc

    integ = IntegratorConfig(**doc.get("integrator", {}))

    a = doc.get("analysis", {})
    defaults = ClassifierSettings()
    res = defaults.resonance
    if "diophantine" in a:
        d = a["diophantine"]
        if not d["tau"] > k - 1:
            raise ConfigError(f"analysis.diophantine.tau must exceed k-1={k - 1}")
        res = DiophantineParams(d["gamma"], d["tau"], d["K_max"])
    settings = ClassifierSettings(
        T_total=a.get("T_total", defaults.T_total),
        tol_torus=a.get("tol_torus", defaults.tol_torus),
        resonance=res,
        window=a.get("window", defaults.window),
    )
    return SystemConfig(chart, form, ham, integ, settings, doc.get("seed", 0))


def parse_config(path) -> SystemConfig:
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: JSON parse error at line {exc.lineno}, "
                          f"column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(doc)


def _term_dict(t: Term) -> dict:
    return {"coeff": t.coeff, "i_pow": list(t.i_pow), "z_pow": list(t.z_pow),
            "wave": list(t.wave), "phase": t.phase}


def _field_list(f: ScalarField) -> list:
    return [_term_dict(t) for t in f.terms]


def config_to_dict(cfg: SystemConfig) -> dict:
    ch = cfg.chart
    s = cfg.analysis
    return {
        "chart": {"k": ch.k, "n": ch.n, "V_box": [list(b) for b in ch.v_box],
                  "W_box": [list(b) for b in ch.w_box]},
        "form": {
            "zz_block": [{"mu": mu + 1, "nu": nu + 1, "terms": _field_list(f)}
                         for mu, nu, f in cfg.form.zz_entries],
            "Iz_block": [{"i": i + 1, "mu": mu + 1, "terms": _field_list(f)}
                         for i, mu, f in cfg.form.iz_entries],
        },
        "hamiltonian": {
            "base": _field_list(cfg.hamiltonian.base),
            "perturbation": _field_list(cfg.hamiltonian.perturbation),
            "epsilon": cfg.hamiltonian.epsilon,
        },
        "integrator": {
            "method": cfg.integrator.method,
            "step": cfg.integrator.step,
            "steps": cfg.integrator.steps,
            "record_every": cfg.integrator.record_every,
            "newton_tol": cfg.integrator.newton_tol,
            "newton_max_iter": cfg.integrator.newton_max_iter,
        },
        "analysis": {
            "T_total": s.T_total,
            "tol_torus": s.tol_torus,
            "window": s.window,
            "diophantine": {"gamma": s.resonance.gamma, "tau": s.resonance.tau,
                            "K_max": s.resonance.K_max},
        },
        "seed": cfg.seed,
    }


def dumps_config(cfg: SystemConfig) -> str:
    # json writes floats with repr(), the shortest string that round-trips exactly
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


def write_config(cfg: SystemConfig, path):
    atomic_write_text(path, dumps_config(cfg))
