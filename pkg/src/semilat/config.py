"""Experiment configuration: a single JSON document per run.

Grammar (all keys lowercase; unknown keys rejected):

    {
      "model":      {"name": str, "params": {str: num}, "q1": null | {"kind": str, "coeffs": [num]}},
      "e0":         [num, ...],                 # regular value, length k
      "h_grid":     [num, ...],                 # strictly decreasing, positive
      "backend":    "exact" | "radial" | "none",
      "seed_guess": [num, ...] | null,          # optional 2n start for the level-point search
      "tolerances": {"tol_flow": num, "tol_level": num, "tol_period": num,
                     "tol_eig": num, "tol_comm": num, "tol_base": num,
                     "fit_floor": num},         # any subset; the rest default
      "mc":         null | {"n_samples": int, "seed": int, "epsilon": num},
      "windows":    {"c": [num, ...], "C": num, "c_reject": num},
      "quantum":    {"n_basis": int | null, "e_max": num | null},
      "outputs":    {"directory": str, "formats": ["json" | "csv", ...]}
    }

Every field except model, e0, h_grid has a default.  The only environment
override is the output directory (the --out CLI flag).
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

DEFAULT_TOLERANCES = {
    "tol_flow": 1e-11,
    "tol_level": 1e-10,
    "tol_period": 1e-9,
    "tol_eig": 1e-9,
    "tol_comm": 1e-10,
    "tol_base": 1e-6,
    "fit_floor": 1e-12,
}

_BACKENDS = ("exact", "radial", "none")
_FORMATS = ("json", "csv")


@dataclass
class ExperimentConfig:
    model_name: str
    model_params: dict
    q1: dict
    e0: np.ndarray
    h_grid: list
    backend: str
    seed_guess: np.ndarray
    tolerances: dict
    mc: dict
    window_c: np.ndarray
    window_C: float
    c_reject: float
    n_basis: int
    e_max: float
    out_dir: str
    formats: list
    raw: dict = field(repr=False, default=None)

    def digest(self):
        """Stable hash of the configuration content."""
        blob = json.dumps(self.raw, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def parse_config(doc):
    """Validate a parsed JSON document into an ExperimentConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    known = {"model", "e0", "h_grid", "backend", "seed_guess", "tolerances",
             "mc", "windows", "quantum", "outputs"}
    extra = set(doc) - known
    _require(not extra, f"unknown config keys: {sorted(extra)}")
    for key in ("model", "e0", "h_grid"):
        _require(key in doc, f"missing required key '{key}'")

    model = doc["model"]
    _require(isinstance(model, dict) and "name" in model,
             "model must be an object with a 'name'")
    params = model.get("params", {}) or {}
    q1 = model.get("q1")

    e0 = np.asarray(doc["e0"], dtype=float)
    _require(e0.ndim == 1 and e0.size >= 1, "e0 must be a nonempty vector")

    h_grid = [float(h) for h in doc["h_grid"]]
    _require(len(h_grid) >= 1, "h_grid must be nonempty")
    _require(all(h > 0 for h in h_grid), "h_grid entries must be positive")
    _require(all(a > b for a, b in zip(h_grid, h_grid[1:])),
             "h_grid must be strictly decreasing")

    backend = doc.get("backend", "exact")
    _require(backend in _BACKENDS, f"backend must be one of {_BACKENDS}")

    seed_guess = doc.get("seed_guess")
    if seed_guess is not None:
        seed_guess = np.asarray(seed_guess, dtype=float)

    tol = dict(DEFAULT_TOLERANCES)
    for key, val in (doc.get("tolerances") or {}).items():
        _require(key in DEFAULT_TOLERANCES, f"unknown tolerance '{key}'")
        tol[key] = float(val)

    mc = doc.get("mc")
    if mc is not None:
        _require(isinstance(mc, dict), "mc must be an object or null")
        _require("seed" in mc, "mc.seed is required whenever MC runs")
        mc = {"n_samples": int(mc.get("n_samples", 2_000_000)),
              "seed": int(mc["seed"]),
              "epsilon": float(mc.get("epsilon", 0.0)) or None}

    win = doc.get("windows") or {}
    window_c = np.asarray(win.get("c", [3.0] * e0.size), dtype=float)
    _require(window_c.size == e0.size, "windows.c must have length k")
    window_C = float(win.get("C", 10.0))
    c_reject = float(win.get("c_reject", 10.0))

    q = doc.get("quantum") or {}
    n_basis = q.get("n_basis")
    e_max = q.get("e_max")

    out = doc.get("outputs") or {}
    formats = list(out.get("formats", ["json"]))
    _require(all(f in _FORMATS for f in formats),
             f"formats must be drawn from {_FORMATS}")

    return ExperimentConfig(
        model_name=model["name"], model_params=params, q1=q1, e0=e0,
        h_grid=h_grid, backend=backend, seed_guess=seed_guess,
        tolerances=tol, mc=mc, window_c=window_c, window_C=window_C,
        c_reject=c_reject,
        n_basis=None if n_basis is None else int(n_basis),
        e_max=None if e_max is None else float(e_max),
        out_dir=out.get("directory", "out"), formats=formats, raw=doc)


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)
