"""Config-driven experiment pipeline and result emission.

run_experiment wires the full chain: hypothesis validation, period
detection, cycle invariants, Liouville density, lattice prediction, per-h
joint spectra, matching, deviation scaling, and multiplicity profiles.  Any
hypothesis failure aborts with a diagnostic naming the violated hypothesis.

Output is one JSON bundle plus optional CSV tables.  All floats are printed
with 17 significant digits so that reruns with the same config and seed are
byte-identical (the timestamp is the single excluded field).
"""

import csv
import datetime
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import HypothesisViolation, InputError
from .models import (EnergyLevel, make_system, find_level_point,
                     seed_level_points, validate_regular_proper)
from .periods import detect_period_lattice
from .invariants import compute_cycle_invariants, liouville_volume, density_constant
from .lattice import build_lattice_spec, enumerate_lattice
from .quantum import build_operators, joint_spectrum, radial_sector_spectrum
from .verify import fit_deviation_scaling, match_spectrum, multiplicity_profile

SCHEMA_VERSION = 1


@dataclass
class ResultBundle:
    """Everything one experiment produces, ready for serialization."""

    config_echo: dict
    config_hash: str
    code_version: str
    seed: int
    lattice_spec: object = None
    period_basis: np.ndarray = None
    invariants: object = None
    volume: object = None
    l0: float = None
    per_h: list = field(default_factory=list)
    scaling: object = None
    timestamp: str = ""


def _fmt(x):
    return f"{float(x):.17g}"


def _jsonify(obj):
    """Render a python structure as deterministic JSON text.

    The standard encoder prints floats with shortest-roundtrip repr; here
    every float goes through the same 17-significant-digit format, which the
    regression tests rely on.
    """
    out = io.StringIO()

    def emit(o):
        if o is None:
            out.write("null")
        elif o is True:
            out.write("true")
        elif o is False:
            out.write("false")
        elif isinstance(o, (int, np.integer)):
            out.write(str(int(o)))
        elif isinstance(o, (float, np.floating)):
            out.write(_fmt(o))
        elif isinstance(o, str):
            out.write('"' + o.replace("\\", "\\\\").replace('"', '\\"') + '"')
        elif isinstance(o, dict):
            out.write("{")
            for i, (key, val) in enumerate(o.items()):
                if i:
                    out.write(",")
                emit(str(key))
                out.write(":")
                emit(val)
            out.write("}")
        elif isinstance(o, (list, tuple, np.ndarray)):
            seq = o.tolist() if isinstance(o, np.ndarray) else o
            out.write("[")
            for i, val in enumerate(seq):
                if i:
                    out.write(",")
                emit(val)
            out.write("]")
        else:
            raise InputError(f"cannot serialize {type(o).__name__}")

    emit(obj)
    return out.getvalue()


def _spectrum_for(cfg, sys, h):
    window_top = float(np.max(cfg.e0 + cfg.window_c * h))
    if cfg.backend == "radial":
        e_max = cfg.e_max if cfg.e_max is not None else window_top + 0.2
        return radial_sector_spectrum(sys, h, e_max=e_max)
    n_basis = cfg.n_basis
    if n_basis is None:
        n_basis = int(np.ceil(window_top / h)) + 3
    ops = build_operators(sys, h, n_basis)
    comm = ops.commutator_norm()
    if comm > cfg.tolerances["tol_comm"]:
        raise HypothesisViolation(
            "H4", f"operator commutator norm {comm:.3e} exceeds "
            f"tol_comm {cfg.tolerances['tol_comm']:.1e}")
    return joint_spectrum(ops, tol_degen=cfg.tolerances["tol_eig"])


def run_experiment(cfg, seed=None, jobs=1):
    """Execute the full pipeline for one configuration."""
    seed = int(seed if seed is not None else
               (cfg.mc["seed"] if cfg.mc else 0))
    rng = np.random.default_rng(seed)
    bundle = ResultBundle(config_echo=cfg.raw, config_hash=cfg.digest(),
                          code_version=__version__, seed=seed)

    sys = make_system(cfg.model_name, params=cfg.model_params, q1=cfg.q1,
                      E0=cfg.e0)
    if not sys.metadata.get("connected", False):
        raise HypothesisViolation("H4", "level set not marked connected")
    tol = cfg.tolerances
    if cfg.seed_guess is not None:
        p0 = find_level_point(sys, cfg.e0, cfg.seed_guess,
                              tol_level=tol["tol_level"])
    else:
        p0 = seed_level_points(sys, cfg.e0, 1, rng,
                               tol_level=tol["tol_level"])[0]
    level = EnergyLevel(E0=cfg.e0, seed_points=[p0])
    reg = validate_regular_proper(sys, level, rng=rng)
    if not reg.ok:
        raise HypothesisViolation("H1", "; ".join(reg.messages))

    lat = detect_period_lattice(sys, p0, tol_period=tol["tol_period"],
                                tol_flow=tol["tol_flow"])
    extra = seed_level_points(sys, cfg.e0, 2, rng, tol_level=tol["tol_level"])
    inv = compute_cycle_invariants(sys, p0, lat.basis, tol_flow=tol["tol_flow"],
                                   extra_points=extra, tol_base=tol["tol_base"])
    spec = build_lattice_spec(cfg.e0, lat.basis, inv, window_c=cfg.window_c)
    bundle.period_basis = lat.basis
    bundle.invariants = inv
    bundle.lattice_spec = spec

    if cfg.mc is not None:
        vol = liouville_volume(sys, cfg.e0, eps=cfg.mc["epsilon"],
                               n_samples=cfg.mc["n_samples"], seed=seed)
        bundle.volume = vol
        bundle.l0 = density_constant(sys, vol.value, spec.det_a)

    def one_h(h):
        entry = {"h": h}
        if cfg.backend == "none":
            return entry
        sp = _spectrum_for(cfg, sys, h)
        entry["spectrum"] = sp
        entry["match"] = match_spectrum(spec, h, sp.points,
                                        c_reject=cfg.c_reject)
        if cfg.mc is not None:
            l0_err = (bundle.volume.stderr
                      / ((2 * np.pi) ** sys.n * abs(spec.det_a)))
            entry["multiplicity"] = multiplicity_profile(
                spec, h, sp.points, cfg.window_C, bundle.l0,
                l0_stderr=l0_err, n=sys.n)
        return entry

    if jobs > 1 and cfg.backend != "none":
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            bundle.per_h = list(pool.map(one_h, cfg.h_grid))
    else:
        bundle.per_h = [one_h(h) for h in cfg.h_grid]

    reports = [e["match"] for e in bundle.per_h if "match" in e]
    if len(reports) >= 3:
        bundle.scaling = fit_deviation_scaling(reports,
                                               floor=tol["fit_floor"])
    bundle.timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return bundle


def _bundle_dict(bundle):
    d = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": bundle.config_hash,
        "code_version": bundle.code_version,
        "seed": bundle.seed,
        "config": bundle.config_echo,
        "timestamp": bundle.timestamp,
    }
    if bundle.lattice_spec is not None:
        d["lattice_spec"] = bundle.lattice_spec.to_dict()
        d["period_basis"] = bundle.period_basis
        inv = bundle.invariants
        d["invariants"] = {
            "alpha": inv.alpha, "mu": [int(m) for m in inv.mu],
            "delta": inv.delta, "return_residuals": inv.return_residuals,
            "base_point_spread": inv.base_point_spread,
        }
    if bundle.volume is not None:
        v = bundle.volume
        d["liouville"] = {"volume": v.value, "stderr": v.stderr,
                          "epsilon": v.eps, "n_samples": v.n_samples,
                          "richardson_drift": v.richardson_drift,
                          "l0": bundle.l0}
    d["per_h"] = []
    for entry in bundle.per_h:
        e = {"h": entry["h"]}
        if "spectrum" in entry:
            e["spectrum"] = entry["spectrum"].points
        if "match" in entry:
            m = entry["match"]
            e["match"] = {
                "reject_radius": m.reject_radius,
                "max_deviation": m.max_deviation,
                "n_matched": len(m.pairs),
                "n_unmatched_spectrum": len(m.unmatched_spectrum),
                "n_unmatched_lattice": len(m.unmatched_lattice),
                "pairs": [{"point": pt, "n": list(pred.n), "deviation": dev}
                          for pt, pred, dev in m.pairs],
                "unmatched_spectrum": m.unmatched_spectrum,
            }
        if "multiplicity" in entry:
            mp = entry["multiplicity"]
            e["multiplicity"] = {
                "half_width": mp.half_width,
                "predicted": mp.predicted,
                "indices": [list(n) for n in mp.indices],
                "counts": [int(c) for c in mp.counts],
                "relative_errors": mp.relative_errors,
            }
        d["per_h"].append(e)
    if bundle.scaling is not None:
        s = bundle.scaling
        d["scaling"] = {"exact": s.exact, "h": s.h_list,
                        "max_deviations": s.max_deviations}
        if not s.exact:
            d["scaling"].update({"fitted_exponent": s.fitted_exponent,
                                 "fit_residual": s.fit_residual,
                                 "prefactor": s.prefactor})
    return d


def bundle_json(bundle, drop_timestamp=False):
    d = _bundle_dict(bundle)
    if drop_timestamp:
        d.pop("timestamp")
    return _jsonify(d)


def emit(bundle, out_dir, formats=("json",)):
    """Write the bundle to disk; returns the list of files written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "json" in formats:
        path = os.path.join(out_dir, "bundle.json")
        with open(path, "w") as fh:
            fh.write(bundle_json(bundle))
            fh.write("\n")
        written.append(path)
    if "csv" in formats:
        written += _emit_csv(bundle, out_dir)
    return written


def _emit_csv(bundle, out_dir):
    k = (bundle.lattice_spec.k if bundle.lattice_spec is not None
         else len(bundle.config_echo["e0"]))
    written = []

    def table(name, header, rows):
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        written.append(path)

    lam_cols = [f"lambda_{j + 1}" for j in range(k)]
    n_cols = [f"n_{j + 1}" for j in range(k)]

    rows = []
    for entry in bundle.per_h:
        if "spectrum" not in entry:
            continue
        pts = entry["spectrum"].points
        uniq, counts = np.unique(pts.round(12), axis=0, return_counts=True)
        for val, cnt in zip(uniq, counts):
            rows.append([_fmt(entry["h"])] + [_fmt(v) for v in val]
                        + [int(cnt), _fmt(0.0)])
    table("spectra.csv", ["h"] + lam_cols + ["multiplicity", "residual"], rows)

    rows = []
    for entry in bundle.per_h:
        if "match" not in entry:
            continue
        for _, pred, dev in entry["match"].pairs:
            rows.append([_fmt(entry["h"]), _fmt(dev)]
                        + [int(m) for m in pred.n])
    table("matches.csv", ["h", "deviation"] + n_cols, rows)

    rows = []
    for entry in bundle.per_h:
        if "match" in entry:
            rows.append([_fmt(entry["h"]),
                         _fmt(entry["match"].max_deviation)])
    table("scaling.csv", ["h", "max_deviation"], rows)

    rows = []
    for entry in bundle.per_h:
        if "multiplicity" not in entry:
            continue
        mp = entry["multiplicity"]
        for n, cnt in zip(mp.indices, mp.counts):
            rows.append([_fmt(entry["h"]),
                         " ".join(str(int(m)) for m in n),
                         int(cnt), _fmt(mp.predicted)])
    table("multiplicity.csv", ["h", "n_index", "N", "predicted"], rows)
    return written
