"""Command line interface.

Verbs:
  run        full pipeline: hypotheses, periods, invariants, lattice,
             spectra, matching, scaling, multiplicity; writes outputs
  validate   hypothesis checks only (H1 regularity probe, config sanity)
  invariants classical side only: periods, actions, Maslov, subprincipal
  spectrum   quantum side only: joint spectra for the configured h grid
"""

import argparse
import sys as _sys

import numpy as np

from .errors import SemilatError, HypothesisViolation
from .config import load_config
from .models import (EnergyLevel, make_system, find_level_point,
                     seed_level_points, validate_regular_proper)
from .periods import detect_period_lattice
from .invariants import compute_cycle_invariants
from . import runner


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="semilat",
        description="Bohr-Sommerfeld lattices for commuting Hamiltonians")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb in ("run", "validate", "invariants", "spectrum"):
        p = sub.add_parser(verb)
        p.add_argument("config", help="path to the JSON experiment config")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None,
                       help="seed override for all stochastic stages")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel workers over the h grid")
        p.add_argument("--format", choices=("json", "csv", "both"),
                       default=None, help="output format override")
    return ap


def _formats(cfg, args):
    if args.format is None:
        return cfg.formats
    return ["json", "csv"] if args.format == "both" else [args.format]


def _system_and_point(cfg, seed):
    sys_ = make_system(cfg.model_name, params=cfg.model_params, q1=cfg.q1,
                       E0=cfg.e0)
    rng = np.random.default_rng(seed)
    if cfg.seed_guess is not None:
        p0 = find_level_point(sys_, cfg.e0, cfg.seed_guess,
                              tol_level=cfg.tolerances["tol_level"])
    else:
        p0 = seed_level_points(sys_, cfg.e0, 1, rng,
                               tol_level=cfg.tolerances["tol_level"])[0]
    return sys_, p0, rng


def _cmd_run(cfg, args):
    bundle = runner.run_experiment(cfg, seed=args.seed, jobs=args.jobs)
    out_dir = args.out or cfg.out_dir
    files = runner.emit(bundle, out_dir, formats=_formats(cfg, args))
    for f in files:
        print(f)
    if bundle.scaling is not None:
        print(bundle.scaling.summary())
    return 0


def _cmd_validate(cfg, args):
    seed = args.seed if args.seed is not None else 0
    sys_, p0, rng = _system_and_point(cfg, seed)
    if not sys_.metadata.get("connected", False):
        raise HypothesisViolation("H4", "level set not marked connected")
    level = EnergyLevel(E0=cfg.e0, seed_points=[p0])
    rep = validate_regular_proper(sys_, level, rng=rng)
    print(f"min singular value: {rep.min_singular_value:.17g}")
    print(f"max point norm:     {rep.max_point_norm:.17g}")
    if not rep.ok:
        raise HypothesisViolation("H1", "; ".join(rep.messages))
    print("hypotheses: ok")
    return 0


def _cmd_invariants(cfg, args):
    seed = args.seed if args.seed is not None else 0
    sys_, p0, rng = _system_and_point(cfg, seed)
    tol = cfg.tolerances
    lat = detect_period_lattice(sys_, p0, tol_period=tol["tol_period"],
                                tol_flow=tol["tol_flow"])
    extra = seed_level_points(sys_, cfg.e0, 2, rng,
                              tol_level=tol["tol_level"])
    inv = compute_cycle_invariants(sys_, p0, lat.basis,
                                   tol_flow=tol["tol_flow"],
                                   extra_points=extra,
                                   tol_base=tol["tol_base"])
    print("period basis columns:")
    for j in range(sys_.k):
        print("  " + " ".join(f"{v:.17g}" for v in lat.basis[:, j]))
    print(inv.summary())
    return 0


def _cmd_spectrum(cfg, args):
    sys_ = make_system(cfg.model_name, params=cfg.model_params, q1=cfg.q1,
                       E0=cfg.e0)
    for h in cfg.h_grid:
        sp = runner._spectrum_for(cfg, sys_, h)
        print(f"h = {h:.17g}: {len(sp.points)} joint eigenvalues")
        for row in sp.points:
            print("  " + " ".join(f"{v:.17g}" for v in row))
    return 0


_COMMANDS = {"run": _cmd_run, "validate": _cmd_validate,
             "invariants": _cmd_invariants, "spectrum": _cmd_spectrum}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return _COMMANDS[args.verb](cfg, args)
    except SemilatError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
