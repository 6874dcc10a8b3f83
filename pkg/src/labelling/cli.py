"""Command-line entry point: generate, label, rmt-sim, experiment, check."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .data import DEFAULT_BOX
from .feature import FeatureDimensionError, whitened_monomial_map, monomial_map
from .labelcore import check_rows, label_from_coefficients
from .noise import BackgroundNoise, PushforwardSampler, gaussian, uniform_box
from .rmt import (DEFAULT_SIGNAL_SIGMAS, ConcentrationParams,
                  concentration_probability_exponent, delta_f_curve, recommend_delta,
                  signal_smin_table, smin_ratio_table)
from .search import SearchConfig, default_n0, fingerprint, label_search, membership

log = logging.getLogger("labelling")

SEARCH_KEYS = ("delta", "n0", "iterations", "mc_samples", "seeding", "pool_quantile",
               "absorb_order", "density_k", "neighbourhood", "proposals")


class ConfigError(ValueError):
    pass


def load_config(path):
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {path} does not exist")
    cfg = io.read_json(p)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if "seed" not in cfg:
        raise ConfigError("config must contain a 'seed' field")
    for key in ("dataset",):
        if key in cfg and not (p.parent / cfg[key]).exists() and not Path(cfg[key]).exists():
            raise ConfigError(f"config references missing file {cfg[key]}")
    return cfg


def _resolve(args, cfg, key, default=None):
    val = getattr(args, key, None)
    if val is not None:
        return val
    return cfg.get(key, default)


def reference_coefficients(dim, degree, radius=0.8):
    """Monomial coefficients of |x|^2 - radius^2, the default reference label for
    recommending delta."""
    from .feature import monomial_exponents
    exps = monomial_exponents(dim, degree)
    coeffs = np.zeros(len(exps))
    for i, e in enumerate(exps):
        if sum(e) == 0:
            coeffs[i] = -radius ** 2
        elif sum(e) == 2 and max(e) == 2:
            coeffs[i] = 1.0
    return coeffs


def noise_from_config(spec, dim):
    if spec is None:
        return uniform_box([-1.0] * dim, [1.0] * dim)
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind", "uniform_box")
    if kind == "uniform_box":
        return uniform_box(spec.get("lower", [-1.0] * dim), spec.get("upper", [1.0] * dim))
    if kind == "gaussian":
        return gaussian(spec.get("mean", [0.0] * dim), spec.get("cov"))
    if "params" in spec:
        return BackgroundNoise.from_dict(spec)
    raise ConfigError(f"unknown noise kind {kind!r}")


def _write_figures(args):
    return not getattr(args, "no_figures", False)


# ---- generate -------------------------------------------------------------

def cmd_generate(args):
    from .experiments import generate, get_experiment
    cfg = load_config(args.config)
    preset = _resolve(args, cfg, "preset")
    if preset is None:
        raise ConfigError("generate needs --preset (or 'preset' in the config)")
    exp = get_experiment(preset).with_overrides(_resolve(args, cfg, "seed"))
    points, truth = generate(exp)
    out = Path(_resolve(args, cfg, "out", "."))
    io.write_points(out / "dataset.csv", points)
    io.write_json(out / "truth.json", truth.to_dict())
    if _write_figures(args):
        from .plotting import plot_atlas
        plot_atlas(out / "dataset.png", points, None, None, title=exp.name)
    print(f"wrote {len(points)} points to {out / 'dataset.csv'}")
    return 0


# ---- label ----------------------------------------------------------------

def _feature_map(cfg, dim, noise):
    fm = cfg.get("feature_map", {})
    degree = int(fm.get("k", fm.get("degree", 2)))
    if fm.get("whiten", True):
        return whitened_monomial_map(dim, degree, noise, seed=int(fm.get("seed", 0)))
    return monomial_map(dim, degree)


def cmd_label(args):
    cfg = load_config(args.config)
    dataset = args.dataset or cfg.get("dataset")
    if dataset is None:
        raise ConfigError("label needs a dataset CSV")
    if args.dataset is None and args.config and not Path(dataset).exists():
        dataset = Path(args.config).parent / dataset
    points = io.read_points(dataset)
    dim = points.shape[1]
    noise = noise_from_config(cfg.get("noise"), dim)
    if noise.dim != dim:
        raise FeatureDimensionError(f"noise has dimension {noise.dim}, dataset {dim}")
    fmap = _feature_map(cfg, dim, noise)
    seed = int(_resolve(args, cfg, "seed", 0))
    params = {k: _resolve(args, cfg, k) for k in SEARCH_KEYS}
    params = {k: v for k, v in params.items() if v is not None}
    params.setdefault("n0", default_n0(fmap.output_dim))
    if str(params.get("delta", "")).lower() == "auto":
        rec = cfg.get("recommend", {})
        ref = label_from_coefficients(
            rec.get("coefficients", reference_coefficients(dim, fmap.degree)), fmap)
        params["delta"] = recommend_delta(ref, fmap, noise, len(points),
                                          rec.get("t", 0.7), rec.get("gamma", 0.3),
                                          rec.get("safety", 0.5), seed=seed)
        log.info("recommended delta %.6g", params["delta"])
    params["delta"] = float(params.get("delta", 0.05))
    config = SearchConfig(seed=seed, **params)
    atlas = label_search(points, fmap, noise, config)
    out = Path(_resolve(args, cfg, "out", "."))
    io.write_json(out / "atlas.json", io.atlas_document(atlas, fmap, noise))
    io.write_membership(out / "membership.csv", membership(atlas, len(points)))
    if _write_figures(args) and dim == 2:
        from .plotting import plot_atlas
        plot_atlas(out / "atlas.png", points, atlas, fmap, title=Path(dataset).stem)
    unlabelled = sum(1 for ids in membership(atlas, len(points)) if not ids)
    print(f"{len(atlas)} records; {unlabelled} of {len(points)} points unlabelled; "
          f"delta={config.delta:.6g}")
    return 0


# ---- rmt-sim --------------------------------------------------------------

DEFAULT_SMIN_SIZES = (100, 200, 500, 1000, 2000, 5000)
DEFAULT_DELTA_SIZES = (100, 500, 1000, 5000, 10000)
def cmd_rmt(args):
    cfg = load_config(args.config)
    seed = int(_resolve(args, cfg, "seed", 0))
    t = float(cfg.get("t", 0.7))
    gamma = float(cfg.get("gamma", 0.3))
    n_seeds = int(cfg.get("seeds", args.seeds))
    sizes = cfg.get("smin_sizes", DEFAULT_SMIN_SIZES)
    dsizes = cfg.get("delta_sizes", DEFAULT_DELTA_SIZES)
    samples = int(_resolve(args, cfg, "mc_samples", 20000))
    out = Path(_resolve(args, cfg, "out", "."))

    measures = {"uniform": uniform_box(*DEFAULT_BOX), "gaussian": gaussian([0.0, 0.0])}
    sigmas = cfg.get("signal_sigmas", DEFAULT_SIGNAL_SIGMAS)
    smin_rows, signal_rows = [], []
    curves = {}
    for name, mu in measures.items():
        fmap = whitened_monomial_map(2, 2, mu, seed=seed)
        if name == "uniform":
            seeds = range(seed, seed + n_seeds)
            smin_rows = smin_ratio_table(fmap, mu, sizes, seeds)
            signal_rows = signal_smin_table(fmap, sigmas, sizes, seeds)
        f = label_from_coefficients(reference_coefficients(2, 2), fmap)
        curves[name] = delta_f_curve(f, fmap, mu, dsizes, t, gamma, samples, seed)
    io.write_rows(out / "smin.csv", ["N", "seed", "smin_ratio"], smin_rows)
    io.write_rows(out / "smin_signal.csv", ["sigma", "N", "seed", "smin_ratio"], signal_rows)
    io.write_rows(out / "delta_f.csv", ["noise", "N", "delta_f", "std_error", "endpoint"],
                  [(name, d.n, d.value, d.std_error, d.endpoint)
                   for name, pts in curves.items() for d in pts])
    params = ConcentrationParams(t=t, gamma=gamma, **cfg.get("concentration", {}))
    exps = [concentration_probability_exponent(6, n, params) for n in dsizes]
    io.write_rows(out / "exponent.csv", ["N", "A", "B", "beta", "p"],
                  [(n, e.A, e.B, e.beta, e.p) for n, e in zip(dsizes, exps)])
    if _write_figures(args):
        from .plotting import plot_delta_f, plot_smin
        plot_smin(out / "smin.png", smin_rows, t, gamma, signal_rows)
        plot_delta_f(out / "delta_f.png", curves)
    print(f"wrote smin.csv, smin_signal.csv, delta_f.csv, exponent.csv to {out}")
    return 0


# ---- experiment -----------------------------------------------------------

def cmd_experiment(args):
    from .experiments import run_experiment, write_bundle
    cfg = load_config(args.config)
    name = args.name or cfg.get("name") or cfg.get("preset")
    if name is None:
        raise ConfigError("experiment needs a name")
    overrides = {k: _resolve(args, cfg, k) for k in ("delta", "n0", "iterations", "mc_samples")}
    if overrides["delta"] == "auto":
        raise ConfigError("experiments run at their pinned delta; 'auto' applies to label")
    result = run_experiment(name, seed=_resolve(args, cfg, "seed"), **overrides)
    out = Path(_resolve(args, cfg, "out", name))
    write_bundle(result, out, figures=_write_figures(args))
    verdict = "PASS" if result.passed else "FAIL"
    print(f"{result.experiment.name}: {verdict} ({len(result.atlas)} records) -> {out}")
    return 0


# ---- check ----------------------------------------------------------------

def cmd_check(args):
    points = io.read_points(args.dataset)
    atlas, fmap, noise = io.load_atlas_document(io.read_json(args.atlas))
    if atlas.dataset_fingerprint != fingerprint(points):
        print("dataset fingerprint does not match the atlas", file=sys.stderr)
        return 1
    cfg = atlas.config
    delta = args.delta if args.delta is not None else (cfg.delta if cfg else 0.05)
    samples = args.mc_samples or (cfg.mc_samples if cfg else 20000)
    sampler = PushforwardSampler(fmap, noise, samples, args.seed if args.seed is not None
                                 else (cfg.seed if cfg else 0))
    rows = fmap.evaluate(points)
    bad = 0
    for rid, rec in enumerate(atlas.records):
        chk = check_rows(rec.label, rows[list(rec.members)], sampler, delta, fmap.has_constants)
        bad += not chk.accepted
        print(f"record {rid}: {'ok' if chk.accepted else 'REJECTED'} "
              f"mass={chk.mass.value:.5g} members={len(rec.members)}")
    print(f"{len(atlas) - bad} of {len(atlas)} records re-verified")
    return 1 if bad else 0


# ---- parser ---------------------------------------------------------------

def _common(p, search=False):
    p.add_argument("--config", help="JSON config file (must contain 'seed')")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    if search:
        p.add_argument("--delta", help="label threshold, or 'auto' for the recommended value")
        p.add_argument("--n0", type=int)
        p.add_argument("--iters", dest="iterations", type=int)
        p.add_argument("--mc-samples", dest="mc_samples", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="labelling", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a preset dataset as CSV")
    _common(p)
    p.add_argument("--preset")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("label", help="search a dataset for labels")
    _common(p, search=True)
    p.add_argument("dataset", nargs="?")
    p.add_argument("--seeding", choices=("uniform", "local", "consensus"))
    p.add_argument("--pool-quantile", dest="pool_quantile", type=float)
    p.add_argument("--neighbourhood", type=int,
                   help="consensus seeding: draw the minimal sample near a random anchor")
    p.add_argument("--proposals", type=int,
                   help="consensus seeding: keep the best-supported of this many draws")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("rmt-sim", help="s_min ratio and delta_f curves as CSV")
    _common(p)
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--mc-samples", dest="mc_samples", type=int)
    p.set_defaults(func=cmd_rmt)

    p = sub.add_parser("experiment", help="run a named reproduction")
    _common(p, search=True)
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("check", help="re-verify an atlas against its dataset")
    p.add_argument("atlas")
    p.add_argument("dataset")
    p.add_argument("--seed", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--mc-samples", dest="mc_samples", type=int)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "delta", None) not in (None, "auto") and isinstance(args.delta, str):
        try:
            args.delta = float(args.delta)
        except ValueError:
            print(f"error: --delta must be a number or 'auto', got {args.delta!r}",
                  file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except (ConfigError, io.DatasetParseError, FeatureDimensionError, KeyError,
            ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
