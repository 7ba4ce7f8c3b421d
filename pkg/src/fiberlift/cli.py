"""Batch front end: ``fiberlift --config run.ini``.

Config grammar (INI, ``configparser`` syntax, ``#`` / ``;`` comments)::

    [system]
    name = solenoid            ; doubling | pm | expanding_k | solenoid | skew
    lam = 0.4                  ; remaining keys are constructor parameters

    [pipeline]
    name = lift                ; see PIPELINES

    [numeric]
    seed = 1
    atoms = 10000
    ...

    [output]
    dir = out/lift
    png = false

Exit status: 0 all assertions passed, 2 some assertion failed, 1 error.
The envelope ``result.json`` is byte-identical across reruns of the same
config; wall-clock timings go to ``timings.json``.
"""
from __future__ import annotations

import argparse
import configparser
import inspect
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import io as fio
from ._util import keyed_rng, set_threads
from .errors import FiberliftError, ParameterError
from .systems import SYSTEMS, ModulusClass, estimate_shrinking, make_system

log = logging.getLogger("fiberlift")

ENV_OUT = "FIBERLIFT_OUT"

# key -> (type, low, high, default); None bounds are open
NUMERIC = {
    "seed": (int, 0, 2**64 - 1, None),
    "atoms": (int, 1, 1_000_000, 10_000),
    "cells": (int, 1, 100_000, 0),
    "tol": (float, 1e-12, 1.0, 1e-3),
    "n_max": (int, 1, 100_000, 50),
    "m": (int, 2, 1_000_000, 64),
    "construction": (str, None, None, "exact"),
    "samples": (int, 1, 10_000_000, 1000),
    "target_osc": (float, 1e-15, 10.0, 1e-3),
    "potential": (str, None, None, "norm_z"),
    "alpha": (float, 1e-6, 100.0, 1.0),
    "observable": (str, None, None, "y"),
    "observable2": (str, None, None, ""),
    "lags": (int, 1, 10_000, 20),
    "orbit_length": (int, 1000, 100_000_000, 1_000_000),
    "n_block": (int, 100, 10_000_000, 10_000),
    "n_iter": (int, 0, 64, 8),
    "image_size": (int, 8, 4096, 256),
    "sections": (str, None, None, "center; rim"),
    "method": (str, None, None, "exact"),
    "eps": (float, 1e-8, 10.0, 1e-3),
    "n_transfer": (int, 1, 24, 10),
}

# pipeline -> (needs seed, numeric keys used)
PIPELINES = {
    "lift": (False, ("atoms", "tol", "n_max", "cells")),
    "uniqueness": (False, ("atoms", "tol", "n_max", "sections")),
    "stable-leaf": (True, ("atoms", "tol", "n_max", "samples")),
    "ulam": (False, ("m", "construction", "samples")),
    "spectrum": (True, ("m", "construction", "samples", "n_max", "observable")),
    "coboundary": (True, ("atoms", "tol", "target_osc", "potential", "alpha")),
    "corr": (True, ("observable", "observable2", "lags", "orbit_length")),
    "clt": (True, ("observable", "n_block", "samples", "orbit_length", "atoms", "tol")),
    "attractor": (False, ("n_iter", "image_size")),
    "wasserstein": (True, ("atoms", "method", "eps")),
}

OBSERVABLES = {
    "y": lambda x: x[:, 0],
    "cos": lambda x: np.cos(2 * np.pi * x[:, 0]),
    "z": lambda x: x[:, 1],
    "z1": lambda x: x[:, 1],
    "z2": lambda x: x[:, 2],
    "norm_z": lambda x: np.linalg.norm(x[:, 1:], axis=1),
    "abs_z1": lambda x: np.abs(x[:, 1]),
    "y_plus_z": lambda x: x[:, 0] + x[:, 1],
    "zero": lambda x: np.zeros(x.shape[0]),
    "one": lambda x: np.ones(x.shape[0]),
}


class ConfigError(FiberliftError, ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


class RunConfig:
    """Validated run configuration."""

    def __init__(self, system, system_params, pipeline, numeric, out_dir, png, text=""):
        self.system = system
        self.system_params = system_params
        self.pipeline = pipeline
        self.numeric = numeric
        self.out_dir = out_dir
        self.png = png
        self.text = text

    def get(self, key):
        return self.numeric.get(key, NUMERIC[key][3])

    def echo(self):
        return {"system": {"name": self.system, **self.system_params},
                "pipeline": self.pipeline, "numeric": dict(sorted(self.numeric.items())),
                "png": self.png}

    @classmethod
    def from_text(cls, text, source="<config>"):
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
        try:
            cp.read_string(text, source=source)
        except configparser.ParsingError as exc:
            line, raw = exc.errors[0] if exc.errors else (0, "")
            raise ConfigError(f"{source}: parse error at line {line}, column 1: {raw}") from None
        except configparser.Error as exc:
            raise ConfigError(f"{source}: {exc}") from None
        unknown = set(cp.sections()) - {"system", "pipeline", "numeric", "output"}
        if unknown:
            raise ConfigError(f"{source}: unknown section(s) {sorted(unknown)}")
        for sec in ("system", "pipeline"):
            if not cp.has_section(sec):
                raise ConfigError(f"{source}: missing [{sec}] section")
        sysd = dict(cp["system"])
        name = sysd.pop("name", None)
        if name not in SYSTEMS:
            raise ConfigError(f"{source}: [system] name must be one of {sorted(SYSTEMS)}, "
                              f"got {name!r}")
        params = _system_params(name, sysd, source)
        pipe = dict(cp["pipeline"])
        pname = pipe.pop("name", None)
        if pname not in PIPELINES:
            raise ConfigError(f"{source}: [pipeline] name must be one of {sorted(PIPELINES)}, "
                              f"got {pname!r}")
        if pipe:
            raise ConfigError(f"{source}: unknown key(s) in [pipeline]: {sorted(pipe)}")
        numeric = {}
        if cp.has_section("numeric"):
            for key, raw in cp["numeric"].items():
                if key not in NUMERIC:
                    raise ConfigError(f"{source}: unknown key {key!r} in [numeric]")
                numeric[key] = _parse_knob(key, raw, source)
        needs_seed, _ = PIPELINES[pname]
        out = {}
        if cp.has_section("output"):
            out = dict(cp["output"])
            bad = set(out) - {"dir", "png"}
            if bad:
                raise ConfigError(f"{source}: unknown key(s) in [output]: {sorted(bad)}")
        png = out.get("png", "false").strip().lower() in ("1", "true", "yes", "on")
        cfg = cls(name, params, pname, numeric, out.get("dir"), png, text)
        cfg.needs_seed = needs_seed
        return cfg

    @classmethod
    def from_file(cls, path):
        p = Path(path)
        return cls.from_text(p.read_text(encoding="utf-8"), source=str(p))


def _system_params(name, raw, source):
    sig = inspect.signature(SYSTEMS[name])
    out = {}
    for key, val in raw.items():
        if key not in sig.parameters:
            raise ConfigError(f"{source}: unknown parameter {key!r} for system {name!r} "
                              f"(allowed: {sorted(sig.parameters)})")
        default = sig.parameters[key].default
        try:
            if isinstance(default, bool):
                out[key] = val.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                out[key] = int(val)
            elif isinstance(default, float):
                out[key] = float(val)
            else:
                out[key] = val.strip()
        except ValueError:
            raise ConfigError(f"{source}: bad value {val!r} for system parameter {key!r}") from None
    return out


def _parse_knob(key, raw, source):
    typ, lo, hi, _ = NUMERIC[key]
    try:
        v = typ(float(raw)) if typ is int and "e" in raw.lower() else typ(raw.strip())
    except ValueError:
        raise ConfigError(f"{source}: [numeric] {key} = {raw!r} is not a valid {typ.__name__}") \
            from None
    if lo is not None and not lo <= v <= hi:
        raise ConfigError(f"{source}: [numeric] {key} = {v} outside [{lo}, {hi}]")
    return v


# ---------------------------------------------------------------------------
# pipelines; each returns (results, assertions, files) where files maps a
# file name to a writer taking a path


def _base_cloud(sys_, atoms):
    from .measures import invariant_grid_cloud, uniform_base_cloud

    try:
        return invariant_grid_cloud(sys_.base, atoms)
    except ParameterError:
        return uniform_base_cloud(atoms)


def _sections(sys_, spec):
    out = []
    for item in spec.split(";"):
        item = item.strip()
        if item == "center":
            out.append(sys_.fiber_domain.center)
        elif item == "rim":
            out.append(sys_.fiber_domain.boundary_point())
        else:
            out.append(np.array([float(t) for t in item.split(",")]))
    return out


def _observable(name):
    if name not in OBSERVABLES:
        raise ConfigError(f"unknown observable {name!r} (allowed: {sorted(OBSERVABLES)})")
    return OBSERVABLES[name]


def run_lift(cfg, sys_):
    from .lifting import lift_measure

    base = _base_cloud(sys_, cfg.get("atoms"))
    res = lift_measure(sys_, base, cfg.get("tol"), cfg.get("n_max"),
                       n_cells=cfg.get("cells") or None, seed=cfg.get("seed") or 0)
    files = {"trace.csv": lambda p: fio.trace_to_csv(res.cauchy_trace, p),
             "lifted.csv": lambda p: fio.measure_to_csv(res.lifted, p)}
    return res.to_dict(), {"converged": res.converged}, files


def run_uniqueness(cfg, sys_):
    from .lifting import check_lift_uniqueness

    base = _base_cloud(sys_, cfg.get("atoms"))
    rep = check_lift_uniqueness(sys_, base, _sections(sys_, cfg.get("sections")), cfg.get("tol"),
                                cfg.get("n_max"))
    out = {"distances": rep.distances, "max_distance": rep.max_distance, "metric": rep.metric,
           "iterations": [r.iterations for r in rep.results]}
    return out, {"unique": rep.unique}, {}


def run_stable_leaf(cfg, sys_):
    from .lifting import lift_measure, stable_leaf_experiment
    from .measures import EmpiricalMeasure

    base = _base_cloud(sys_, cfg.get("atoms"))
    ref = lift_measure(sys_, base, cfg.get("tol"), cfg.get("n_max"))
    rng = keyed_rng(cfg.get("seed"), 91)
    u = rng.random((len(base), sys_.dim))
    pts = sys_.from_unit(u)
    pts[:, 0] = base.base_coords
    nu = EmpiricalMeasure(pts, base.weights)
    sl = stable_leaf_experiment(sys_, nu, ref, n_max=min(cfg.get("n_max"), 30),
                                max_atoms=cfg.get("samples"), seed=cfg.get("seed"))
    files = {"stable_leaf.csv": lambda p: fio.trace_to_csv(sl.distances, p)}
    ok = sl.fit.model == "exponential" and sl.fit.rate < 0.7
    return {"distances": sl.distances, "fit": sl.fit, "exact_vertical": sl.exact_vertical}, \
        {"exponential_below_0.7": ok}, files


def _ulam(cfg, sys_):
    from .transfer import build_ulam

    return build_ulam(sys_.base, cfg.get("m"), cfg.get("construction"), cfg.get("samples"),
                      seed=cfg.get("seed") or 0)


def run_ulam(cfg, sys_):
    from .transfer import invariant_density

    op = _ulam(cfg, sys_)
    rep = invariant_density(op, seed=cfg.get("seed") or 0)
    out = {"m": op.m, "construction": op.construction, "row_sum_error": op.row_sum_error(),
           "leading_eigenvalue": rep.leading_eigenvalue, "nnz": int(op.matrix.nnz)}
    files = {"operator.csv": lambda p: fio.operator_to_csv(op, p)}
    return out, {"leading_eigenvalue_is_1": abs(rep.leading_eigenvalue - 1) <= 1e-6}, files


def run_spectrum(cfg, sys_):
    from .measures import GridMeasure
    from .transfer import invariant_density, operator_decay

    op = _ulam(cfg, sys_)
    rep = invariant_density(op, seed=cfg.get("seed"))
    f = _observable(cfg.get("observable"))
    arr, fit = operator_decay(op, lambda c: f(c[:, None]), min(cfg.get("n_max"), 200), rep.density)
    gm = GridMeasure(rep.density / rep.density.sum())
    files = {"density.csv": lambda p: fio.grid_to_csv(gm, p),
             "decay.csv": lambda p: fio.trace_to_csv(arr, p, ("n", "sup_norm"))}
    return {"spectral": rep, "decay_fit": fit}, \
        {"leading_eigenvalue_is_1": abs(rep.leading_eigenvalue - 1) <= 1e-6}, files


def run_coboundary(cfg, sys_):
    from .lifting import lift_measure
    from .thermo import Potential, build_coboundary, energy_consistency

    seed = cfg.get("seed")
    shrink = estimate_shrinking(sys_, seed=seed)
    phi = Potential(_observable(cfg.get("potential")), ModulusClass("holder", cfg.get("alpha")))
    cob = build_coboundary(sys_, phi, shrink, cfg.get("target_osc"), seed=seed)
    lifted = lift_measure(sys_, _base_cloud(sys_, cfg.get("atoms")), cfg.get("tol"), shrink=shrink)
    en = energy_consistency(phi, cob, lifted)
    grid = (np.arange(256) + 0.5) / 256
    vals = cob.phi_check(grid)
    files = {"phi_check.csv": lambda p: fio.write_csv(p, ["y", "phi_check"], zip(grid, vals))}
    asserts = {"oscillation_within_bound": cob.fiber_oscillation <= 1.1 * cob.truncation_bound,
               "energy_consistent": en.base_gap <= cfg.get("target_osc") + 1e-9}
    return {"coboundary": cob, "energy": en, "shrink_fit": shrink.fit}, asserts, files


def run_corr(cfg, sys_):
    from .stats import correlations

    f = _observable(cfg.get("observable"))
    g = _observable(cfg.get("observable2") or cfg.get("observable"))
    tr = correlations(sys_, f, g, cfg.get("lags"), orbit_length=cfg.get("orbit_length"),
                      seed=cfg.get("seed"))
    files = {"correlations.csv": lambda p: fio.write_csv(
        p, ["n", "cov", "stderr"], zip(tr.lags.tolist(), tr.cov, tr.stderr))}
    return tr.to_dict(), {"decays": tr.fit.decays or tr.fit.reason == "exact collapse"}, files


def run_clt(cfg, sys_):
    from .lifting import lift_measure
    from .stats import clt_diagnostic

    base = _base_cloud(sys_, cfg.get("atoms"))
    mu = lift_measure(sys_, base, cfg.get("tol")).lifted if sys_.dim_fiber else base
    rep = clt_diagnostic(sys_, mu, _observable(cfg.get("observable")), cfg.get("n_block"),
                         cfg.get("samples"), orbit_length=cfg.get("orbit_length"),
                         seed=cfg.get("seed"))
    files = {"block_sums.csv": lambda p: fio.write_csv(p, ["i", "z"], enumerate(rep.samples))}
    return rep.to_dict(), {"ks_below_0.05": (not rep.degenerate) and rep.ks_statistic < 0.05}, files


def run_attractor(cfg, sys_):
    from .render import annulus_mask, render_attractor

    r = render_attractor(sys_, cfg.get("n_iter"), cfg.get("image_size"))
    viol = r.nesting_violations()
    outside = [int((x & ~annulus_mask(r.size)).sum()) for x in r.rasters]
    files = {f"attractor_{n:02d}.ppm": (lambda p, n=n: fio.write_ppm(p, r.rasters[n]))
             for n in range(len(r.rasters))}
    if cfg.png:
        files["attractor.png"] = lambda p: fio.write_png(p, r.final)
    out = {"lit_pixels": [int(x.sum()) for x in r.rasters], "nesting_violations": viol,
           "outside_annulus": outside, "points": r.n_points}
    return out, {"nested": all(v == 0 for v in viol), "inside_annulus": not any(outside),
                 "non_empty": bool(r.final.any())}, files


def run_wasserstein(cfg, sys_):
    from .measures import uniform_total_cloud
    from .transport import wasserstein_discrete

    seed = cfg.get("seed")
    n = min(cfg.get("atoms"), 5000)
    a = uniform_total_cloud(sys_, n, seed=seed)
    b = uniform_total_cloud(sys_, n, seed=seed + 1)
    cost, cp = wasserstein_discrete(a, b, cfg.get("method"), system=sys_, eps=cfg.get("eps"),
                                    return_coupling=True)
    files = {"coupling.csv": lambda p: fio.coupling_to_csv(cp, p)}
    err = cp.marginal_error(a.weights, b.weights)
    return {"cost": cost, "method": cp.method, "marginal_error": err, "info": cp.info}, \
        {"marginals": err <= 1e-9 if cp.method == "exact" else True}, files


RUNNERS = {
    "lift": run_lift, "uniqueness": run_uniqueness, "stable-leaf": run_stable_leaf,
    "ulam": run_ulam, "spectrum": run_spectrum, "coboundary": run_coboundary,
    "corr": run_corr, "clt": run_clt, "attractor": run_attractor,
    "wasserstein": run_wasserstein,
}


# ---------------------------------------------------------------------------
# envelope


def execute(cfg, out_dir):
    """Run a validated config and write all artifacts; returns the exit code."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if getattr(cfg, "needs_seed", False) and "seed" not in cfg.numeric:
        raise ConfigError(f"pipeline {cfg.pipeline!r} is stochastic: [numeric] seed is required")
    t0 = time.perf_counter()
    sys_ = make_system(cfg.system, **cfg.system_params)
    results, asserts, files = RUNNERS[cfg.pipeline](cfg, sys_)
    t1 = time.perf_counter()
    manifest = {}
    for name in sorted(files):
        path = files[name](out_dir / name)
        if path is not None:
            manifest[name] = fio.file_sha1(out_dir / name)
    env = {
        "version": __version__,
        "config": cfg.echo(),
        "config_hash": fio.git_blob_sha1(cfg.text),
        "pipeline": cfg.pipeline,
        "results": results,
        "assertions": asserts,
        "passed": all(bool(v) for v in asserts.values()),
        "files": manifest,
    }
    fio.write_json(out_dir / "result.json", env)
    fio.write_json(out_dir / "timings.json", {"pipeline_seconds": t1 - t0,
                                              "total_seconds": time.perf_counter() - t0})
    return 0 if env["passed"] else 2


def build_parser():
    p = argparse.ArgumentParser(prog="fiberlift", description=__doc__.split("\n")[0])
    p.add_argument("--config", required=True, help="INI run configuration")
    p.add_argument("--out", help=f"output directory (default: [output] dir, ${ENV_OUT}, ./out)")
    p.add_argument("--threads", type=int, help="worker threads for parallel stages")
    p.add_argument("--seed", type=int, help="override [numeric] seed")
    p.add_argument("--verbose", "-v", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out_dir = None
    try:
        cfg = RunConfig.from_file(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.numeric["seed"] = args.seed
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be >= 1")
            set_threads(args.threads)
        out_dir = args.out or cfg.out_dir or os.environ.get(ENV_OUT) or "out"
        code = execute(cfg, out_dir)
        log.info("wrote %s (exit %d)", Path(out_dir) / "result.json", code)
        return code
    except (FiberliftError, ValueError, OSError) as exc:
        print(f"fiberlift: error: {exc}", file=sys.stderr)
        if out_dir is not None:
            try:
                fio.write_json(Path(out_dir) / "result.json",
                               {"error": f"{type(exc).__name__}: {exc}", "passed": False})
            except OSError:
                pass
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
