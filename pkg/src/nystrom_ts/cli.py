"""Command-line entry point.

Usage::

    nystrom-ts COMMAND [--config FILE] [--seed N] [--out DIR] [--jobs N]
                       [--rescale] [--some.key=value ...]

Settings come from built-in defaults, then the YAML ``--config`` file, then
dotted ``--key=value`` flags (values parsed as YAML scalars). Every run writes
the fully resolved settings to ``DIR/config.yaml``; passing that file back
with ``--config`` repeats the run.

Exit codes: 0 success, 2 config, 3 data, 4 numerical, 5 I/O.
"""

import argparse
import copy
import logging
import os
import sys
import time

import numpy as np
import yaml

from . import experiments as ex
from .errors import ConfigError, DataError, NumericalError, NystromTSError, StorageError
from .estimator import fit_krr, fit_nystrom, load_model, save_model
from .experiments import EvalProtocol, IIDDesign, Mechanism, rmse
from .kernels import KernelSpec
from .linalg import write_spectrum_csv
from .sampling import SubsampleSpec, resolve
from .seeding import derive_seed, make_rng
from .timeseries import (embed, read_dataset_csv, read_series_csv,
                         write_series_csv)

log = logging.getLogger("nystrom_ts")

COMMANDS = ("simulate", "fit", "predict", "eval", "sweep", "spectrum", "noise")

# noise None picks the map's default: U(-0.7, 0.7) for m1, B(1/2) for m2
_MECH = {"map": "m1", "noise": None, "d": 1, "x0": None, "burn_in": 0}
_KERNEL = {"kind": "wendland", "sigma": None}
_SUB = {"mode": "random", "ratio": 0.1, "m": None, "start": 0, "gap": 0}

DEFAULTS = {
    "simulate": {"mechanism": _MECH, "n": 1000},
    "fit": {"input": None, "d": 1, "n_train": None, "kernel": _KERNEL, "lambda": 0.001,
            "estimator": "nystrom", "subsample": _SUB, "model": "model.txt"},
    "predict": {"model": None, "input": None, "d": 1},
    "eval": {"input": None, "mechanism": _MECH, "d": 1, "n_train": 2000, "n_test": 50,
             "kernel": _KERNEL, "lambda": 0.001, "lambda_grid": None, "holdout_fraction": 0.2,
             "estimator": "nystrom", "subsample": _SUB,
             "protocol": {"refit": "per-step", "target": "denoised"}},
    "sweep": {"kind": "ratio", "mechanism": _MECH, "kernel": _KERNEL, "n": 2000,
              "ns": [2000, 5000, 10000, 20000], "ratios": [0.001, 0.005, 0.01, 0.05, 0.1, 0.5],
              "ratio": 0.01, "m": 100, "positions": ["first", "middle", "last"], "gaps": [5, 20],
              "mode": "random", "lambda": None, "lambda_grid": {"lo": 0.0005, "step": 0.0005, "hi": 0.01},
              "reps": 5, "n_test": 50,
              "protocol": {"refit": "per-step", "target": "denoised"}},
    "spectrum": {"kernel": _KERNEL, "n": 1000, "top_k": 100, "threshold": 1e-3, "n_seeds": 5,
                 "dependent": dict(_MECH, noise={"kind": "bernoulli", "p": 0.5}),
                 "iid": {"low": None, "high": None, "mechanism": None}},
    "noise": {"input": None, "mechanism": dict(_MECH, noise={"kind": "uniform", "low": -0.2, "high": 0.2}),
              "d": 1, "n_train": 2000, "n_heldout": 2000, "kernel": _KERNEL, "lambda": 0.005,
              "subsample": dict(_SUB, ratio=0.01), "bins": 20},
}
SHARED = {"seed": 0, "out": "out", "jobs": 1, "rescale": False}


# ---------------------------------------------------------------- config

def _merge(base, over, path=""):
    for key, val in over.items():
        full = f"{path}{key}"
        if isinstance(val, dict) and isinstance(base.get(key), dict):
            _merge(base[key], val, full + ".")
        else:
            base[key] = val
    return base


def _set_dotted(cfg, key, value):
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            node[p] = {}
        node = node[p]
    node[parts[-1]] = value


def _parse_overrides(extra):
    out = []
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        if "=" in tok:
            key, raw = tok[2:].split("=", 1)
        elif i + 1 < len(extra):
            key, raw = tok[2:], extra[i + 1]
            i += 1
        else:
            raise ConfigError(f"flag {tok} needs a value")
        try:
            out.append((key, yaml.safe_load(raw)))
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse value for {key}: {raw!r}") from exc
        i += 1
    return out


def resolve_config(command, args, extra):
    cfg = copy.deepcopy(DEFAULTS[command])
    cfg.update(copy.deepcopy(SHARED))
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise StorageError(f"cannot read config {args.config}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {args.config} is not valid YAML: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {args.config} must be a mapping")
        loaded.pop("command", None)
        _merge(cfg, loaded)
    for key in ("seed", "out", "jobs"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    if args.rescale:
        cfg["rescale"] = True
    for key, val in _parse_overrides(extra):
        _set_dotted(cfg, key, val)
    return cfg


def _get(cfg, path):
    node = cfg
    for p in path.split("."):
        if not isinstance(node, dict) or p not in node:
            raise ConfigError(f"missing config key {path}")
        node = node[p]
    return node


def _build(cfg, path, factory):
    try:
        return factory(_get(cfg, path))
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config at {path}: {exc}") from exc


def _kernel(cfg):
    return _build(cfg, "kernel", KernelSpec.from_config)


def _sub(cfg, key="subsample"):
    def make(c):
        c = dict(c)
        if c.get("m") is not None:
            c.pop("ratio", None)
        return SubsampleSpec.from_config({k: v for k, v in c.items() if v is not None})
    return _build(cfg, key, make)


def _mech(cfg, key="mechanism"):
    return _build(cfg, key, lambda c: Mechanism.from_config({k: v for k, v in c.items() if v is not None}))


# ---------------------------------------------------------------- helpers

def _out_dir(cfg):
    out = str(cfg["out"])
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _echo(cfg, command, out):
    with open(os.path.join(out, "config.yaml"), "w") as fh:
        yaml.safe_dump({"command": command, **cfg}, fh, sort_keys=True)


def _g(v):
    return format(float(v), ".17g")


def _write_kv(path, items):
    with open(path, "w") as fh:
        for k, v in items:
            if isinstance(v, float):
                v = _g(v)
            fh.write(f"{k} = {v}\n")


def _load_input(path, d):
    """Dataset from a series CSV (embedded with memory ``d``) or an x1..xd,y CSV."""
    if not os.path.exists(path):
        raise StorageError(f"input file {path} does not exist")
    with open(path) as fh:
        header = fh.readline()
    if "value" in [h.strip() for h in header.split(",")]:
        return embed(read_series_csv(path), int(d))
    return read_dataset_csv(path)


def _lambda_choice(cfg, train, kernel, spec, seed):
    grid = cfg.get("lambda_grid")
    if grid:
        grid = _grid(grid)
        return ex.cross_validate(train, kernel, grid, spec, float(cfg.get("holdout_fraction", 0.2)),
                                 derive_seed(seed, "cv")).best_lambda
    if cfg.get("lambda") is None:
        raise ConfigError("set either lambda or lambda_grid")
    return float(cfg["lambda"])


def _grid(grid):
    """``{lo, step, hi}`` mapping or an explicit list of values."""
    try:
        if isinstance(grid, dict):
            return ex.lambda_grid(float(grid["lo"]), float(grid["step"]), float(grid["hi"]))
        if isinstance(grid, (int, float)):
            return [float(grid)]
        return [float(v) for v in grid]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid lambda grid {grid!r}: {exc}") from exc


# ---------------------------------------------------------------- commands

def cmd_simulate(cfg, out):
    mech = _mech(cfg)
    n = int(cfg["n"])
    g = mech.generate(n, derive_seed(cfg["seed"], "simulate"))
    write_series_csv(os.path.join(out, "series.csv"), g)
    log.info("wrote %d values", n)


def cmd_fit(cfg, out):
    if not cfg.get("input"):
        raise ConfigError("fit needs input (series or dataset CSV)")
    if cfg["estimator"] not in ("nystrom", "krr"):
        raise ConfigError(f"estimator must be 'nystrom' or 'krr', got {cfg['estimator']!r}")
    kernel = _kernel(cfg)
    spec = _sub(cfg) if cfg["estimator"] == "nystrom" else None
    data = _load_input(cfg["input"], cfg["d"])
    if cfg.get("n_train"):
        data = data.head(int(cfg["n_train"]))
    seed = derive_seed(cfg["seed"], "fit")
    t0 = time.perf_counter()
    if spec is None:
        lam = _lambda_choice(cfg, data, kernel, None, seed)
        model = fit_krr(data, kernel, lam, rescale=bool(cfg["rescale"]))
    else:
        lam = _lambda_choice(cfg, data, kernel, spec, seed)
        try:
            idx = resolve(spec, len(data), make_rng(seed, "subsample"))
        except NystromTSError as exc:
            raise ConfigError(f"subsample: {exc}") from exc
        model = fit_nystrom(data, kernel, lam, idx, seed=seed, rescale=bool(cfg["rescale"]))
    wall = time.perf_counter() - t0
    save_model(model, os.path.join(out, cfg["model"]))
    train_rmse = rmse(model.predict(data.inputs), data.targets)
    idx = model.meta["index"]
    _write_kv(os.path.join(out, "fit_summary.txt"), [
        ("n", len(data)), ("m", model.m), ("lambda", model.lam), ("rank", model.meta["rank"]),
        ("index", ",".join(str(int(i)) for i in idx)),
        ("train_rmse", train_rmse), ("wall_time_s", f"{wall:.6g}")])
    log.info("fitted n=%d m=%d lambda=%g train_rmse=%.6g in %.3fs", len(data), model.m, model.lam, train_rmse, wall)


def cmd_predict(cfg, out):
    if not cfg.get("model") or not cfg.get("input"):
        raise ConfigError("predict needs model and input")
    try:
        model = load_model(cfg["model"])
    except OSError as exc:
        raise StorageError(f"cannot read model {cfg['model']}: {exc}") from exc
    data = _load_input(cfg["input"], cfg.get("d", model.d))
    preds = model.predict(data.inputs)
    with open(os.path.join(out, "predictions.csv"), "w") as fh:
        fh.write("index,prediction,target\n")
        for i, (p, y) in enumerate(zip(preds, data.targets)):
            fh.write(f"{i},{_g(p)},{_g(y)}\n")
    _write_kv(os.path.join(out, "predict_summary.txt"), [("count", len(data)), ("rmse", rmse(preds, data.targets))])


def _eval_data(cfg, n_train, n_test, seed):
    if cfg.get("input"):
        data = _load_input(cfg["input"], cfg["d"])
        if len(data) < n_train + n_test:
            raise DataError(f"input has {len(data)} samples, need {n_train + n_test}")
        return data.head(n_train), data.subset(slice(n_train, n_train + n_test))
    return _mech(cfg).split(n_train, n_test, seed)


def cmd_eval(cfg, out):
    seed = derive_seed(cfg["seed"], "eval")
    n_train, n_test = int(cfg["n_train"]), int(cfg["n_test"])
    train, test = _eval_data(cfg, n_train, n_test, seed)
    try:
        protocol = EvalProtocol(**cfg["protocol"])
    except TypeError as exc:
        raise ConfigError(f"invalid config at protocol: {exc}") from exc
    if protocol.target == "denoised" and test.noise is None:
        raise ConfigError("protocol.target=denoised needs a series with a noise column")
    kernel = _kernel(cfg)
    spec = None if cfg["estimator"] == "krr" else _sub(cfg)
    lam = _lambda_choice(cfg, train, kernel, spec, seed)
    err, preds = ex.one_step_eval(train, test, kernel, lam, spec, protocol, derive_seed(seed, "run"))
    truth = test.targets if protocol.target == "noisy" else test.denoised_targets
    with open(os.path.join(out, "eval.csv"), "w") as fh:
        fh.write("k,prediction,target\n")
        for k, (p, y) in enumerate(zip(preds, truth)):
            fh.write(f"{k},{_g(p)},{_g(y)}\n")
    _write_kv(os.path.join(out, "eval_summary.txt"), [
        ("n_train", n_train), ("n_test", n_test), ("lambda", lam), ("rmse", err)])


def cmd_sweep(cfg, out):
    kind = cfg["kind"]
    mech = _mech(cfg)
    kernel = _kernel(cfg)
    lambdas = float(cfg["lambda"]) if cfg.get("lambda") is not None else _grid(cfg["lambda_grid"])
    try:
        protocol = EvalProtocol(**cfg["protocol"])
    except TypeError as exc:
        raise ConfigError(f"invalid config at protocol: {exc}") from exc
    common = dict(reps=int(cfg["reps"]), seed=derive_seed(cfg["seed"], "sweep"), kernel=kernel,
                  n_test=int(cfg["n_test"]), protocol=protocol, jobs=int(cfg["jobs"]))
    if kind == "ratio":
        res = ex.ratio_sweep(mech, int(cfg["n"]), [float(r) for r in cfg["ratios"]], lambdas,
                             mode=cfg["mode"], **common)
    elif kind == "scaling":
        res = ex.scaling_sweep(mech, [int(v) for v in cfg["ns"]], float(cfg["ratio"]), lambdas,
                               mode=cfg["mode"], **common)
    elif kind == "placement":
        res = ex.placement_study(mech, int(cfg["n"]), int(cfg["m"]), tuple(cfg["positions"]),
                                 tuple(int(g) for g in cfg["gaps"]), lambdas, **common)
    else:
        raise ConfigError(f"sweep.kind must be ratio, scaling or placement, got {kind!r}")
    res.write_csv(os.path.join(out, "sweep.csv"))
    with open(os.path.join(out, "sweep_summary.csv"), "w") as fh:
        fh.write("axis,rmse_mean,rmse_std\n")
        for a, mu, sd in zip(res.axis, res.rmse_mean, res.rmse_std):
            fh.write(f"{a},{_g(mu)},{_g(sd)}\n")
    if kind == "scaling":
        _write_kv(os.path.join(out, "slope.txt"), [("loglog_slope", "absent" if res.slope is None else res.slope)])


def cmd_spectrum(cfg, out):
    kernel = _kernel(cfg)
    dep = _mech(cfg, "dependent")
    iid_cfg = cfg.get("iid") or {}
    if iid_cfg.get("mechanism"):
        iid = _mech(iid_cfg, "mechanism")
    else:
        iid = IIDDesign(iid_cfg.get("low"), iid_cfg.get("high"))
    seeds = [derive_seed(cfg["seed"], "spectrum", i) for i in range(int(cfg["n_seeds"]))]
    res = ex.spectrum_compare(kernel, int(cfg["n"]), int(cfg["top_k"]), dep, iid,
                              float(cfg["threshold"]), seeds)
    for i in range(len(seeds)):
        write_spectrum_csv(os.path.join(out, f"spectrum_dependent_{i}.csv"), res.dependent[i])
        write_spectrum_csv(os.path.join(out, f"spectrum_iid_{i}.csv"), res.iid[i])
    with open(os.path.join(out, "ranks.csv"), "w") as fh:
        fh.write("seed,rank_dependent,rank_iid,threshold_dependent,threshold_iid\n")
        for s, a, b, (ta, tb) in zip(seeds, res.rank_dependent, res.rank_iid, res.thresholds):
            fh.write(f"{s},{a},{b},{_g(ta)},{_g(tb)}\n")


def cmd_noise(cfg, out):
    seed = derive_seed(cfg["seed"], "noise")
    n_train, n_held = int(cfg["n_train"]), int(cfg["n_heldout"])
    if cfg.get("input"):
        data = _load_input(cfg["input"], cfg["d"])
        if len(data) < n_train + n_held:
            raise DataError(f"input has {len(data)} samples, need {n_train + n_held}")
        train, held = data.head(n_train), data.subset(slice(n_train, n_train + n_held))
    else:
        train, held = _mech(cfg).split(n_train, n_held, seed)
    kernel = _kernel(cfg)
    spec = _sub(cfg)
    fit_seed = derive_seed(seed, "fit")
    idx = resolve(spec, n_train, make_rng(fit_seed, "subsample"))
    model = fit_nystrom(train, kernel, float(cfg["lambda"]), idx, seed=fit_seed, rescale=bool(cfg["rescale"]))
    rep = ex.noise_report(model, held, held.noise, int(cfg["bins"]))
    rep.write(os.path.join(out, "noise_hist.csv"), os.path.join(out, "noise_summary.txt"))
    with open(os.path.join(out, "residuals.csv"), "w") as fh:
        fh.write("k,residual" + (",noise\n" if held.noise is not None else "\n"))
        for k, r in enumerate(rep.residuals):
            tail = f",{_g(held.noise[k])}" if held.noise is not None else ""
            fh.write(f"{k},{_g(r)}{tail}\n")


HANDLERS = {"simulate": cmd_simulate, "fit": cmd_fit, "predict": cmd_predict, "eval": cmd_eval,
            "sweep": cmd_sweep, "spectrum": cmd_spectrum, "noise": cmd_noise}


def build_parser():
    p = argparse.ArgumentParser(prog="nystrom-ts", description=__doc__.splitlines()[0],
                                allow_abbrev=False)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="YAML settings file")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="worker processes for sweeps")
    p.add_argument("--rescale", action="store_true", help="min-max rescale inputs and targets")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args, extra = build_parser().parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args.command, args, extra)
        out = _out_dir(cfg)
        _echo(cfg, args.command, out)
        HANDLERS[args.command](cfg, out)
    except NystromTSError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"error[NumericalError]: {exc}", file=sys.stderr)
        return NumericalError.exit_code
    except OSError as exc:
        print(f"error[StorageError]: {exc}", file=sys.stderr)
        return StorageError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
