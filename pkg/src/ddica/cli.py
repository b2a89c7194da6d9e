"""Deterministic command-line front end.

Subcommands: gen, train, eval, baseline, gradcheck, bench.  Every
subcommand is a pure function of its flags, config file, input files and
seed, so repeated invocations reproduce their outputs byte for byte.

Exit codes: 0 success, 2 usage or validation failure, 3 runtime or
numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .baselines import FastIcaConfig, fastica
from .datagen import gen_sim1, gen_sim2, gen_sim3, load_dataset, save_dataset
from .entropy import EntropyConfig
from .errors import ConfigError, DdicaError, SampleCountError
from .fileio import read_json, read_matrix_csv, write_json, write_matrix_csv, write_pgm
from .linalg import symmetric_eigen
from .metrics import match_components, score_report, write_report
from .network import (
    NetworkConfig, TrainConfig, init_model, predict_sources, save_model,
    tc_gradient_check, train,
)
from .rng import split_seed
from .whitening import WhiteningConfig

_CONFIG_DEFAULTS = {
    "seed": 0,
    "network": {
        "output_dim": None,
        "hidden_widths": [64, 64, 64, 64, 64, 64, 64, 64],
        "activation": "tanh",
    },
    "train": {
        "learning_rate": 1e-4,
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "batch_size": 256,
        "epochs": 10,
        "reconstruction_weight": 0.0,
    },
    "entropy": {
        "alpha": 0.75,
        "sigma": 0.1584,
        "eig_floor": 1e-12,
        "silverman": False,
    },
    "whitening": {
        "iterations_per_pair": 100,
        "eig_floor": 1e-8,
        "center": True,
    },
    "preprocess": {
        "pca_components": None,
        "whiten_input": False,
    },
}

# desk-scale benchmark settings; quality budget, still minutes per trial
_BENCH_OVERRIDES = {
    "train": {"learning_rate": 1e-3, "epochs": 300},
    "preprocess": {"pca_components": 3, "whiten_input": True},
}


def _merge_strict(defaults, user, path="config"):
    if not isinstance(user, dict):
        raise ConfigError(f"{path} must be an object")
    merged = {}
    for key, default in defaults.items():
        if key in user:
            value = user[key]
            if isinstance(default, dict) and default:
                merged[key] = _merge_strict(default, value, f"{path}.{key}")
            else:
                merged[key] = value
        else:
            merged[key] = json.loads(json.dumps(default)) if isinstance(default, dict) else default
    unknown = set(user) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in {path}: {sorted(unknown)}")
    return merged


def load_run_config(path=None, overrides=None):
    user = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                user = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    cfg = _merge_strict(_CONFIG_DEFAULTS, user)
    if overrides:
        for section, values in overrides.items():
            if path is None or section not in user:
                cfg[section].update(values)
    return cfg


def _train_configs(cfg, run_seed):
    wcfg = WhiteningConfig(
        iterations_per_pair=int(cfg["whitening"]["iterations_per_pair"]),
        eig_floor=float(cfg["whitening"]["eig_floor"]),
        center=bool(cfg["whitening"]["center"]),
    )
    ecfg = EntropyConfig(
        alpha=float(cfg["entropy"]["alpha"]),
        sigma=float(cfg["entropy"]["sigma"]),
        eig_floor=float(cfg["entropy"]["eig_floor"]),
        silverman=bool(cfg["entropy"]["silverman"]),
    )
    tcfg = TrainConfig(
        learning_rate=float(cfg["train"]["learning_rate"]),
        beta1=float(cfg["train"]["beta1"]),
        beta2=float(cfg["train"]["beta2"]),
        eps=float(cfg["train"]["eps"]),
        batch_size=int(cfg["train"]["batch_size"]),
        epochs=int(cfg["train"]["epochs"]),
        seed=split_seed(run_seed, 3),
        whitening=wcfg,
        entropy=ecfg,
        reconstruction_weight=float(cfg["train"]["reconstruction_weight"]),
    )
    return tcfg


def _preprocess(x, cfg):
    """Optional PCA reduction / input whitening; returns (x_in, projection, mean)."""
    pre = cfg["preprocess"]
    comps = pre["pca_components"]
    whiten = bool(pre["whiten_input"])
    if comps is None and not whiten:
        return x, None, None
    d = x.shape[0]
    c = int(comps) if comps is not None else d
    if not 1 <= c <= d:
        raise ConfigError(f"pca_components must lie in [1, {d}], got {c}")
    mean = x.mean(axis=1, keepdims=True)
    xc = x - mean
    eig = symmetric_eigen(xc @ xc.T / x.shape[1])
    basis = eig.eigenvectors[:, :c]
    if whiten:
        proj = (basis / np.sqrt(np.maximum(eig.eigenvalues[:c], 1e-12))).T
    else:
        proj = basis.T
    return proj @ xc, proj, mean


def _fit_ddica(ds, cfg, run_seed):
    """Train one unmixing model on a dataset; returns (model, history, est, extras)."""
    x_in, proj, mean = _preprocess(ds.observations, cfg)
    out_dim = cfg["network"]["output_dim"]
    if out_dim is None:
        out_dim = ds.sources.shape[0]
    ncfg = NetworkConfig(
        input_dim=x_in.shape[0],
        output_dim=int(out_dim),
        hidden_widths=tuple(cfg["network"]["hidden_widths"]),
        activation=cfg["network"]["activation"],
        seed=split_seed(run_seed, 2),
    )
    tcfg = _train_configs(cfg, run_seed)
    model = init_model(ncfg, decoder=tcfg.reconstruction_weight > 0.0)
    model, history = train(model, x_in, tcfg)
    est = predict_sources(model, x_in, tcfg.whitening, whiten_seed=split_seed(tcfg.seed, 1))
    extras = {"projection": proj, "input_mean": mean, "tcfg": tcfg}
    return model, history, est, extras


# --- subcommands ----------------------------------------------------------


def cmd_gen(args) -> int:
    if args.dataset == "sim1":
        ds = gen_sim1(args.seed, t_frames=args.t_frames, snr=args.snr)
    elif args.dataset == "sim2":
        ds = gen_sim2(args.seed, nl_level=args.nl_level, grid=args.grid)
    else:
        ds = gen_sim3(args.seed, n_samples=args.n_samples)
    save_dataset(ds, args.out)
    print(f"wrote {args.dataset} dataset to {args.out}")
    return 0


def cmd_train(args) -> int:
    ds = load_dataset(args.data)
    cfg = load_run_config(args.config)
    model, history, est, extras = _fit_ddica(ds, cfg, cfg["seed"])
    os.makedirs(args.out, exist_ok=True)
    save_model(model, os.path.join(args.out, "model.json"))
    with open(os.path.join(args.out, "loss.csv"), "w", encoding="utf-8", newline="\n") as fh:
        for v in history:
            fh.write(f"{v:.17g}\n")
    write_matrix_csv(os.path.join(args.out, "sources.csv"), est)
    grid = ds.meta.get("grid")
    for i in range(est.shape[0]):
        comp = est[i]
        image = comp.reshape(grid[0], grid[1]) if grid else comp.reshape(1, -1)
        write_pgm(os.path.join(args.out, f"component_{i:02d}.pgm"), image)
    if extras["projection"] is not None:
        write_matrix_csv(os.path.join(args.out, "projection.csv"), extras["projection"])
        write_matrix_csv(os.path.join(args.out, "input_mean.csv"), extras["input_mean"])
    write_json(os.path.join(args.out, "run.json"), {
        "steps": len(history),
        "final_loss": history[-1] if history else None,
        "config": cfg,
    })
    print(f"trained {len(history)} steps; outputs in {args.out}")
    return 0


def cmd_eval(args) -> int:
    est = read_matrix_csv(os.path.join(args.est, "sources.csv"))
    gt = read_matrix_csv(os.path.join(args.gt, "sources.csv"))
    w_est = a_true = None
    est_unmix = os.path.join(args.est, "unmixing.csv")
    gt_mix = os.path.join(args.gt, "mixing.csv")
    if os.path.exists(est_unmix) and os.path.exists(gt_mix):
        w_est = read_matrix_csv(est_unmix)
        a_true = read_matrix_csv(gt_mix)
    report = score_report(est, gt, w_est=w_est, a_true=a_true)
    write_report(report, args.out)
    print(f"mean_abs_corr {report['mean_abs_corr']:.6f}")
    return 0


def cmd_baseline(args) -> int:
    ds = load_dataset(args.data)
    n_comp = args.components if args.components else ds.sources.shape[0]
    cfg = FastIcaConfig(n_components=n_comp, seed=args.seed)
    result = fastica(ds.observations, cfg)
    os.makedirs(args.out, exist_ok=True)
    write_matrix_csv(os.path.join(args.out, "sources.csv"), result.sources)
    write_matrix_csv(os.path.join(args.out, "unmixing.csv"), result.unmixing)
    write_json(os.path.join(args.out, "run.json"), {
        "algo": "fastica",
        "converged": result.converged,
        "iterations": result.n_iter,
        "n_components": n_comp,
        "seed": args.seed,
    })
    print(f"fastica converged={result.converged} after {result.n_iter} iterations")
    return 0


def cmd_gradcheck(args) -> int:
    err = tc_gradient_check(args.seed)
    print(f"max rel. err {err:.3e}")
    if err >= 1e-4:
        print("gradient check FAILED", file=sys.stderr)
        return 3
    return 0


def _bench_trial(dataset, trial_seed, cfg, nl_level):
    if dataset == "sim1":
        ds = gen_sim1(trial_seed)
    else:
        ds = gen_sim2(trial_seed, nl_level=nl_level)
    _, _, est, _ = _fit_ddica(ds, cfg, trial_seed)
    dd = match_components(est, ds.sources).mean_abs_corr
    fi_cfg = FastIcaConfig(n_components=ds.sources.shape[0], seed=split_seed(trial_seed, 4))
    fi = fastica(ds.observations, fi_cfg)
    fa = match_components(fi.sources, ds.sources).mean_abs_corr
    return dd, fa


def cmd_bench(args) -> int:
    cfg = load_run_config(args.config, overrides=_BENCH_OVERRIDES)
    rows = []
    for trial in range(args.trials):
        trial_seed = args.seed + trial
        dd, fa = _bench_trial(args.dataset, trial_seed, cfg, args.nl_level)
        rows.append((trial, "ddica", dd))
        rows.append((trial, "fastica", fa))
        print(f"trial {trial}: ddica {dd:.4f} fastica {fa:.4f}")
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "trials.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("trial,method,mean_abs_corr\n")
        for trial, method, corr in rows:
            fh.write(f"{trial},{method},{corr:.17g}\n")
    with open(os.path.join(args.out, "summary.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("method,mean_corr,sd_corr,trials\n")
        for method in ("ddica", "fastica"):
            vals = np.array([c for _, m, c in rows if m == method])
            sd = vals.std(ddof=1) if vals.size > 1 else 0.0
            fh.write(f"{method},{vals.mean():.17g},{sd:.17g},{vals.size}\n")
    print(f"wrote benchmark results to {args.out}")
    return 0


# --- argument parsing -----------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddica", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--dataset", required=True, choices=["sim1", "sim2", "sim3"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--snr", type=float, default=0.4)
    p.add_argument("--nl-level", type=float, default=0.5)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--t-frames", type=int, default=50)
    p.add_argument("--n-samples", type=int, default=5000)
    p.set_defaults(func=cmd_gen)

    p = subs.add_parser("train", help="train the unmixing network on a dataset")
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("eval", help="score estimated sources against ground truth")
    p.add_argument("--est", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("baseline", help="run a baseline separation algorithm")
    p.add_argument("--algo", required=True, choices=["fastica"])
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--components", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_baseline)

    p = subs.add_parser("gradcheck", help="finite-difference check of the loss gradient")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = subs.add_parser("bench", help="repeated-trial benchmark against FastICA")
    p.add_argument("--dataset", default="sim1", choices=["sim1", "sim2"])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--nl-level", type=float, default=0.5)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SampleCountError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: missing input: {exc}", file=sys.stderr)
        return 2
    except DdicaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
