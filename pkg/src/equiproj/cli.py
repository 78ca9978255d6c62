"""Command-line interface: equiproj <command> --config <path> [--flag value ...].

Commands: project, kernel-project, defect, verify-bounds, train, sweep.
Every flag mirrors a JSON config key and overrides it. Exit codes are a
stable contract: 0 success, 1 verification violation, 2 input error,
3 math error, 4 training divergence.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .defect import (
    ActivationSpec,
    LayerChain,
    composition_bound_check,
    c4_conv_defect,
    network_bound_constant,
    worst_case_defect,
)
from .errors import BoundViolationError, ConvergenceError, TrainingDivergedError
from .groups import (
    FiniteGroup,
    cyclic_irreps,
    make_cyclic,
    make_dihedral,
    regular_representation,
    trivial_representation,
)
from .linalg import SPECTRAL, norm, parse_norm_kind
from .projection import LinearLayerSpec, project_c4_kernel, project_finite
from .spectral import project_equivariant_circulant, project_equivariant_spectral
from .svgplot import render_scatter_contour
from .toy import (
    TrainConfig,
    final_defect,
    gen_disk_annulus,
    gen_wavey_rings,
    model_fn,
    train_toy,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_MATH = 3
EXIT_DIVERGED = 4


def _parse_group(spec: str) -> FiniteGroup:
    try:
        kind, _, count = spec.partition(":")
        n = int(count)
    except ValueError as exc:
        raise ValueError(f"malformed group spec {spec!r}") from exc
    if kind == "cyclic":
        return make_cyclic(n)
    if kind == "dihedral":
        return make_dihedral(n)
    raise ValueError(f"unknown group kind {kind!r} (use cyclic:n or dihedral:n)")


def _load_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ValueError(f"config file {path} does not exist")
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ValueError("config file must hold a JSON object")
    for key, value in vars(args).items():
        if key in ("config", "func", "command") or value is None:
            continue
        cfg[key] = value
    return cfg


def _print_csv(*values) -> None:
    print(",".join(repr(v) if isinstance(v, float) else str(v) for v in values))


def cmd_project(cfg: dict) -> int:
    matrix = fileio.read_complex_matrix(cfg["input"])
    group = _parse_group(cfg.get("group", "cyclic:1"))
    method = cfg.get("method", "finite")
    kind = parse_norm_kind(cfg.get("norm", "frobenius"))
    n = group.order
    if matrix.shape != (n, n):
        raise ValueError(
            f"matrix shape {matrix.shape} does not match regular representation"
            f" dimension {n}"
        )
    reg = regular_representation(group)
    layer = LinearLayerSpec(weight=matrix, rep_in=reg, rep_out=reg)
    agreement = None
    if method == "finite":
        projected = project_finite(layer)
    elif method == "circulant":
        if not group.name.startswith("C"):
            raise ValueError("circulant path requires a cyclic group")
        projected = project_equivariant_circulant(matrix)
    elif method == "spectral":
        if not group.name.startswith("C"):
            raise ValueError("spectral path requires a cyclic group")
        cat = cyclic_irreps(group.order)
        triv = trivial_representation(cat.group)
        projected = project_equivariant_spectral(matrix, cat, triv, triv)
    elif method == "both":
        if not group.name.startswith("C"):
            raise ValueError("method 'both' requires a cyclic group")
        projected = project_finite(layer)
        alt = project_equivariant_circulant(matrix)
        agreement = float(np.max(np.abs(projected - alt)))
    else:
        raise ValueError(f"unknown projection method {method!r}")
    fileio.write_complex_matrix(cfg["output"], projected)
    post = worst_case_defect(
        LinearLayerSpec(weight=projected, rep_in=reg, rep_out=reg), kind
    )
    _print_csv(
        norm(matrix, kind),
        norm(projected, kind),
        norm(matrix - projected, kind),
        post.worst_case,
    )
    if agreement is not None:
        _print_csv("agreement", agreement)
    return EXIT_OK


def cmd_kernel_project(cfg: dict) -> int:
    kernel = fileio.read_kernel(cfg["input"])
    projected = project_c4_kernel(kernel)
    fileio.write_kernel(cfg["output"], projected)
    before = float(np.linalg.norm(kernel.values))
    after = float(np.linalg.norm(projected.values))
    drift = float(np.linalg.norm(kernel.values - projected.values))
    conv_defect = c4_conv_defect(projected, trials=2, seed=0)
    _print_csv(before, after, drift, conv_defect)
    return EXIT_OK


def cmd_defect(cfg: dict) -> int:
    matrix = fileio.read_complex_matrix(cfg["input"])
    group = _parse_group(cfg["group"])
    kind = parse_norm_kind(cfg.get("norm", "spectral"))
    reg = regular_representation(group)
    if matrix.shape != (group.order, group.order):
        raise ValueError(
            f"matrix shape {matrix.shape} does not match group order {group.order}"
        )
    report = worst_case_defect(
        LinearLayerSpec(weight=matrix, rep_in=reg, rep_out=reg), kind
    )
    text = report.to_csv_text()
    if cfg.get("output"):
        fileio.write_text(cfg["output"], text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _random_layer(rng: np.random.Generator, rep) -> LinearLayerSpec:
    d = rep.dim
    w = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return LinearLayerSpec(weight=w, rep_in=rep, rep_out=rep)


def cmd_verify_bounds(cfg: dict) -> int:
    group = _parse_group(cfg["group"])
    trials = int(cfg.get("trials", 1000))
    chain_trials = int(cfg.get("chain_trials", 200))
    seed = int(cfg.get("seed", 0))
    reg = regular_representation(group)
    violations = 0

    ratios = []
    skipped = 0
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        layer = _random_layer(rng, reg)
        try:
            report = worst_case_defect(layer, SPECTRAL)
        except BoundViolationError:
            violations += 1
            print(f"sandwich-violation,seed={seed + t}", file=sys.stderr)
            continue
        if report.projection_distance < 1e-12:
            skipped += 1
            continue
        ratios.append(report.worst_case / report.projection_distance)
    if ratios:
        _print_csv("sandwich", trials - violations - skipped, trials, skipped,
                   float(min(ratios)), float(max(ratios)))
    else:
        _print_csv("sandwich", "skipped", trials, skipped, "", "")

    comp_pass = 0
    net_pass = 0
    for t in range(chain_trials):
        rng = np.random.default_rng(seed + 10_000 + t)
        layers = [_random_layer(rng, reg) for _ in range(3)]
        chain = LayerChain(
            layers=layers,
            activations=[ActivationSpec("identity"), ActivationSpec("identity")],
        )
        comp = composition_bound_check(chain, SPECTRAL)
        if comp.holds:
            comp_pass += 1
        else:
            violations += 1
            print(f"composition-violation,seed={seed + 10_000 + t}", file=sys.stderr)
        try:
            network_bound_constant(chain)
            net_pass += 1
        except BoundViolationError:
            violations += 1
            print(f"network-bound-violation,seed={seed + 10_000 + t}", file=sys.stderr)
    _print_csv("composition", comp_pass, chain_trials)
    _print_csv("network_constant", net_pass, chain_trials)
    return EXIT_OK if violations == 0 else EXIT_VIOLATION


def _train_config(cfg: dict) -> TrainConfig:
    return TrainConfig(
        lambda_g=float(cfg.get("lambda_g", 0.0)),
        lambda_perp=float(cfg.get("lambda_perp", 0.0)),
        norm_kind=parse_norm_kind(cfg.get("norm", "frobenius")),
        lr=float(cfg.get("lr", 0.003)),
        epochs=int(cfg.get("epochs", 200)),
        seed=int(cfg.get("seed", 0)),
        hidden=int(cfg.get("hidden", 8)),
        hard_project=bool(cfg.get("hard_project", False)),
    )


def _make_dataset(cfg: dict, seed: int):
    n_per_class = int(cfg.get("n_per_class", 350))
    if cfg.get("sigma_perp") is not None:
        return gen_wavey_rings(n_per_class, float(cfg["sigma_perp"]), seed)
    return gen_disk_annulus(n_per_class, seed)


def cmd_train(cfg: dict) -> int:
    train_cfg = _train_config(cfg)
    data = _make_dataset(cfg, train_cfg.seed)
    result = train_toy(data, train_cfg)
    out_dir = Path(cfg.get("out_dir", "train_out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    fileio.write_text(out_dir / "history.csv", fileio.history_csv_text(result.history))
    fileio.write_params(out_dir / "params.bin", result.params)
    levels = tuple(float(x) for x in cfg.get("levels", [0.0]))
    svg = render_scatter_contour(
        data.points, data.labels, model_fn(result.params), levels=levels
    )
    fileio.write_text(out_dir / "plot.svg", svg)
    last = result.history[-1]
    _print_csv(
        last.epoch,
        last.task_loss,
        last.penalty_g,
        last.penalty_perp,
        last.test_accuracy,
        final_defect(result),
    )
    return EXIT_OK


def _sweep_worker(cell):
    shared, lambda_g, lambda_perp, sigma_perp, seed = cell
    cfg = dict(shared)
    cfg.update({"lambda_g": lambda_g, "lambda_perp": lambda_perp, "seed": seed})
    if sigma_perp is not None:
        cfg["sigma_perp"] = sigma_perp
    train_cfg = _train_config(cfg)
    data = _make_dataset(cfg, seed)
    try:
        result = train_toy(data, train_cfg)
    except TrainingDivergedError as exc:
        return {
            "key": (lambda_g, lambda_perp, sigma_perp, seed),
            "status": f"diverged@{exc.last_finite_epoch}",
        }
    return {
        "key": (lambda_g, lambda_perp, sigma_perp, seed),
        "status": "ok",
        "accuracy": result.history[-1].test_accuracy,
        "defect": final_defect(result),
        "history": fileio.history_csv_text(result.history),
    }


def _cell_name(key) -> str:
    lambda_g, lambda_perp, sigma_perp, seed = key
    sp = "none" if sigma_perp is None else str(sigma_perp)
    return f"history_lg{lambda_g}_lp{lambda_perp}_sp{sp}_seed{seed}.csv"


def cmd_sweep(cfg: dict) -> int:
    lg_grid = [float(x) for x in cfg.get("lambda_g_grid", [0.0])]
    lp_grid = [float(x) for x in cfg.get("lambda_perp_grid", [0.0])]
    sp_grid = cfg.get("sigma_perp_grid")
    sp_grid = [None] if sp_grid is None else [float(x) for x in sp_grid]
    seeds = [int(x) for x in cfg.get("seeds", [0])]
    if not (lg_grid and lp_grid and sp_grid and seeds):
        raise ValueError("sweep grids must be non-empty")
    shared = {
        k: cfg[k]
        for k in ("norm", "lr", "epochs", "hidden", "n_per_class", "hard_project")
        if k in cfg
    }
    cells = [
        (shared, lg, lp, sp, seed)
        for lg in lg_grid
        for lp in lp_grid
        for sp in sp_grid
        for seed in seeds
    ]
    workers = int(os.environ.get("EQUIPROJ_THREADS", 0)) or int(
        cfg.get("workers", 0)
    ) or os.cpu_count() or 1
    out_dir = Path(cfg.get("out_dir", "sweep_out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    if workers == 1 or len(cells) == 1:
        results = [_sweep_worker(cell) for cell in cells]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, cells))
    sort_key = lambda r: (
        r["key"][0],
        r["key"][1],
        -np.inf if r["key"][2] is None else r["key"][2],
        r["key"][3],
    )
    results.sort(key=sort_key)
    lines = ["lambda_g,lambda_perp,sigma_perp,seed,status,final_accuracy,final_defect"]
    failures = 0
    for r in results:
        lambda_g, lambda_perp, sigma_perp, seed = r["key"]
        sp = "" if sigma_perp is None else repr(sigma_perp)
        if r["status"] == "ok":
            fileio.write_text(out_dir / _cell_name(r["key"]), r["history"])
            lines.append(
                f"{lambda_g!r},{lambda_perp!r},{sp},{seed},ok,"
                f"{r['accuracy']!r},{r['defect']!r}"
            )
        else:
            failures += 1
            lines.append(f"{lambda_g!r},{lambda_perp!r},{sp},{seed},{r['status']},,")
    fileio.write_text(out_dir / "summary.csv", "\n".join(lines) + "\n")
    print(str(out_dir / "summary.csv"))
    if failures == len(results):
        return EXIT_MATH
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="equiproj",
        description="Equivariant projection, defect bounds, and toy training runs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, flags):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; flags override its keys")
        for flag, kwargs in flags.items():
            p.add_argument(flag, **kwargs)
        p.set_defaults(func=func)
        return p

    add(
        "project",
        cmd_project,
        {
            "--input": {},
            "--output": {},
            "--group": {},
            "--method": {"choices": ["finite", "circulant", "spectral", "both"]},
            "--norm": {},
        },
    )
    add("kernel-project", cmd_kernel_project, {"--input": {}, "--output": {}})
    add(
        "defect",
        cmd_defect,
        {"--input": {}, "--group": {}, "--norm": {}, "--output": {}},
    )
    add(
        "verify-bounds",
        cmd_verify_bounds,
        {
            "--group": {},
            "--trials": {"type": int},
            "--chain_trials": {"type": int},
            "--seed": {"type": int},
        },
    )
    add(
        "train",
        cmd_train,
        {
            "--lambda_g": {"type": float},
            "--lambda_perp": {"type": float},
            "--norm": {},
            "--lr": {"type": float},
            "--epochs": {"type": int},
            "--seed": {"type": int},
            "--hidden": {"type": int},
            "--sigma_perp": {"type": float},
            "--n_per_class": {"type": int},
            "--out_dir": {},
            "--hard_project": {"action": "store_true", "default": None},
        },
    )
    add(
        "sweep",
        cmd_sweep,
        {
            "--epochs": {"type": int},
            "--n_per_class": {"type": int},
            "--workers": {"type": int},
            "--out_dir": {},
        },
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        required = {
            cmd_project: ("input", "output"),
            cmd_kernel_project: ("input", "output"),
            cmd_defect: ("input", "group"),
            cmd_verify_bounds: ("group",),
        }.get(args.func, ())
        for key in required:
            if key not in cfg:
                raise ValueError(f"missing required option {key!r}")
        return args.func(cfg)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConvergenceError, BoundViolationError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MATH
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
