"""Command-line entry point: ``sppll {convert,corrupt,train,cv,sweep}``.

Exit codes: 0 success, 2 bad arguments, 3 unreadable or unwritable files,
4 cross-validation on a dataset without true labels.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import data_io
from .baselines import METHODS
from .trainer import cross_validate, fit
from .types import NoGroundTruth, PLLError, TrainConfig

REPORT_VERSION = 1
TSV_COLUMNS = ("param", "value", "mean", "std", "seconds")
SWEEP_PARAMS = {"lambda0": "lambda0", "cmax": "C_max"}


class UsageError(Exception):
    """Bad command-line input; maps to exit code 2."""


def _config_args(p: argparse.ArgumentParser) -> None:
    d = TrainConfig()
    g = p.add_argument_group("training configuration")
    g.add_argument("--cinit", type=float, default=d.C_init, help="first C value")
    g.add_argument("--cmax", type=float, default=d.C_max, help="final C value")
    g.add_argument("--delta", type=float, default=d.Delta, help="C grows by a factor 1+delta per stage")
    g.add_argument("--lambda0", type=float, default=d.lambda0)
    g.add_argument("--mu", type=float, default=d.mu, help="pace growth factor")
    g.add_argument("--lambda-max", type=float, default=d.lambda_max)
    g.add_argument("--ofv-tol", type=float, default=d.delta_ofv, help="inner-loop stopping threshold")
    g.add_argument("--svm-tol", type=float, default=d.svm_tol)
    g.add_argument("--svm-max-iter", type=int, default=d.svm_max_iter)
    g.add_argument("--max-inner", type=int, default=d.max_inner)
    g.add_argument("--no-standardize", action="store_true", help="train on raw features")
    g.add_argument("--carry-pace", action="store_true", help="keep weights across C stages")
    g.add_argument("--unscaled-pace", action="store_true",
                   help="update weights from raw losses instead of C-scaled losses")


def _config(args, **over) -> TrainConfig:
    values = dict(
        C_init=args.cinit, C_max=args.cmax, Delta=args.delta, lambda0=args.lambda0, mu=args.mu,
        lambda_max=args.lambda_max, delta_ofv=args.ofv_tol, svm_tol=args.svm_tol,
        svm_max_iter=args.svm_max_iter, max_inner=args.max_inner, seed=args.seed,
        standardize=not args.no_standardize, reset_pace=not args.carry_pace,
        weight_by_C=not args.unscaled_pace,
    )
    values.update(over)
    # a C_max below the default starting point becomes a single stage
    values["C_init"] = min(values["C_init"], values["C_max"])
    try:
        return TrainConfig(**values)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _methods(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    if not names:
        raise UsageError("no methods given")
    for name in names:
        if name not in METHODS:
            raise UsageError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    return names


def _grid(text: str) -> list[float]:
    out = []
    for token in text.split(","):
        try:
            out.append(float(token))
        except ValueError:
            raise UsageError(f"grid value {token.strip()!r} is not a number") from None
    return out


def _load(path: str):
    try:
        return data_io.load_dataset(path)
    except FileNotFoundError:
        raise OSError(f"cannot read {path}") from None
    except data_io.ParseError as exc:
        raise OSError(f"{path}: {exc}") from None


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


# ---------------------------------------------------------------- commands


def cmd_convert(args) -> int:
    try:
        ds = data_io.csv_to_dataset(args.input, delimiter=args.delimiter, skip_header=args.skip_header)
    except data_io.ParseError as exc:
        raise OSError(f"{args.input}: {exc}") from None
    data_io.save_dataset(ds, args.out)
    print(f"wrote {ds.n} instances, d={ds.d}, q={ds.q} to {args.out}", file=sys.stderr)
    return 0


def cmd_corrupt(args) -> int:
    ds = _load(args.input)
    try:
        out = data_io.corrupt_labels(ds, args.p, args.r, args.seed)
    except (data_io.RTooLarge, data_io.NotSupervised, ValueError) as exc:
        raise UsageError(str(exc)) from None
    data_io.save_dataset(out, args.out)
    return 0


def cmd_train(args) -> int:
    ds = _load(args.data)
    cfg = _config(args, self_paced=args.method == "sp-pll")
    model, trace = fit(ds, cfg)
    data_io.save_model(model, args.model_out)
    if args.trace:
        trace.save(args.trace)
    return 0


def run_cv(ds, names: list[str], cfg: TrainConfig, folds: int, seed: int, knn_k: int,
           trace_dir: str | None = None, data_label: str = "") -> dict:
    """Cross-validate every method on shared folds and build the report dict."""
    report = {
        "version": REPORT_VERSION,
        "data": data_label,
        "n": ds.n, "d": ds.d, "q": ds.q,
        "folds": folds,
        "seed": seed,
        "knn_k": knn_k,
        "config": cfg.to_dict(),
        "methods": {},
    }
    for name in names:
        t0 = time.perf_counter()
        res = cross_validate(ds, folds, cfg, seed=seed, method=name, knn_k=knn_k)
        seconds = time.perf_counter() - t0
        paths = []
        if trace_dir is not None:
            Path(trace_dir).mkdir(parents=True, exist_ok=True)
            for k, tr in enumerate(res.traces):
                if tr is not None:
                    p = Path(trace_dir) / f"{name}_fold{k:02d}.jsonl"
                    tr.save(p)
                    paths.append(str(p))
        report["methods"][name] = {
            "mean": res.mean,
            "std": res.std,
            "fold_accuracies": res.fold_accuracies,
            "seconds": seconds,
            "traces": paths,
        }
    return report


def cmd_cv(args) -> int:
    if args.folds < 2:
        raise UsageError("folds must be ≥ 2")
    names = _methods(args.methods)
    cfg = _config(args)
    ds = _load(args.data)
    if ds.truth is None:
        raise NoGroundTruth(f"{args.data} has no truth column")
    if ds.n < args.folds:
        raise UsageError(f"{ds.n} instances cannot fill {args.folds} folds")
    report = run_cv(ds, names, cfg, args.folds, args.seed, args.k, args.trace_dir, args.data)
    text = json.dumps(report, indent=2) + "\n"
    sys.stdout.write(text)
    if args.out:
        _write(args.out, text)
    return 0


def cmd_sweep(args) -> int:
    if args.folds < 2:
        raise UsageError("folds must be ≥ 2")
    params = [p.strip() for p in args.param.split(",") if p.strip()]
    if len(params) != 1:
        raise UsageError("sweep takes a grid over exactly one parameter")
    if params[0] not in SWEEP_PARAMS:
        raise UsageError(f"unknown sweep parameter {params[0]!r}; choose from {', '.join(SWEEP_PARAMS)}")
    param = params[0]
    values = _grid(args.grid)
    if len(_methods(args.method)) != 1:
        raise UsageError("sweep evaluates a single method")
    base = _config(args)
    ds = _load(args.data)
    if ds.truth is None:
        raise NoGroundTruth(f"{args.data} has no truth column")
    rows = ["\t".join(TSV_COLUMNS)]
    for value in values:
        over = {SWEEP_PARAMS[param]: value}
        if param == "lambda0":
            over["lambda_max"] = max(base.lambda_max, value)
        cfg = _config(args, **over)
        t0 = time.perf_counter()
        res = cross_validate(ds, args.folds, cfg, seed=args.seed, method=args.method, knn_k=args.k)
        seconds = time.perf_counter() - t0
        rows.append(f"{param}\t{value!r}\t{res.mean!r}\t{res.std!r}\t{seconds:.3f}")
    text = "\n".join(rows) + "\n"
    sys.stdout.write(text)
    if args.out:
        _write(args.out, text)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sppll", description="Partial-label learning toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="CSV (last column = class) to supervised PLC")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--skip-header", action="store_true")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("corrupt", help="add random false candidates to a supervised PLC")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--p", type=float, required=True, help="fraction of instances to corrupt")
    p.add_argument("--r", type=int, required=True, help="false candidates per corrupted instance")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("train", help="fit a model and write it as JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--trace", help="write the per-stage trace as JSON lines")
    p.add_argument("--method", choices=("sp-pll", "m3pl"), default="sp-pll")
    p.add_argument("--seed", type=int, default=0)
    _config_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cv", help="stratified k-fold accuracy report (JSON)")
    p.add_argument("--data", required=True)
    p.add_argument("--methods", default="sp-pll,m3pl,pl-knn", help="comma-separated method names")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=10, help="neighbours for pl-knn")
    p.add_argument("--out", help="also write the report here")
    p.add_argument("--trace-dir", help="directory for per-fold training traces")
    _config_args(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("sweep", help="accuracy over a grid of one parameter (TSV)")
    p.add_argument("--data", required=True)
    p.add_argument("--param", required=True, help="lambda0 or cmax")
    p.add_argument("--grid", required=True, help="comma-separated values")
    p.add_argument("--method", default="sp-pll")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", help="also write the table here")
    _config_args(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NoGroundTruth as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except PLLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
