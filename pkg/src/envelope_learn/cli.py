"""Command-line workflow: generate, label, resample, train, evaluate,
gridsearch, sweep, multiseed, predict.

Every option can also come from a flat ``key = value`` config file given
with ``--config`` (keys are the long option names without dashes, with
``-`` or ``_``); command-line flags win. Each command that writes a file also
writes ``<output>.cfg`` holding the resolved settings, which can be fed back
through ``--config`` to repeat the run.

Exit codes: 0 success, 1 usage error, 2 data or file error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .data import DataError, read_dataset_csv, write_dataset_csv
from .evaluation import (
    GridSpec, default_jobs, evaluate, format_grid_table, grid_search, multi_seed_study,
    reports_to_csv, sensitivity_sweep, sweep_to_csv,
)
from .labeling import LabelingConfig, label_cycles, read_trace_csv, write_trace_csv
from .models_io import load_model, save_model
from .resampling import ResampleSpec
from .synthetic import PRESETS, generate_trace, preset, tune_offset
from .trainers import FAMILIES, MODES, Trainer

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("envelope_learn")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- helpers -------------------------------------------------------------------

def read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _split_list(text: str, conv=float) -> list:
    try:
        return [conv(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"cannot parse list {text!r}") from None


_AXIS_ALIASES = {"nh": "n_h", "lam": "lambda"}


def _kv_pairs(items) -> dict[str, list[float]]:
    """``["C=0.1,1", "sigma=0.01"]`` -> ordered axes."""
    axes = {}
    for item in items or []:
        for tok in item.split():
            if "=" not in tok:
                raise UsageError(f"grid axis {tok!r} must look like name=v1,v2,...")
            k, v = tok.split("=", 1)
            axes[_AXIS_ALIASES.get(k, k)] = _split_list(v)
    return axes


def _hyper(args) -> dict[str, float]:
    """Hyper-parameters given explicitly, keyed by trainer parameter name."""
    names = {"lam": "lambda", "nh": "n_h", "C": "C", "sigma": "sigma", "f": "f", "seed": "seed",
             "kkt_tol": "kkt_tol", "max_passes": "max_passes", "max_iters": "max_iters", "tol": "tol"}
    family = args.model
    allowed = {
        "lr": {"lambda", "max_iters", "tol"}, "ls": {"lambda"}, "elm": {"n_h", "lambda", "seed"},
        "svm": {"C", "sigma", "kkt_tol", "max_passes"},
    }[family]
    if args.imbalance == "cost":
        allowed = allowed | {"f"}
    out = {}
    for dest, key in names.items():
        v = getattr(args, dest, None)
        if v is not None and key in allowed:
            out[key] = v
    return out


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _record(args, out_path, extra: dict | None = None) -> None:
    """Write the resolved settings next to ``out_path``."""
    skip = {"func", "config", "command", "verbose"}
    lines = [f"# envelope-learn {args.command}", f"command = {args.command}"]
    for k in sorted(vars(args)):
        v = getattr(args, k)
        if k in skip or v is None:
            continue
        if isinstance(v, list):
            v = " ".join(_fmt(x) for x in v)
        lines.append(f"{k} = {_fmt(v)}")
    for k, v in (extra or {}).items():
        lines.append(f"# resolved {k} = {_fmt(v)}")
    Path(str(out_path) + ".cfg").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _trainer(args, fixed: dict | None = None) -> Trainer:
    return Trainer(args.model, args.imbalance, args.resample_seed, tuple((fixed or {}).items()))


# -- commands -------------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = preset(args.preset, cycles=args.cycles, seed=args.seed)
    if args.target_imbalance is not None:
        cfg = replace(cfg, target_imbalance=args.target_imbalance)
    cfg = tune_offset(cfg)
    trace = generate_trace(cfg)
    write_trace_csv(trace, args.out)
    _record(args, args.out, {"offset": cfg.instability.offset})
    print(f"wrote {trace.T} cycles to {args.out}")
    return EXIT_OK


def cmd_label(args) -> int:
    cfg = LabelingConfig(args.nh, args.p, args.imep_limit, args.ca50_var_limit)
    ds = label_cycles(read_trace_csv(args.trace), cfg)
    write_dataset_csv(ds, args.out)
    _record(args, args.out)
    print(f"wrote {ds.N} samples ({ds.n_pos} stable, {ds.n_neg} unstable, {ds.n} features) to {args.out}")
    return EXIT_OK


def cmd_resample(args) -> int:
    ds = ResampleSpec(args.mode, args.seed).apply(read_dataset_csv(args.input))
    write_dataset_csv(ds, args.out)
    _record(args, args.out)
    print(f"wrote {ds.N} samples ({ds.n_pos} stable, {ds.n_neg} unstable) to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    train = read_dataset_csv(args.input)
    model = _trainer(args).fit(train, _hyper(args))
    save_model(model, args.out)
    _record(args, args.out)
    print(f"trained {model.kind} model (n_p = {model.n_p}) -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    data = read_dataset_csv(args.input)
    rep = evaluate(model, data)
    text = reports_to_csv([rep], [])
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        _record(args, args.out)
    print(f"TPR {rep.TPR:.4f}  TNR {rep.TNR:.4f}  total {rep.total_accuracy:.4f}  n_p {rep.n_p}")
    return EXIT_OK


def cmd_gridsearch(args) -> int:
    axes = _kv_pairs(args.grid)
    if not axes:
        raise UsageError("gridsearch needs --grid name=v1,v2,...")
    grid = GridSpec(axes)
    train = read_dataset_csv(args.train)
    test = read_dataset_csv(args.test) if args.test else None
    if test is None and not args.folds:
        raise UsageError("gridsearch needs --test or --folds")
    trainer = _trainer(args, {k: v for k, v in _hyper(args).items() if k not in axes})
    jobs = args.jobs if args.jobs is not None else default_jobs()
    res = grid_search(trainer, grid, train, test, jobs=jobs, folds=args.folds)
    Path(args.out).write_text(reports_to_csv(res.ranked, grid.names), encoding="utf-8")
    table = format_grid_table(res)
    if args.table:
        Path(args.table).write_text(table, encoding="utf-8")
    _record(args, args.out)
    print(table, end="")
    failed = sum(not r.ok for r in res.cells)
    if failed:
        print(f"{failed} of {len(res.cells)} cells failed; see the error column in {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.imbalance != "cost":
        raise UsageError("sweep requires --imbalance cost")
    fs = _split_list(args.f_values)
    train, test = read_dataset_csv(args.train), read_dataset_csv(args.test)
    params = {k: v for k, v in _hyper(args).items() if k != "f"}
    pts = sensitivity_sweep(_trainer(args), fs, train, test, params)
    Path(args.out).write_text(sweep_to_csv(pts), encoding="utf-8")
    _record(args, args.out, {"r": train.ratio})
    for p in pts:
        print(f"f={p.f:<10g} TPR {p.TPR:.4f}  TNR {p.TNR:.4f}  total {p.total:.4f}")
    return EXIT_OK


def cmd_multiseed(args) -> int:
    seeds = _split_list(args.seeds, int)
    train, test = read_dataset_csv(args.train), read_dataset_csv(args.test)
    params = {k: v for k, v in _hyper(args).items() if k != "seed"}
    study = multi_seed_study(_trainer(args), seeds, train, test, params)
    text = study.to_csv()
    Path(args.out).write_text(text, encoding="utf-8")
    _record(args, args.out)
    print(text, end="")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    data = read_dataset_csv(args.input, require_label=False)
    with open(args.input, encoding="utf-8") as fh:
        has_label = fh.readline().rstrip("\r\n").split(",")[-1].strip() == "label"
    pred = model.predict(data.X)
    lines = [",".join((["cycle"] if data.cycles is not None else []) + ["prediction", "tag"]
                      + (["label"] if has_label else []))]
    for i, p in enumerate(pred):
        row = [str(int(data.cycles[i]))] if data.cycles is not None else []
        row += [str(int(p)), "stable" if p > 0 else "unstable"]
        if has_label:
            row.append(str(int(data.y[i])))
        lines.append(",".join(row))
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _record(args, args.out)
    n_st = int((pred > 0).sum())
    print(f"{n_st} stable, {pred.size - n_st} unstable -> {args.out}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _model_options(p, with_f: bool = True, model_required: bool = True) -> None:
    p.add_argument("--model", choices=FAMILIES, required=model_required, help="model family")
    p.add_argument("--imbalance", choices=MODES, default="regular", help="imbalance handling")
    p.add_argument("--lambda", dest="lam", type=float, help="ridge / L2 coefficient")
    p.add_argument("--nh", type=int, help="ELM hidden neurons")
    p.add_argument("--C", type=float, help="SVM penalty")
    p.add_argument("--sigma", type=float, help="RBF width in exp(-sigma |a-b|^2)")
    if with_f:
        p.add_argument("--f", type=float, help="cost-sensitive scaling factor (minority weight r*f)")
    p.add_argument("--seed", type=int, help="ELM hidden-layer seed")
    p.add_argument("--resample-seed", type=int, default=0, help="seed for under/over-sampling")
    p.add_argument("--kkt-tol", type=float, help="SMO stopping tolerance")
    p.add_argument("--max-passes", type=int, help="SMO iteration cap")
    p.add_argument("--max-iters", type=int, help="logistic regression iteration cap")
    p.add_argument("--tol", type=float, help="logistic regression gradient tolerance")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="envelope-learn", description="Learn engine stability envelopes from imbalanced cycle data.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--config", help="flat key = value file with option defaults")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    _add = sub.add_parser

    def add_parser(name, **kw):
        p = _add(name, **kw)
        p.add_argument("--config", help="flat key = value file with option defaults")
        return p

    sub.add_parser = add_parser

    p = sub.add_parser("generate", help="simulate a synthetic engine trace")
    p.add_argument("--preset", choices=PRESETS, default="default")
    p.add_argument("--cycles", type=int, default=15000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-imbalance", type=float, help="tune the stability offset to this N+/N- ratio")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("label", help="label a trace and build feature vectors")
    p.add_argument("--trace", required=True)
    p.add_argument("--nh", type=int, default=2, help="history depth N_h")
    p.add_argument("--p", type=int, default=5, help="half-window (cycles)")
    p.add_argument("--imep-limit", type=float, default=0.1, help="misfire IMEP limit (bar)")
    p.add_argument("--ca50-var-limit", type=float, default=LabelingConfig().ca50_var_limit)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("resample", help="balance a dataset by under- or over-sampling")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--mode", choices=("under", "over"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("train", help="train one model")
    p.add_argument("--in", dest="input", required=True)
    _model_options(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model on a labeled dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gridsearch", help="full grid over hyper-parameters")
    p.add_argument("--train", required=True)
    p.add_argument("--test")
    _model_options(p)
    p.add_argument("--grid", nargs="+", help="axes as name=v1,v2,... (e.g. C=1,10 sigma=0.01,0.1)")
    p.add_argument("--folds", type=int, help="score by stratified k-fold on the training set")
    p.add_argument("--jobs", type=int, help="concurrent cells (default $ENVELOPE_LEARN_JOBS or 1)")
    p.add_argument("--out", required=True, help="report CSV")
    p.add_argument("--table", help="also write the plain-text table here")
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("sweep", help="cost-sensitivity sweep over f")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    _model_options(p, with_f=False)
    p.add_argument("--f-values", required=True, help="comma-separated f values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep, imbalance="cost")

    p = sub.add_parser("multiseed", help="ELM accuracy across hidden-layer seeds")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    _model_options(p, model_required=False)
    p.add_argument("--seeds", required=True, help="comma-separated seeds")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_multiseed, model="elm")

    p = sub.add_parser("predict", help="label each row of a dataset with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse ``argv`` with option defaults taken from ``--config`` (if any)."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return ap.parse_args(argv)
    cfg = read_config(known.config)
    subs = ap._subparsers._group_actions[0].choices
    idx = next((i for i, tok in enumerate(argv) if tok in subs), None)
    cmd = cfg.pop("command", None)
    if idx is None:
        if cmd is None:
            raise UsageError("no command given on the command line or in the config file")
        argv = [cmd] + argv
        idx = 0
    elif cmd is not None and cmd != argv[idx]:
        raise UsageError(f"config {known.config} is for '{cmd}', not '{argv[idx]}'")
    sub = subs[argv[idx]]
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    aliases = {"in": "input", "lambda": "lam"}
    injected = []
    for key, value in cfg.items():
        act = actions.get(aliases.get(key, key))
        if act is None or act.dest in ("help", "config"):
            raise UsageError(f"config key {key!r} is not an option of '{argv[idx]}'")
        flag = act.option_strings[-1]
        if act.nargs == 0:
            if value.lower() in ("1", "true", "yes", "on"):
                injected.append(flag)
        elif act.nargs == "+":
            injected += [flag] + value.split()
        else:
            injected += [flag, value]
    # config values first so explicit flags after them win
    return ap.parse_args(argv[:idx + 1] + injected + argv[idx + 1:])


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = _apply_config(ap, argv)
        if args.command is None:
            ap.print_help(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ValueError, OSError) as exc:
        msg = exc.strerror + f": {exc.filename}" if isinstance(exc, OSError) and exc.strerror else str(exc)
        print(f"data error: {msg}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
