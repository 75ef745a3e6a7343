"""Command line entry point: ``popaware {generate,fit,eval,sweep,report}``.

Exit codes: 0 on success, 2 on a usage error (argparse), 1 when the command
itself fails.  Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections import defaultdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .blend import LOCAL, write_classifiers
from .core import ALL_SUBGROUPS
from .data_io import (ExperimentConfig, load_config, load_data_dir, read_results,
                      write_manifest, write_results)
from .experiment import ALL, label_fraction_sweep, run_experiment, write_sweep
from .model import fit_model
from .optimizer import write_params
from .synth import default_config, generate

log = logging.getLogger("popaware")

DAGGER = "†"


def _config(path: Optional[str]) -> ExperimentConfig:
    return load_config(path) if path else ExperimentConfig()


def _fractions(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("need at least one label fraction")
    return vals


def cmd_generate(args) -> int:
    cfg = _config(args.config)
    dgp = default_config().with_target(cfg.target)
    bundle = generate(dgp, args.seed)
    write_manifest(bundle.datasets, args.out)
    log.info("wrote %d datasets to %s", len(bundle.datasets), args.out)
    return 0


def cmd_fit(args) -> int:
    cfg = _config(args.config)
    datasets = load_data_dir(args.data, cfg)
    model = fit_model(datasets, population=True, lambda_=cfg.lambda_, beta=cfg.beta,
                      alpha=cfg.alpha, tau=cfg.tau, tol=cfg.powell_tol,
                      max_iter=cfg.powell_max_iter, min_samples=cfg.min_samples,
                      squared=cfg.squared_div)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_params(model.fitted, out / "params.csv")
    write_classifiers(model.classifiers, out / "classifiers.csv")
    if not model.fitted.converged:
        log.warning("Powell stopped at the iteration cap before converging")
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args.config)
    datasets = load_data_dir(args.data, cfg)
    result = run_experiment(cfg, datasets)
    write_results(result.rows, args.out)
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args.config)
    datasets = load_data_dir(args.data, cfg)
    raw, points = label_fraction_sweep(cfg, datasets, args.fractions)
    write_sweep(points, args.out)
    if args.raw:
        write_results(raw.rows, args.raw)
    return 0


def _fmt(values: list) -> str:
    defined = [v for v in values if v is not None]
    return "-" if not defined else f"{np.mean(defined):.3f}"


def render_report(rows) -> str:
    """Markdown with an overall table (methods x fraction) and a subgroup table.

    Cells are means over seeds of the defined AUCs, rounded to 3 decimals;
    ``-`` marks cells with no defined AUC.  A dagger follows a subgroup cell
    when the local parameters were chosen in at least half of its seeds.
    """
    methods = [m for m in dict.fromkeys(r.method for r in rows)]
    datasets = list(dict.fromkeys(r.dataset for r in rows))
    fractions = sorted({r.label_fraction for r in rows})
    cells = defaultdict(list)
    local = defaultdict(list)
    for r in rows:
        cells[(r.method, r.dataset, r.label_fraction, r.age_group, r.gender)].append(r.auc)
        if r.theta_choice:
            local[(r.method, r.dataset, r.label_fraction, r.age_group, r.gender)].append(
                r.theta_choice == LOCAL)

    out = ["# Results", ""]
    for ds in datasets:
        out += [f"## Overall AUC: {ds}", ""]
        out.append("| method | " + " | ".join(f"{f:g}" for f in fractions) + " |")
        out.append("|---" * (len(fractions) + 1) + "|")
        for m in methods:
            vals = [_fmt(cells.get((m, ds, f, ALL, ALL), [])) for f in fractions]
            out.append(f"| {m} | " + " | ".join(vals) + " |")
        out.append("")
        for f in fractions:
            out += [f"## Subgroup AUC: {ds}, label fraction {f:g}", ""]
            out.append("| age | gender | " + " | ".join(methods) + " |")
            out.append("|---" * (len(methods) + 2) + "|")
            for key in ALL_SUBGROUPS:
                a, g = key.age.value, key.gender.value
                vals = []
                for m in methods:
                    k = (m, ds, f, a, g)
                    v = _fmt(cells.get(k, []))
                    flags = local.get(k, [])
                    if flags and v != "-" and 2 * sum(flags) >= len(flags):
                        v += DAGGER
                    vals.append(v)
                out.append(f"| {a} | {g} | " + " | ".join(vals) + " |")
            out.append("")
    out.append(f"Cells average the defined AUCs over seeds; `-` means no test slice "
               f"contained both classes; {DAGGER} marks subgroups scored with local parameters.")
    return "\n".join(out) + "\n"


def cmd_report(args) -> int:
    rows = read_results(args.inp)
    if not rows:
        raise ValueError(f"{args.inp} holds no result rows")
    Path(args.out).write_text(render_report(rows), encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="popaware",
                                description="Population-aware hierarchical domain adaptation.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True

    g = sub.add_parser("generate", help="write a synthetic data directory")
    g.add_argument("--config", help="experiment config (its target is honoured)")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="fit the full model on every labeled record")
    f.add_argument("--config")
    f.add_argument("--data", required=True, help="data directory with manifest.csv")
    f.add_argument("--out", required=True, help="output directory")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="run the configured methods and seeds")
    e.add_argument("--config")
    e.add_argument("--data", required=True)
    e.add_argument("--out", required=True, help="results CSV")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="label-fraction sweep")
    s.add_argument("--config")
    s.add_argument("--data", required=True)
    s.add_argument("--fractions", type=_fractions, default=[0.05, 0.10, 0.15, 0.20, 0.25])
    s.add_argument("--out", required=True, help="sweep summary CSV")
    s.add_argument("--raw", help="also write the per-seed results CSV here")
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("report", help="render a results CSV as markdown")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:          # argparse usage errors exit with 2
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"popaware {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
