"""Compare the compiled and pure-Python kernel backends.

Times the MAP objective (full evaluation and a line evaluation), the AUC
kernel, and one complete hierarchy fit on the default synthetic bundle.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--csv out.csv]
"""

from __future__ import annotations

import argparse
import csv
import sys
import timeit

import numpy as np

from popaware import kernels
from popaware.model import build_spec
from popaware.optimizer import fit_hierarchy
from popaware.synth import default_config, generate


def _best(fn, number: int, repeat: int) -> float:
    """Best-of-``repeat`` seconds per call."""
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def run(repeat: int) -> list[dict]:
    spec = build_spec(generate(default_config(), 0).datasets)
    rng = np.random.default_rng(0)
    theta = rng.normal(size=spec.graph.dim)
    direction = rng.normal(size=spec.graph.dim)
    scores = rng.normal(size=5000).round(2)
    labels = (rng.random(5000) < 0.4).astype(np.uint8)
    n_pos = int(labels.sum())

    backends = ["python"]
    if kernels.BACKEND == "cython":
        backends.append("cython")

    rows = []
    for name in backends:
        mod = kernels.backend_module(name)
        obj = spec.compile(name)
        cases = {
            "objective": (lambda: obj(theta), 2000),
            "objective_along": (lambda: obj.along(theta, direction, 0.3), 2000),
            "auc_5000": (lambda: mod.auc_sorted(scores, labels, n_pos, 5000 - n_pos), 200),
            "fit_hierarchy": (lambda: fit_hierarchy(spec, backend=name), 1),
        }
        for case, (fn, number) in cases.items():
            rows.append({"backend": name, "case": case,
                         "seconds": _best(fn, number, repeat)})
    return rows


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--csv", help="also write the timings here")
    args = p.parse_args(argv)

    rows = run(args.repeat)
    by = {(r["backend"], r["case"]): r["seconds"] for r in rows}
    cases = list(dict.fromkeys(r["case"] for r in rows))
    print(f"{'case':<18}{'python':>14}{'cython':>14}{'speedup':>10}")
    for c in cases:
        py = by[("python", c)]
        cy = by.get(("cython", c))
        cy_txt = f"{cy * 1e6:12.1f}us" if cy is not None else f"{'n/a':>14}"
        sp = f"{py / cy:9.1f}x" if cy else f"{'':>10}"
        print(f"{c:<18}{py * 1e6:12.1f}us{cy_txt}{sp}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["backend", "case", "seconds"])
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
