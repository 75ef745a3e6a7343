"""MAP objective over the hierarchy and a derivative-free Powell minimizer.

The objective over all node parameters is::

    -sum_leaves [ sum_j (f_j + lam) * theta_j - logsumexp(theta) ]
      + beta  * sum_n mean_{p in par(n)} ||theta_n - theta_p||^2
      + alpha * sum_n ||theta_n - c_n||^2

where ``f`` is a leaf's per-symptom PPV and ``c_n`` the node's empirical prior
center.  The alpha term keeps the problem bounded below: without it the data
term decreases without limit along the all-ones direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import kernels
from .core import N_SYMPTOMS, SYMPTOMS
from .hierarchy import HierarchyGraph, NodeId

_GOLD = 1.618034
_CGOLD = 0.3819660
_TINY = 1e-20


@dataclass
class ObjectiveSpec:
    graph: HierarchyGraph
    centers: dict
    leaf_stats: dict
    lambda_: float = 1.0
    beta: float = 0.2
    alpha: float = 0.1
    squared: bool = True

    def __post_init__(self):
        missing = [n for n in self.graph.leaves if n not in self.leaf_stats]
        if missing:
            raise ValueError(f"no leaf statistics for {missing}")
        if self.lambda_ < 0 or self.beta < 0:
            raise ValueError("lambda and beta must be >= 0")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")

    def arrays(self):
        g = self.graph
        leaf_idx = np.array([g.index(n) for n in g.leaves], dtype=np.int64)
        f = np.array([self.leaf_stats[n] for n in g.leaves], dtype=np.float64).reshape(-1, N_SYMPTOMS)
        child, parent, w = [], [], []
        for n in g.nodes:
            ps = g.parents[n]
            for p in ps:
                child.append(g.index(n))
                parent.append(g.index(p))
                w.append(1.0 / len(ps))
        centers = self.flat_centers()
        return (leaf_idx, f, self.lambda_, np.array(child, dtype=np.int64),
                np.array(parent, dtype=np.int64), np.array(w), centers,
                self.beta, self.alpha, self.squared)

    def flat_centers(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.centers[n], dtype=np.float64)
                               for n in self.graph.nodes])

    def compile(self, backend=None):
        mod = kernels if backend is None else kernels.backend_module(backend)
        return mod.Objective(*self.arrays())


def objective(spec: ObjectiveSpec, params) -> float:
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (spec.graph.dim,):
        raise ValueError(f"expected {spec.graph.dim} parameters, got {params.shape}")
    if not np.all(np.isfinite(params)):
        raise ValueError("parameters must be finite")
    return float(spec.compile()(params))


# --- Powell ------------------------------------------------------------------

@dataclass
class PowellResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    nfev: int
    history: list = field(default_factory=list)


class _Counted:
    def __init__(self, f):
        self.f = f
        self.n = 0
        along = getattr(f, "along", None)
        if along is not None:
            self._along = along
        else:
            self._along = lambda x, d, t: f(x + t * d)

    def __call__(self, x):
        self.n += 1
        return float(self.f(x))

    def along(self, x, d, t):
        self.n += 1
        return float(self._along(x, d, t))


def _bracket(phi, f0, step=1.0, max_grow=60):
    """Golden-ratio expansion until the middle point is lowest."""
    a, fa = 0.0, f0
    b, fb = step, phi(step)
    if fb > fa:
        a, b, fa, fb = b, a, fb, fa
    c = b + _GOLD * (b - a)
    fc = phi(c)
    grow = 0
    while fc < fb and grow < max_grow:
        a, fa, b, fb = b, fb, c, fc
        c = b + _GOLD * (b - a)
        fc = phi(c)
        grow += 1
    return a, b, c, fa, fb, fc


def _brent(phi, a, b, c, fb, tol, max_iter=100):
    """Brent's parabolic interpolation safeguarded by golden-section steps."""
    lo, hi = (a, c) if a < c else (c, a)
    x = w = v = b
    fx = fw = fv = fb
    d = e = 0.0
    for _ in range(max_iter):
        xm = 0.5 * (lo + hi)
        tol1 = tol * abs(x) + 1e-11
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (hi - lo):
            break
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            etemp = e
            e = d
            if abs(p) >= abs(0.5 * q * etemp) or p <= q * (lo - x) or p >= q * (hi - x):
                e = (lo - x) if x >= xm else (hi - x)
                d = _CGOLD * e
            else:
                d = p / q
                u = x + d
                if u - lo < tol2 or hi - u < tol2:
                    d = math.copysign(tol1, xm - x)
        else:
            e = (lo - x) if x >= xm else (hi - x)
            d = _CGOLD * e
        u = x + d if abs(d) >= tol1 else x + math.copysign(tol1, d)
        fu = phi(u)
        if fu <= fx:
            if u >= x:
                lo = x
            else:
                hi = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                lo = u
            else:
                hi = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, fx


def _line_min(fc: _Counted, x, d, fx, tol):
    phi = lambda t: fc.along(x, d, t)
    a, b, c, fa, fb, fcv = _bracket(phi, fx)
    # pick the lowest of the three as the interior seed when bracketing stalled
    if not (fb <= fa and fb <= fcv):
        best = min((fa, a), (fb, b), (fcv, c))
        t, ft = best[1], best[0]
    else:
        t, ft = _brent(phi, a, b, c, fb, tol)
    if ft < fx:
        return t, ft
    return 0.0, fx


def powell_minimize(f: Callable, x0, tol: float = 1e-6, max_iter: int = 500,
                    line_tol: Optional[float] = None) -> PowellResult:
    """Minimize ``f`` with Powell's conjugate direction-set method.

    Each iteration line-minimizes along every direction in turn, then tries the
    net displacement as a new direction, replacing the direction that gave the
    largest decrease.  Directions reset to the coordinate axes every ``n``
    iterations.  Stops when the relative decrease over a cycle is below
    ``tol``; otherwise returns the best point after ``max_iter`` cycles with
    ``converged=False``.

    If ``f`` has an ``along(x, d, t)`` method it is used for line evaluations.
    """
    fc = _Counted(f)
    x = np.array(x0, dtype=np.float64).ravel()
    n = x.size
    fx = fc(x)
    if not math.isfinite(fx):
        raise ValueError("objective is not finite at x0")
    ltol = line_tol if line_tol is not None else max(tol / 10.0, 1.5e-8)
    dirs = np.eye(n)
    history = [fx]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        fx_start = fx
        x_start = x.copy()
        big_i, big_drop = 0, 0.0
        for i in range(n):
            d = dirs[i]
            t, ft = _line_min(fc, x, d, fx, ltol)
            if fx - ft > big_drop:
                big_drop, big_i = fx - ft, i
            if t != 0.0:
                x = x + t * d
                fx = ft
        if 2.0 * (fx_start - fx) <= tol * (abs(fx_start) + abs(fx)) + _TINY:
            history.append(fx)
            converged = True
            break
        d_new = x - x_start
        fe = fc(x + d_new)
        if fe < fx_start:
            crit = (2.0 * (fx_start - 2.0 * fx + fe) * (fx_start - fx - big_drop) ** 2
                    - big_drop * (fx_start - fe) ** 2)
            if crit < 0.0:
                t, ft = _line_min(fc, x, d_new, fx, ltol)
                if t != 0.0:
                    x = x + t * d_new
                    fx = ft
                dirs[big_i] = dirs[-1]
                dirs[-1] = d_new
        history.append(fx)
        if it % n == 0:
            dirs = np.eye(n)
    return PowellResult(x=x, fun=fx, iterations=it, converged=converged,
                        nfev=fc.n, history=history)


# --- fitting -------------------------------------------------------------------

@dataclass
class FittedHierarchy:
    graph: HierarchyGraph
    params: dict
    objective: float
    converged: bool
    iterations: int
    history: list

    def flat(self) -> np.ndarray:
        return np.concatenate([self.params[n] for n in self.graph.nodes])


def fit_hierarchy(spec: ObjectiveSpec, tol: float = 1e-6, max_iter: int = 500,
                  backend=None) -> FittedHierarchy:
    """Joint MAP fit of every node, started from the prior centers."""
    obj = spec.compile(backend)
    x0 = spec.flat_centers()
    res = powell_minimize(obj, x0, tol=tol, max_iter=max_iter)
    blocks = res.x.reshape(-1, N_SYMPTOMS)
    params = {n: blocks[i].copy() for i, n in enumerate(spec.graph.nodes)}
    return FittedHierarchy(spec.graph, params, res.fun, res.converged,
                           res.iterations, res.history)


def write_params(fitted: FittedHierarchy, path) -> None:
    lines = ["node,symptom,value"]
    for n in fitted.graph.nodes:
        for j, s in enumerate(SYMPTOMS):
            lines.append(f"{n},{s},{float(fitted.params[n][j])!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
