"""Variational-parameter optimization for the coupling-ansatz prefactors."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .engine import addition_config, evolve, subtraction_config, three_level_config
from .pulses import GridError


@dataclass(frozen=True)
class ObjectiveSpec:
    """Scenario descriptor for one optimization run."""

    scenario: str  # "subtract" / "add"
    n: int
    emitter: str = "tls"  # "tls" / "3ls"
    objective: str = "excited_population"  # or "fidelity"
    bounds: tuple = (0.05, 3.0)
    budget: int = 60
    delta: float = 5.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.scenario not in ("subtract", "add"):
            raise GridError("scenario must be 'subtract' or 'add'")
        if not all(np.isfinite(b) for b in np.ravel(self.bounds)):
            raise GridError("bounds must be finite")
        if self.budget < 20:
            raise GridError("budget must be at least 20 evaluations")


@dataclass
class SearchResult:
    best_param: object
    best_value: float
    trace: list = field(default_factory=list)
    converged: bool = True

    def improvement_curve(self):
        return np.maximum.accumulate([v for _, v in self.trace])

    def trace_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eval", "param", "value"])
            for i, (p, v) in enumerate(self.trace):
                w.writerow([i, *np.atleast_1d(p), v])


def _excited_population(result, emitter_index):
    red = result.reduced((emitter_index,))
    return float(red[1, 1].real)


def make_objective(spec, mode):
    """Cheap simulation objective: excited population (subtraction) or
    input-mode sink Fock fidelity (addition); final points should be
    re-verified with the two-pass tomography pipeline."""

    def tls_subtract(s):
        res = evolve(subtraction_config(spec.n, mode, float(s)))
        return _excited_population(res, 1)

    def tls_add(a):
        res = evolve(
            addition_config(spec.n, mode, float(a), sink_mode=mode)
        )
        sink_index = len(res.space.factors) - 1
        return float(res.reduced((sink_index,))[spec.n, spec.n].real)

    def lam(params):
        p_r, p_i = np.ravel(params)
        cfg = three_level_config(
            spec.n, mode, (float(p_r), float(p_i)), spec.delta, spec.gamma,
            model="effective", direction=spec.scenario,
            sink_mode=None if spec.scenario == "subtract" else mode,
        )
        res = evolve(cfg)
        emitter_index = 1 if cfg.source is not None else 0
        if spec.scenario == "subtract":
            return _excited_population(res, emitter_index)
        sink_index = len(res.space.factors) - 1
        return float(res.reduced((sink_index,))[spec.n, spec.n].real)

    if spec.emitter == "3ls":
        return lam
    return tls_subtract if spec.scenario == "subtract" else tls_add


def optimize_1d(func, bracket, budget=40, tol=1e-4):
    """Golden-section maximization on a bracket, with a grid-scan fallback
    when the bracket is not unimodal."""
    lo, hi = bracket
    trace = []

    def wrapped(x):
        v = func(x)
        trace.append((float(x), float(v)))
        return -v

    mid = 0.5 * (lo + hi)
    f_lo, f_mid, f_hi = -wrapped(lo), -wrapped(mid), -wrapped(hi)
    if max(f_lo, f_hi) > f_mid:
        # not unimodal as bracketed: coarse scan, then refine around the peak
        xs = np.linspace(lo, hi, max(9, budget // 3))
        vals = [-wrapped(x) for x in xs]
        j = int(np.argmax(vals))
        lo = xs[max(0, j - 1)]
        hi = xs[min(len(xs) - 1, j + 1)]
    out = minimize_scalar(
        wrapped,
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": tol, "maxiter": budget},
    )
    best = max(trace, key=lambda pv: pv[1])
    return SearchResult(best[0], best[1], trace, converged=bool(out.success))


def optimize_2d(func, start, budget=150, tol=1e-3):
    """Nelder-Mead maximization from a start point."""
    trace = []

    def wrapped(x):
        v = func(x)
        trace.append((tuple(float(xi) for xi in x), float(v)))
        return -v

    out = minimize(
        wrapped,
        np.asarray(start, float),
        method="Nelder-Mead",
        options={"maxfev": budget, "xatol": tol, "fatol": 1e-8},
    )
    best = max(trace, key=lambda pv: pv[1])
    return SearchResult(np.asarray(best[0]), best[1], trace,
                        converged=bool(out.success))


def sweep(func, values):
    """Sample the objective on a parameter range."""
    values = np.asarray(values, float)
    return values, np.asarray([func(v) for v in values])


def table_to_json(entries, path):
    """Dump optimized-parameter tables keyed by (n, process, emitter)."""
    out = {}
    for (n, process, emitter), payload in entries.items():
        out[f"{emitter}/{process}/n={n}"] = payload
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
    return out


def pi_pulse_seed(n):
    """Bracket seed at the pi-pulse prediction +/- 50%."""
    s = (math.pi / 4.0) * math.sqrt((2 * n - 1) / n)
    return (0.5 * s, 1.5 * s)
