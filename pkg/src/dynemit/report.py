"""Delimited output and figure rendering for CLI runs."""

from __future__ import annotations

import csv
import json

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import fock


def save_records_csv(result, path):
    """Time series of every recorded observable, one column each."""
    keys = sorted(result.records)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *keys])
        for i, t in enumerate(result.times):
            w.writerow([t, *(np.real(result.records[k][i]) for k in keys)])


def save_wigner_csv(rho, re_grid, im_grid, path):
    W = fock.wigner(rho, re_grid, im_grid)
    np.savetxt(path, W, delimiter=",")
    return W


def save_json(payload, path):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def plot_records(result, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for key in sorted(result.records):
        if key in ("trace",):
            continue
        ax.plot(result.times, np.real(result.records[key]), label=key, lw=1)
    ax.set_xlabel("t")
    ax.set_ylabel("population / flux")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_wigner(rho, path, extent=3.5, n_points=121):
    xs = np.linspace(-extent, extent, n_points)
    W = fock.wigner(rho, xs, xs)
    lim = np.max(np.abs(W)) or 1.0
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.pcolormesh(xs, xs, W, cmap="RdBu_r", vmin=-lim, vmax=lim)
    fig.colorbar(im, ax=ax, label="W")
    ax.set_xlabel("Re beta")
    ax.set_ylabel("Im beta")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return W, xs


def plot_schedule(schedule, path):
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(schedule.grid.times, np.abs(schedule.g_samples), label="|g|")
    ax.plot(
        schedule.grid.times,
        np.unwrap(np.angle(schedule.g_samples)),
        label="arg g",
        lw=0.8,
    )
    ax.set_xlabel("t")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_modes(modes, path, labels=None):
    fig, ax = plt.subplots(figsize=(6, 3))
    for i, mode in enumerate(modes):
        label = labels[i] if labels else f"mode {i}"
        ax.plot(mode.grid.times, np.abs(mode.samples), label=label, lw=1)
    ax.set_xlabel("t")
    ax.set_ylabel("|f|")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
