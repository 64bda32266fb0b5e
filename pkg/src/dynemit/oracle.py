"""Closed-form single-, two-, and linearized n-excitation solutions.

Independent cross-checks on the master-equation engine: everything here is
straight quadrature of the region-wise wavefunction solutions, with the
output coordinate identified as x = -t sample-for-sample on the simulation
grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .pulses import GridError


@dataclass(frozen=True)
class OracleResult:
    """Closed-form outputs for one process."""

    excited_amplitude: np.ndarray
    output_wavefunction: np.ndarray
    success_probability: float
    mode_overlap: float


def _cumrate(schedule):
    return cumulative_trapezoid(
        np.abs(schedule.g_samples) ** 2, dx=schedule.grid.dt, initial=0.0
    )


def source_term(schedule, mode, v, a, b):
    """S_v(a,b) = int_a^b g(t') e^{v G(a,t')} f(-t') dt'."""
    if b < a:
        raise GridError("need b >= a")
    t = schedule.grid.times
    ia = int(np.argmin(np.abs(t - a)))
    ib = int(np.argmin(np.abs(t - b)))
    g = schedule.g_samples[ia : ib + 1]
    f = mode.samples[ia : ib + 1]
    G = _cumrate(schedule)
    expo = np.exp(v * (G[ia : ib + 1] - G[ia]))
    return complex(trapezoid(g * expo * f, dx=schedule.grid.dt))


def beta_single(schedule, mode, beta0):
    """Excited-state amplitude beta(t) for one excitation.

    beta(t) = e^{-G/2} [beta(0) - i int_0^t g e^{G/2} f(-t') dt']; pass a
    zero-amplitude mode for pure emission.
    """
    g = schedule.g_samples
    f = np.zeros_like(g) if mode is None else mode.samples
    G = _cumrate(schedule)
    src = cumulative_trapezoid(
        g * np.exp(G / 2.0) * f, dx=schedule.grid.dt, initial=0.0
    )
    return np.exp(-G / 2.0) * (beta0 - 1j * src)


def emitted_wavefunction(schedule):
    """Output mode of pure emission, f_out(-t) = -i g*(t) e^{-G/2}."""
    G = _cumrate(schedule)
    return -1j * np.conj(schedule.g_samples) * np.exp(-G / 2.0)


def two_excitation_closed_form(schedule, mode):
    """Region-wise two-excitation subtraction solution for arbitrary g.

    Returns beta_2(x, t_end) on x = -t, the probability that exactly one
    photon remains with the emitter excited, and the squared overlap of the
    normalized output wavefunction with the input mode.
    """
    grid = schedule.grid
    g = schedule.g_samples
    f = mode.samples
    G = _cumrate(schedule)
    # S_{1/2}(0,t) on the grid
    S = cumulative_trapezoid(g * np.exp(G / 2.0) * f, dx=grid.dt, initial=0.0)
    decay_S = np.exp(-G / 2.0) * S
    # B(x) with x = -t: input term minus the first-photon absorption/emission
    B = f - np.conj(g) * decay_S
    # second-photon source over [-x, t_end] plus leftover-excitation decay
    beta2 = (
        -1j
        * np.sqrt(2.0)
        * np.exp(-(G[-1] - G) / 2.0)
        * (f * decay_S + B * np.exp(-G / 2.0) * (S[-1] - S))
    )
    success = float(trapezoid(np.abs(beta2) ** 2, dx=grid.dt))
    if success > 0:
        ov = trapezoid(np.conj(f) * beta2, dx=grid.dt)
        overlap = float(np.abs(ov) ** 2 / success)
    else:
        overlap = 0.0
    beta1 = -1j * np.sqrt(2.0) * decay_S
    return OracleResult(beta1, beta2, success, overlap)


def two_excitation_limit(mode):
    """Linearized-schedule limit beta_2(x, inf) = -i sqrt(3/8) [1 + F^{2/3}] f."""
    F = mode.cumulative()
    return -1j * np.sqrt(3.0 / 8.0) * (1.0 + F ** (2.0 / 3.0)) * mode.samples


def n_excitation_residual(schedule, mode, n):
    """Max-norm residual of f(-t) = n g* e^{-G/2} S_{1/2}(0,t)."""
    if n < 1:
        raise GridError("need n >= 1")
    g = schedule.g_samples
    f = mode.samples
    G = _cumrate(schedule)
    S = cumulative_trapezoid(g * np.exp(G / 2.0) * f, dx=schedule.grid.dt, initial=0.0)
    res = f - n * np.conj(g) * np.exp(-G / 2.0) * S
    return float(np.max(np.abs(res)))


def three_level_residual(schedule, mode, n, xi):
    """Residual of the Stark-shifted boundary condition.

    f(-t) = [(1-(xi*/xi)^n)/(1-xi*/xi)] |xi|^2 g* e^{-xi G/2} S_{xi/2}(0,t);
    xi = 1 reduces to the two-level residual.
    """
    if n < 1:
        raise GridError("need n >= 1")
    xi = complex(xi)
    q = np.conj(xi) / xi
    if abs(q - 1.0) < 1e-15:
        pref = float(n)
    else:
        pref = (1.0 - q**n) / (1.0 - q)
    g = schedule.g_samples
    f = mode.samples
    G = _cumrate(schedule)
    S = cumulative_trapezoid(
        g * np.exp(xi * G / 2.0) * f, dx=schedule.grid.dt, initial=0.0
    )
    res = f - pref * abs(xi) ** 2 * np.conj(g) * np.exp(-xi * G / 2.0) * S
    return float(np.max(np.abs(res)))
