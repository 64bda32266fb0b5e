"""Temporal modes, coupling schedules, and Rabi drives.

Every dynamic coupling g(t) used by the simulators is built here from a
normalized temporal mode f(-t): the general boundary-condition inversion, the
n-excitation subtraction/addition schedules, the superposition-addition
ansatz, and the Lambda-system Rabi drives with their Stark-shift exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import cumulative_trapezoid

EPS_REG = 1e-12


class ModeShape(Enum):
    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"
    CUSTOM = "custom"


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid; units are 1/g^2 for two-level runs, 1/Gamma for
    three-level runs."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if self.t_end <= self.t_start:
            raise GridError("t_end must exceed t_start")
        if self.n_steps < 1:
            raise GridError("n_steps must be positive")

    @property
    def dt(self):
        return (self.t_end - self.t_start) / self.n_steps

    @property
    def times(self):
        return np.linspace(self.t_start, self.t_end, self.n_steps + 1)


@dataclass(frozen=True)
class TemporalMode:
    """Normalized mode samples f(-t) on a grid."""

    grid: TimeGrid
    samples: np.ndarray
    shape: ModeShape = ModeShape.CUSTOM
    sigma: float | None = None
    t0: float | None = None

    def __post_init__(self):
        norm = np.trapezoid(np.abs(self.samples) ** 2, dx=self.grid.dt)
        if abs(norm - 1.0) > 1e-8:
            raise GridError(f"mode not normalized: integral |f|^2 = {norm}")

    def cumulative(self):
        """F(t) = int_0^t |f|^2, trapezoidal, F(t_start) = 0."""
        return cumulative_trapezoid(
            np.abs(self.samples) ** 2, dx=self.grid.dt, initial=0.0
        )

    def cumulative_tail(self):
        """Ftilde(t) = int_t^inf |f|^2 on the grid.

        Integrated backwards from t_end so the tiny tail values keep relative
        accuracy (F_total - F cancels catastrophically there).
        """
        w = np.abs(self.samples[::-1]) ** 2
        return cumulative_trapezoid(w, dx=self.grid.dt, initial=0.0)[::-1]


@dataclass(frozen=True)
class CouplingSchedule:
    """Samples of the dynamic coupling g(t) on a grid."""

    grid: TimeGrid
    g_samples: np.ndarray
    regularization: float = EPS_REG

    def __post_init__(self):
        if not np.all(np.isfinite(self.g_samples)):
            raise GridError("coupling samples contain NaN/Inf")

    def cumulative_rate(self):
        """G(0,t) = int_0^t |g|^2."""
        return cumulative_trapezoid(
            np.abs(self.g_samples) ** 2, dx=self.grid.dt, initial=0.0
        )

    def to_csv(self, path):
        """Write (t, Re g, Im g) rows for external waveform generators."""
        data = np.column_stack(
            [self.grid.times, self.g_samples.real, self.g_samples.imag]
        )
        np.savetxt(path, data, delimiter=",", header="t,re_g,im_g", comments="")


@dataclass(frozen=True)
class RabiDrive:
    """Laser Rabi frequency Omega(t) and phase phi(t) for a Lambda system."""

    grid: TimeGrid
    omega_samples: np.ndarray
    phi_samples: np.ndarray
    detuning: float
    gamma: float
    enforce_guard: bool = False

    def __post_init__(self):
        # opt-in adiabaticity guard; the verbatim drive formulas exceed it at
        # the singular pulse edges where the emitter is inert
        if self.enforce_guard and np.max(self.omega_samples) > abs(self.detuning) / 3 + 1e-12:
            raise GridError("max Omega exceeds |Delta|/3")

    def adiabaticity_margin(self):
        """max Omega / |Delta| over the grid."""
        return float(np.max(self.omega_samples)) / abs(self.detuning)

    def effective_coupling(self):
        """Ground-manifold coupling g(t) implied by the drive.

        |g| = sqrt(Gamma) Omega / (2|Delta|); the phase follows from
        phi_g = phi + (Delta/Gamma) G(0,t) with G built from |g| alone.
        """
        mag = math.sqrt(self.gamma) * self.omega_samples / (2.0 * abs(self.detuning))
        G = cumulative_trapezoid(mag**2, dx=self.grid.dt, initial=0.0)
        sign = 1.0 if self.detuning >= 0 else -1.0
        phase = self.phi_samples + (self.detuning / self.gamma) * G
        return CouplingSchedule(self.grid, sign * mag * np.exp(1j * phase))

    def to_csv(self, path):
        """Write (t, Omega, phi) rows."""
        data = np.column_stack([self.grid.times, self.omega_samples, self.phi_samples])
        np.savetxt(path, data, delimiter=",", header="t,omega,phi", comments="")


@dataclass(frozen=True)
class StarkFactors:
    """Stark-effect factors of the Lambda system at detuning Delta, rate
    Gamma."""

    detuning: float
    gamma: float

    @property
    def xi(self):
        return 1.0 / (1.0 + 1j * self.gamma / (2.0 * self.detuning))

    def zeta(self, n):
        xi = self.xi
        q = np.conj(xi) / xi
        return abs(xi) ** 2 * (1.0 - q**n) / (1.0 - q) - xi / 2.0


def make_gaussian_mode(sigma, t0, grid):
    """Normalized Gaussian mode of width sigma centered at t0."""
    if t0 - grid.t_start < 5 * sigma or grid.t_end - t0 < 5 * sigma:
        raise GridError("grid clips the Gaussian tails (need 5 sigma margins)")
    t = grid.times
    samples = (sigma * math.sqrt(math.pi)) ** (-0.5) * np.exp(
        -((t - t0) ** 2) / (2.0 * sigma**2)
    )
    return TemporalMode(grid, samples.astype(complex), ModeShape.GAUSSIAN, sigma, t0)


def reference_rate(mode):
    """Peak |g|^2 of the one-excitation subtraction schedule, |f(t0)|^2/F(t0).

    For a Gaussian this is 2/(sigma sqrt(pi)); it sets the rate unit of the
    two-level runs.
    """
    if mode.shape is not ModeShape.GAUSSIAN:
        raise GridError("reference rate is defined for Gaussian modes only")
    i0 = int(np.argmin(np.abs(mode.grid.times - mode.t0)))
    F = mode.cumulative()
    return abs(mode.samples[i0]) ** 2 / F[i0]


def _regularized(x, eps):
    return np.maximum(x, 0.0) + eps


def general_inversion(mode, u, v, eps=EPS_REG):
    """Coupling solving the boundary condition f(-t) = u g* S_v(0,t).

    g*(t) = f(-t) / sqrt(2 Re(u-v) F(t)^{(u-v)/Re(u-v)}); the complex power
    uses the principal logarithm of the (real positive) F.
    """
    w = complex(u) - complex(v)
    if w.real <= 0:
        raise GridError("need Re(u - v) > 0")
    F = _regularized(mode.cumulative(), eps)
    expo = w / w.real
    g_star = mode.samples / (np.sqrt(2.0 * w.real) * np.exp(0.5 * expo * np.log(F)))
    return CouplingSchedule(mode.grid, np.conj(g_star), eps)


def g_sub_n(mode, n, s_n, eps=EPS_REG):
    """n-excitation subtraction schedule g* = s_n f(-t)/sqrt((2n-1) F)."""
    if n < 1 or s_n <= 0:
        raise GridError("need n >= 1 and s_n > 0")
    F = _regularized(mode.cumulative(), eps)
    g_star = s_n * mode.samples / np.sqrt((2 * n - 1) * F)
    return CouplingSchedule(mode.grid, np.conj(g_star), eps)


def g_add_n(mode, n, a_n, eps=EPS_REG):
    """n-excitation addition schedule g* = a_n f(-t)/sqrt((2n-1) Ftilde).

    For n=1 the mode argument is the desired output mode times i; for n > 1
    the input mode is reused (its output overlap is near unity).
    """
    if n < 1 or a_n <= 0:
        raise GridError("need n >= 1 and a_n > 0")
    Ft = _regularized(mode.cumulative_tail(), eps)
    samples = 1j * mode.samples if n == 1 else mode.samples
    g_star = a_n * samples / np.sqrt((2 * n - 1) * Ft)
    return CouplingSchedule(mode.grid, np.conj(g_star), eps)


def time_reverse(schedule, t_f):
    """Reversal map g_a(t) = g_s*(t_f - t), resampled onto the same grid."""
    grid = schedule.grid
    if not (grid.t_start <= t_f <= 2 * grid.t_end):
        raise GridError("t_f outside the reachable span")
    t = grid.times
    src = t_f - t
    re = np.interp(src, t, schedule.g_samples.real, left=0.0, right=0.0)
    im = np.interp(src, t, schedule.g_samples.imag, left=0.0, right=0.0)
    return CouplingSchedule(grid, re - 1j * im, schedule.regularization)


def g_superposition_add(mode, q1, q2, eps=EPS_REG):
    """Superposition-addition ansatz g* = q1 f(-t)/sqrt(1 - q2 F)."""
    if q2 > 1:
        raise GridError("need q2 <= 1")
    F = mode.cumulative()
    g_star = q1 * mode.samples / np.sqrt(_regularized(1.0 - q2 * F, eps))
    return CouplingSchedule(mode.grid, np.conj(g_star), eps)


def _drive_from_amplitude(amp, grid, delta, gamma, cap=False):
    # Omega/2 e^{i phi} = amp; the optional cap clamps the drive at |Delta|/3
    # for hardware that cannot follow the singular edge spikes
    omega = 2.0 * np.abs(amp)
    if cap:
        omega = np.minimum(omega, abs(delta) / 3.0)
    phi = np.unwrap(np.angle(amp))
    return RabiDrive(grid, omega, phi, delta, gamma, enforce_guard=cap)


def rabi_sub_n(mode, n, s_r, s_i, delta, gamma, eps=EPS_REG, cap=False):
    """Rabi drive for n-excitation subtraction with a Lambda system."""
    if abs(delta) < 3 * gamma:
        raise GridError("need |Delta|/Gamma >= 3 for adiabatic elimination")
    z = StarkFactors(delta, gamma).zeta(n)
    if z.real <= 0:
        raise GridError("Re(zeta) must be positive")
    F = _regularized(mode.cumulative(), eps)
    kappa = (s_r**2 * delta / gamma - s_i * z.imag) / z.real
    denom = np.sqrt(2.0 * z.real * F) * np.exp(0.5j * kappa * np.log(F))
    amp = (delta / math.sqrt(gamma)) * s_r * np.conj(mode.samples) / denom
    return _drive_from_amplitude(amp, mode.grid, delta, gamma, cap)


def rabi_add_n(mode, n, a_r, a_i, delta, gamma, eps=EPS_REG, cap=False):
    """Rabi drive for n-excitation addition with a Lambda system.

    For n=1 the mode argument is the desired output mode times i, as for
    g_add_n.
    """
    if abs(delta) < 3 * gamma:
        raise GridError("need |Delta|/Gamma >= 3 for adiabatic elimination")
    z = StarkFactors(delta, gamma).zeta(n)
    if z.real <= 0:
        raise GridError("Re(zeta) must be positive")
    Ft = _regularized(mode.cumulative_tail(), eps)
    samples = 1j * mode.samples if n == 1 else mode.samples
    kappa = (a_r**2 * delta / gamma - a_i * z.imag) / z.real
    denom = np.sqrt(2.0 * z.real * Ft) * np.exp(-0.5j * kappa * np.log(Ft))
    amp = (delta / math.sqrt(gamma)) * a_r * np.conj(samples) / denom
    return _drive_from_amplitude(amp, mode.grid, delta, gamma, cap)


def pi_pulse_prediction(n):
    """Square-pulse estimate of the subtraction prefactor,
    (pi/4) sqrt((2n-1)/n)."""
    if n < 1:
        raise GridError("need n >= 1")
    return 0.25 * math.pi * math.sqrt((2 * n - 1) / n)
