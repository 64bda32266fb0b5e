"""Cascaded Lindblad master equation for chains of emitters and virtual
cavities.

The propagating pulse is handled in the quantum-pulses picture: an upstream
source cavity releases the input wavepacket, the emitters interact in spatial
order through a chiral (unidirectional) cascade, and an optional downstream
sink cavity catches a designated output mode.  The generator is assembled
from precomputed sparse templates with per-sample coefficients, so one RHS
evaluation costs a handful of sparse-dense products.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import sparse
from scipy.integrate import cumulative_trapezoid

from . import fock
from .pulses import (
    EPS_REG,
    CouplingSchedule,
    GridError,
    RabiDrive,
    TemporalMode,
    TimeGrid,
    g_add_n,
    g_sub_n,
    rabi_add_n,
    rabi_sub_n,
)

GUARD_LEVEL = 1e-6


class EmitterKind(Enum):
    TLS = "tls"
    THREE_LEVEL_FULL = "three_level_full"
    THREE_LEVEL_EFFECTIVE = "three_level_effective"


@dataclass(frozen=True)
class EmitterSpec:
    """One emitter in the chain.

    TLS and effective three-level emitters carry a CouplingSchedule; the full
    three-level emitter carries a RabiDrive plus its waveguide rate and
    detuning.  `initial` is "ground"/"excited" (the three-level ground
    manifold maps ground->|g>, excited->|e>).
    """

    kind: EmitterKind
    schedule: CouplingSchedule | None = None
    drive: RabiDrive | None = None
    gamma: float = 1.0
    delta: float | None = None
    loss_rate: float = 0.0
    initial: str = "ground"

    @property
    def dim(self):
        return 3 if self.kind is EmitterKind.THREE_LEVEL_FULL else 2


@dataclass(frozen=True)
class CavitySpec:
    """Virtual cavity holding the input pulse (source) or catching the
    output (sink)."""

    role: str
    mode: TemporalMode
    dim: int
    initial: object = None  # int photon number, state vector, or dm

    def initial_dm(self):
        if self.role == "sink" or self.initial is None:
            return fock.dm(fock.fock_vector(0, self.dim))
        if isinstance(self.initial, (int, np.integer)):
            return fock.dm(fock.fock_vector(int(self.initial), self.dim))
        arr = np.asarray(self.initial, dtype=complex)
        if arr.ndim == 1:
            return fock.dm(arr)
        return arr


@dataclass(frozen=True)
class SimConfig:
    grid: TimeGrid
    emitters: tuple
    source: CavitySpec | None = None
    sink: CavitySpec | None = None
    record_stride: int = 10
    eps: float = EPS_REG
    guard: float = GUARD_LEVEL


@dataclass
class SimResult:
    space: fock.CompositeSpace
    final_state: np.ndarray
    times: np.ndarray
    records: dict
    wall_time: float

    def reduced(self, keep):
        return fock.partial_trace(self.final_state, keep, self.space.dims)


def source_coupling(mode, eps=EPS_REG):
    """Release coupling g_u(t) = u*(t)/sqrt(eps + int_t^inf |u|^2)."""
    return CouplingSchedule(
        mode.grid, np.conj(mode.samples) / np.sqrt(eps + mode.cumulative_tail()), eps
    )


def sink_coupling(mode, eps=EPS_REG):
    """Catch coupling g_v(t) = v*(t)/sqrt(eps + int_0^t |v|^2)."""
    return CouplingSchedule(
        mode.grid, np.conj(mode.samples) / np.sqrt(eps + mode.cumulative()), eps
    )


class _Chain:
    """Precomputed sparse templates and coefficient series for one config."""

    def __init__(self, config):
        self.config = config
        grid = config.grid
        n_samp = grid.n_steps + 1
        factors = []
        elements = []  # (factor_index, sparse op in factor space, coef series)
        local_h = []  # (coef series, sparse embedded op) for -i H_local terms
        scatter = []  # (factor_index, conditional transmission phase t_g)
        losses = []  # (rate, factor op, factor index)

        if config.source is not None:
            factors.append(
                fock.HilbertFactor(config.source.dim, fock.FactorKind.BOSONIC)
            )
            coef = source_coupling(config.source.mode, config.eps).g_samples
            elements.append((0, fock.annihilation(config.source.dim), coef))

        for spec in config.emitters:
            idx = len(factors)
            factors.append(
                fock.HilbertFactor(
                    spec.dim,
                    fock.FactorKind.THREE_LEVEL
                    if spec.dim == 3
                    else fock.FactorKind.TLS,
                )
            )
            if spec.kind is EmitterKind.TLS:
                if spec.schedule is None:
                    raise GridError("TLS emitter needs a schedule")
                coef = np.conj(spec.schedule.g_samples)
                elements.append((idx, fock.sigma_minus(), coef))
                if spec.loss_rate > 0:
                    losses.append((spec.loss_rate, fock.sigma_minus(), idx))
            elif spec.kind is EmitterKind.THREE_LEVEL_EFFECTIVE:
                if spec.schedule is None or spec.delta is None:
                    raise GridError("effective emitter needs schedule and delta")
                # AC Stark effect of the eliminated level: the coupling picks
                # up xi = 1/(1 + i gamma/(2 delta)), |e> is shifted by
                # Im(xi)|g|^2/2, and light passing the emitter in |g> gets the
                # conditional transmission phase t_g = (1-ih/2)/(1+ih/2)
                xi = 1.0 / (1.0 + 1j * spec.gamma / (2.0 * spec.delta))
                coef = xi * np.conj(spec.schedule.g_samples)
                elements.append((idx, fock.sigma_minus(), coef))
                g2 = np.abs(spec.schedule.g_samples) ** 2
                local_h.append(
                    ((xi.imag * g2 / 2.0).astype(complex),
                     fock.transition(2, 1, 1), idx)
                )
                half = 0.5j * spec.gamma / spec.delta
                scatter.append((idx, (1.0 - half) / (1.0 + half)))
                if spec.loss_rate > 0:
                    losses.append((spec.loss_rate, fock.sigma_minus(), idx))
            elif spec.kind is EmitterKind.THREE_LEVEL_FULL:
                if spec.drive is None or spec.delta is None:
                    raise GridError("full emitter needs drive and delta")
                # basis order |g>, |e>, |r>
                coef = np.full(n_samp, np.sqrt(spec.gamma), dtype=complex)
                elements.append((idx, fock.transition(3, 0, 2), coef))
                sigma_rr = fock.transition(3, 2, 2)
                sigma_re = fock.transition(3, 2, 1)
                local_h.append(
                    (np.full(n_samp, -spec.delta, dtype=complex), sigma_rr, idx)
                )
                amp = 0.5 * spec.drive.omega_samples * np.exp(
                    -1j * spec.drive.phi_samples
                )
                local_h.append((amp, sigma_re, idx))
                local_h.append((np.conj(amp), sigma_re.conj().T, idx))
                if spec.loss_rate > 0:
                    losses.append((spec.loss_rate, fock.transition(3, 0, 2), idx))
            else:
                raise GridError(f"unknown emitter kind {spec.kind}")

        if config.sink is not None:
            idx = len(factors)
            factors.append(
                fock.HilbertFactor(config.sink.dim, fock.FactorKind.BOSONIC)
            )
            coef = sink_coupling(config.sink.mode, config.eps).g_samples
            elements.append((idx, fock.annihilation(config.sink.dim), coef))

        self.space = fock.CompositeSpace(tuple(factors))
        dim = self.space.total_dim
        if dim > 4096:
            raise fock.DimensionError(f"composite dimension {dim} over budget")

        def emb(op, idx):
            return sparse.csr_matrix(fock.embed(op, idx, self.space))

        self.c_ops = [(emb(op, idx), coef) for idx, op, coef in elements]
        # conditional phases act on everything upstream of their emitter;
        # element order matches factor order, one element per factor
        for idx, tg in scatter:
            S = emb(np.diag([tg, 1.0]).astype(complex), idx)
            for j in range(idx):
                C, coef = self.c_ops[j]
                self.c_ops[j] = ((S @ C).tocsr(), coef)
        self.n_elements = len(self.c_ops)
        # templates: number ops C_j^dag C_j, cross terms C_k^dag C_j (j<k),
        # local Hamiltonian pieces
        self.num_ops = [(C.conj().T @ C).tocsr() for C, _ in self.c_ops]
        self.cross = {}
        for j in range(self.n_elements):
            for k in range(j + 1, self.n_elements):
                Ck, _ = self.c_ops[k]
                Cj, _ = self.c_ops[j]
                self.cross[(k, j)] = (Ck.conj().T @ Cj).tocsr()
        self.local_h = [(coefs, emb(op, idx)) for coefs, op, idx in local_h]
        self.loss_ops = [
            (rate, sparse.csr_matrix(fock.embed(op, idx, self.space)))
            for rate, op, idx in losses
        ]
        half = sum(
            rate * (L.conj().T @ L) for rate, L in self.loss_ops
        )
        self.loss_half = half.tocsr() if self.loss_ops else None

    def drift(self, k):
        """A(t_k) = -iH(t_k) - (1/2) L0^dag L0 - (1/2) sum gamma L^dag L."""
        dim = self.space.total_dim
        A = sparse.csr_matrix((dim, dim), dtype=complex)
        for j, (num, (C, coef)) in enumerate(zip(self.num_ops, self.c_ops)):
            A = A - 0.5 * abs(coef[k]) ** 2 * num
        for (kk, j), tmpl in self.cross.items():
            _, ck = self.c_ops[kk]
            _, cj = self.c_ops[j]
            A = A - np.conj(ck[k]) * cj[k] * tmpl
        for coefs, op in self.local_h:
            A = A - 1j * coefs[k] * op
        if self.loss_half is not None:
            A = A - 0.5 * self.loss_half
        return A

    def collective(self, k):
        """L0(t_k) = sum_j c_j(t_k)."""
        L = self.c_ops[0][1][k] * self.c_ops[0][0]
        for C, coef in self.c_ops[1:]:
            L = L + coef[k] * C
        return L.tocsr()


def _rhs(A, L0, loss_ops, rho):
    # A rho + rho A^dag, written to stay linear in rho: symmetrizing the first
    # product instead would feed the anti-Hermitian roundoff of rho through the
    # jump sandwich alone (no damping anticommutator), which grows unstably.
    out = A @ rho
    out = out + (A @ rho.conj().T).conj().T
    tmp = L0 @ rho
    out = out + (L0.conj() @ tmp.T).T
    for rate, L in loss_ops:
        tmp = L @ rho
        out = out + rate * (L.conj() @ tmp.T).T
    return out


def _expect(op, rho):
    return complex((op.multiply(rho.T)).sum())


def evolve(config):
    """Integrate the cascaded master equation with fixed-step RK4.

    One RK4 step spans two grid intervals so the half-step coefficients are
    grid samples (no interpolation); n_steps must be even.
    """
    if config.grid.n_steps % 2:
        raise GridError("n_steps must be even")
    chain = _Chain(config)
    space = chain.space
    dims = space.dims

    mats = []
    if config.source is not None:
        mats.append(config.source.initial_dm())
    for spec in config.emitters:
        vec = np.zeros(spec.dim, dtype=complex)
        vec[0 if spec.initial == "ground" else 1] = 1.0
        mats.append(fock.dm(vec))
    if config.sink is not None:
        mats.append(config.sink.initial_dm())
    rho = mats[0]
    for m in mats[1:]:
        rho = np.kron(rho, m)

    # diagonal observables per factor
    diag_obs = {}
    for i, f in enumerate(space.factors):
        local = np.arange(f.dim, dtype=float)
        if f.kind is fock.FactorKind.BOSONIC:
            diag_obs[f"n_{i}"] = np.diag(fock.embed(np.diag(local), i, space)).real
        else:
            for lev in range(f.dim):
                sel = np.zeros(f.dim)
                sel[lev] = 1.0
                diag_obs[f"p{lev}_{i}"] = np.diag(
                    fock.embed(np.diag(sel), i, space)
                ).real

    n_rec = config.grid.n_steps // 2 + 1
    stride = max(1, config.record_stride)
    rec_idx = []
    records = {name: [] for name in diag_obs}
    records["flux"] = []  # <L0^dag L0>
    records["trace"] = []

    h = 2.0 * config.grid.dt
    A_cache = chain.drift(0)
    t_wall = time.perf_counter()
    for i in range(config.grid.n_steps // 2):
        k0, k1, k2 = 2 * i, 2 * i + 1, 2 * i + 2
        if i % stride == 0:
            d = np.diag(rho).real
            for name, vec in diag_obs.items():
                records[name].append(float(vec @ d))
            L0 = chain.collective(k0)
            records["flux"].append(_expect((L0.conj().T @ L0).tocsr(), rho).real)
            records["trace"].append(float(np.trace(rho).real))
            rec_idx.append(k0)
        A0, Am, A1 = A_cache, chain.drift(k1), chain.drift(k2)
        L00, L0m, L01 = chain.collective(k0), chain.collective(k1), chain.collective(k2)
        k1_ = _rhs(A0, L00, chain.loss_ops, rho)
        k2_ = _rhs(Am, L0m, chain.loss_ops, rho + 0.5 * h * k1_)
        k3_ = _rhs(Am, L0m, chain.loss_ops, rho + 0.5 * h * k2_)
        k4_ = _rhs(A1, L01, chain.loss_ops, rho + h * k3_)
        rho = rho + (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_)
        A_cache = A1

    # final record
    d = np.diag(rho).real
    for name, vec in diag_obs.items():
        records[name].append(float(vec @ d))
    L0 = chain.collective(config.grid.n_steps)
    records["flux"].append(_expect((L0.conj().T @ L0).tocsr(), rho).real)
    records["trace"].append(float(np.trace(rho).real))
    rec_idx.append(config.grid.n_steps)

    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-6:
        raise fock.TruncationError(f"trace drifted to {tr}", abs(tr - 1.0))
    # guard: top Fock level of every bosonic factor must stay unoccupied
    for i, f in enumerate(space.factors):
        if f.kind is fock.FactorKind.BOSONIC:
            red = fock.partial_trace(rho, (i,), dims)
            top = red[-1, -1].real
            if top > config.guard:
                raise fock.TruncationError(
                    f"guard level exceeded on factor {i}: {top}", top
                )

    records = {k: np.asarray(v) for k, v in records.items()}
    return SimResult(
        space,
        rho,
        config.grid.times[np.asarray(rec_idx)],
        records,
        time.perf_counter() - t_wall,
    )


def _fock_dim(n):
    # one spare level above the highest occupied state for the guard check
    return n + 2


def subtraction_config(n, mode, s_n, loss_rate=0.0, sink_mode=None, sink_dim=None):
    """n-excitation subtraction on a single TLS.

    Source starts with |n>, the TLS in ground; success is the TLS ending
    excited with n-1 photons released.  With a sink the captured (n-1)-photon
    population is recorded too.
    """
    schedule = g_sub_n(mode, n, s_n)
    emitter = EmitterSpec(EmitterKind.TLS, schedule=schedule, loss_rate=loss_rate)
    sink = None
    if sink_mode is not None:
        sink = CavitySpec("sink", sink_mode, sink_dim or _fock_dim(n - 1))
    config = SimConfig(
        grid=mode.grid,
        emitters=(emitter,),
        source=CavitySpec("source", mode, _fock_dim(n), initial=n),
        sink=sink,
    )
    return config


def addition_config(n, mode, a_n, loss_rate=0.0, sink_mode=None, sink_dim=None):
    """n-excitation addition on a single TLS.

    Source starts with |n-1>, the TLS excited; success is the TLS ending in
    ground with n photons released into the sink mode.
    """
    schedule = g_add_n(mode, n, a_n)
    emitter = EmitterSpec(
        EmitterKind.TLS, schedule=schedule, loss_rate=loss_rate, initial="excited"
    )
    sink = None
    if sink_mode is not None:
        sink = CavitySpec("sink", sink_mode, sink_dim or _fock_dim(n))
    source = None
    if n > 1:
        source = CavitySpec("source", mode, _fock_dim(n - 1), initial=n - 1)
    config = SimConfig(
        grid=mode.grid, emitters=(emitter,), source=source, sink=sink
    )
    return config


def cascade_config(k, direction, mode, prefactors, loss_rate=0.0, schedules=None):
    """Chain of k TLSs subtracting (or adding) one photon each.

    direction "subtract": source |k>, all emitters ground, stage j uses the
    (k - j)-excitation schedule; "add": source vacuum / |0>, all emitters
    excited, stage j uses the (j + 1)-excitation addition schedule.
    """
    if len(prefactors) != k:
        raise GridError("need one prefactor per stage")
    emitters = []
    if direction == "subtract":
        stage_sched = schedules or [
            g_sub_n(mode, k - j, prefactors[j]) for j in range(k)
        ]
        for sched in stage_sched:
            emitters.append(
                EmitterSpec(EmitterKind.TLS, schedule=sched, loss_rate=loss_rate)
            )
        source = CavitySpec("source", mode, _fock_dim(k), initial=k)
        sink = None
    elif direction == "add":
        stage_sched = schedules or [
            g_add_n(mode, j + 1, prefactors[j]) for j in range(k)
        ]
        for sched in stage_sched:
            emitters.append(
                EmitterSpec(
                    EmitterKind.TLS,
                    schedule=sched,
                    loss_rate=loss_rate,
                    initial="excited",
                )
            )
        source = None
        sink = CavitySpec("sink", mode, _fock_dim(k))
    else:
        raise GridError("direction must be 'subtract' or 'add'")
    config = SimConfig(
        grid=mode.grid, emitters=tuple(emitters), source=source, sink=sink
    )
    return config


def three_level_config(n, mode, params, delta, gamma, model="full",
                    direction="subtract", loss_rate=0.0, sink_mode=None,
                    sink_dim=None):
    """n-excitation subtraction/addition with a Lambda-system emitter.

    params is (p_r, p_i); model is "full" (three levels, explicit drive) or
    "effective" (adiabatically eliminated, schedule + Stark term).
    """
    p_r, p_i = params
    if direction == "subtract":
        drive = rabi_sub_n(mode, n, p_r, p_i, delta, gamma)
        initial = "ground"
        n_src, n_out = n, n - 1
    elif direction == "add":
        drive = rabi_add_n(mode, n, p_r, p_i, delta, gamma)
        initial = "excited"
        n_src, n_out = n - 1, n
    else:
        raise GridError("direction must be 'subtract' or 'add'")
    if model == "full":
        emitter = EmitterSpec(
            EmitterKind.THREE_LEVEL_FULL,
            drive=drive,
            gamma=gamma,
            delta=delta,
            loss_rate=loss_rate,
            initial=initial,
        )
    elif model == "effective":
        emitter = EmitterSpec(
            EmitterKind.THREE_LEVEL_EFFECTIVE,
            schedule=drive.effective_coupling(),
            gamma=gamma,
            delta=delta,
            loss_rate=loss_rate,
            initial=initial,
        )
    else:
        raise GridError("model must be 'full' or 'effective'")
    source = None
    if n_src > 0:
        source = CavitySpec("source", mode, _fock_dim(n_src), initial=n_src)
    sink = None
    if sink_mode is not None:
        sink = CavitySpec("sink", sink_mode, sink_dim or _fock_dim(n_out))
    config = SimConfig(
        grid=mode.grid, emitters=(emitter,), source=source, sink=sink
    )
    return config


def run_subtraction(*args, **kwargs):
    return evolve(subtraction_config(*args, **kwargs))


def run_addition(*args, **kwargs):
    return evolve(addition_config(*args, **kwargs))


def run_cascade(*args, **kwargs):
    return evolve(cascade_config(*args, **kwargs))


def run_three_level(*args, **kwargs):
    return evolve(three_level_config(*args, **kwargs))
