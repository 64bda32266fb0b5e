"""Output-field correlation, mode decomposition, and the fidelity pipeline.

Pass 1 runs a sink-free simulation and builds the first-order correlation
G(t,t') of the collective output field by the quantum regression theorem:
every seed L0(t') rho(t') is carried forward alongside rho in one batched
sweep.  Pass 2 reruns the scenario with a sink tuned to the dominant mode
and reads fidelity, success probability, and purity off the final state.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from . import fock
from .engine import CavitySpec, SimConfig, _Chain, evolve
from .pulses import GridError, TemporalMode, TimeGrid


@dataclass(frozen=True)
class CorrelationKernel:
    grid: TimeGrid
    times: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        defect = np.max(np.abs(self.matrix - self.matrix.conj().T))
        if defect > 1e-8:
            raise GridError(f"correlation kernel not Hermitian: {defect}")

    def to_csv(self, path):
        np.savetxt(path, self.matrix.view(float), delimiter=",")


@dataclass(frozen=True)
class ModeDecomposition:
    modes: tuple
    occupations: np.ndarray

    @property
    def total_emitted(self):
        return float(np.sum(self.occupations))


def _left(M, S):
    m, D, _ = S.shape
    out = M @ S.transpose(1, 0, 2).reshape(D, m * D)
    return np.asarray(out).reshape(D, m, D).transpose(1, 0, 2)


def _right(M, S):
    # S[k] @ M = (M.T @ S[k].T).T
    return _left(M.T, S.transpose(0, 2, 1)).transpose(0, 2, 1)


def _rhs_batch(A, L0, loss_ops, S):
    out = _left(A, S) + _right(A.conj().T, S)
    out += _right(L0.conj().T, _left(L0, S))
    for rate, L in loss_ops:
        out += rate * _right(L.conj().T, _left(L, S))
    return out


def g1_kernel(config, n_corr=200):
    """Two-time correlation of the collective output on a decimated grid."""
    if config.sink is not None:
        raise GridError("pass-1 tomography requires a sink-free config")
    if config.grid.n_steps % 2:
        raise GridError("n_steps must be even")
    chain = _Chain(config)
    D = chain.space.total_dim
    n_macro = config.grid.n_steps // 2
    # decimated sample indices, aligned with macro-step boundaries
    stride = max(1, n_macro // max(1, n_corr - 1))
    sample_macro = list(range(0, n_macro + 1, stride))
    if sample_macro[-1] != n_macro:
        sample_macro.append(n_macro)
    sample_set = set(sample_macro)
    n_s = len(sample_macro)

    mats = []
    if config.source is not None:
        mats.append(config.source.initial_dm())
    for spec in config.emitters:
        vec = np.zeros(spec.dim, dtype=complex)
        vec[0 if spec.initial == "ground" else 1] = 1.0
        mats.append(fock.dm(vec))
    rho = mats[0]
    for m in mats[1:]:
        rho = np.kron(rho, m)

    S = rho[np.newaxis].copy()  # S[0] is rho; seeds appended as reached
    G = np.zeros((n_s, n_s), dtype=complex)
    row_of = {}
    h = 2.0 * config.grid.dt

    def sample(i_macro):
        k = 2 * i_macro
        row = len(row_of)
        row_of[i_macro] = row
        L0 = chain.collective(k)
        L0d = L0.conj().T.tocsr()
        G[row, row] = np.trace(np.asarray(L0d @ (L0 @ S[0])))
        for prev in range(1, len(S)):
            G[row, prev - 1] = np.trace(np.asarray(L0d @ S[prev]))
        return np.concatenate([S, (L0 @ S[0])[np.newaxis]], axis=0)

    if 0 in sample_set:
        S = sample(0)
    A_cache = chain.drift(0)
    for i in range(n_macro):
        k0, k1, k2 = 2 * i, 2 * i + 1, 2 * i + 2
        A0, Am, A1 = A_cache, chain.drift(k1), chain.drift(k2)
        L00, L0m, L01 = (
            chain.collective(k0),
            chain.collective(k1),
            chain.collective(k2),
        )
        k1_ = _rhs_batch(A0, L00, chain.loss_ops, S)
        k2_ = _rhs_batch(Am, L0m, chain.loss_ops, S + 0.5 * h * k1_)
        k3_ = _rhs_batch(Am, L0m, chain.loss_ops, S + 0.5 * h * k2_)
        k4_ = _rhs_batch(A1, L01, chain.loss_ops, S + h * k3_)
        S = S + (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_)
        A_cache = A1
        if (i + 1) in sample_set:
            S = sample(i + 1)

    # lower triangle holds G(t,t') for t >= t'; mirror it
    G = np.tril(G) + np.tril(G, -1).conj().T
    G = 0.5 * (G + G.conj().T)
    times = config.grid.times[2 * np.asarray(sample_macro)]
    return CorrelationKernel(config.grid, times, G)


def decompose(kernel, keep=8):
    """Orthogonal output modes and occupations from the kernel.

    G(t,t') = sum_i n_i f_i*(-t) f_i(-t'); modes are resampled onto the full
    simulation grid and renormalized.
    """
    times = kernel.times
    w = np.gradient(times)  # trapezoid quadrature weights
    w[0] *= 0.5
    w[-1] *= 0.5
    sw = np.sqrt(w)
    vals, vecs = np.linalg.eigh(sw[:, None] * kernel.matrix * sw[None, :])
    if vals.min() < -1e-6:
        raise GridError(f"kernel has negative occupation {vals.min()}")
    order = np.argsort(vals)[::-1][:keep]
    grid = kernel.grid
    modes = []
    occs = []
    for j in order:
        f_dec = np.conj(vecs[:, j]) / sw
        sp_re = CubicSpline(times, f_dec.real)
        sp_im = CubicSpline(times, f_dec.imag)
        samples = sp_re(grid.times) + 1j * sp_im(grid.times)
        norm = trapezoid(np.abs(samples) ** 2, dx=grid.dt)
        if norm < 1e-12:
            continue
        samples = samples / np.sqrt(norm)
        modes.append(TemporalMode(grid, samples))
        occs.append(float(vals[j]))
    return ModeDecomposition(tuple(modes), np.asarray(occs))


@dataclass(frozen=True)
class PipelineResult:
    fidelity: float
    success_probability: float
    conditional_fidelity: float
    purity: float
    dominant_mode: TemporalMode
    occupations: np.ndarray
    sink_state: np.ndarray
    final_state: np.ndarray
    space: fock.CompositeSpace
    herald_state: np.ndarray | None = None


def _herald_projector(config, outcome, space):
    offset = 1 if config.source is not None else 0
    P = None
    for j, spec in enumerate(config.emitters):
        local = np.zeros((spec.dim, spec.dim))
        local[0 if outcome == "ground" else 1][0 if outcome == "ground" else 1] = 1.0
        emb = fock.embed(local, offset + j, space)
        P = emb if P is None else P @ emb
    return P


def _mixed_mode(dec, c):
    s = dec.modes[0].samples + c * dec.modes[1].samples
    grid = dec.modes[0].grid
    s = s / np.sqrt(trapezoid(np.abs(s) ** 2, dx=grid.dt))
    return TemporalMode(grid, s)


def fidelity_pipeline(n_target, config, herald=None, sink_dim=None, n_corr=200,
                      kernel=None, refine=False):
    """Two-pass fidelity/success/purity for one scenario.

    config must be sink-free; pass 1 extracts the dominant output mode, pass
    2 reruns with a sink tuned to it.  herald is None (unconditional numbers
    only), "excited" (subtraction) or "ground" (addition).  With refine=True
    the projection mode is varied around the dominant eigenmode (which
    maximizes mean occupation, not <n|rho|n>) by a parabolic fit over an
    admixture of the second eigenmode; costs four extra sink runs.
    """
    if kernel is None:
        kernel = g1_kernel(config, n_corr=n_corr)
    dec = decompose(kernel)
    mode = dec.modes[0]
    # failure branches can drop one extra photon into the sink
    dim = sink_dim or (n_target + 3)

    def sink_run(m):
        res = evolve(replace(config, sink=CavitySpec("sink", m, dim)))
        sink_index = len(res.space.factors) - 1
        rho_sink = res.reduced((sink_index,))
        return res, sink_index, rho_sink, float(rho_sink[n_target, n_target].real)

    if refine and len(dec.modes) > 1:
        h = 0.06
        c_best = 0.0
        f_best = sink_run(mode)[3]
        for direction in (1.0j, 1.0):
            fp = sink_run(_mixed_mode(dec, c_best + h * direction))[3]
            fm = sink_run(_mixed_mode(dec, c_best - h * direction))[3]
            candidates = [(c_best + h * direction, fp), (c_best - h * direction, fm)]
            curv = fp + fm - 2.0 * f_best
            if curv < 0.0:
                step = float(np.clip(-h * (fp - fm) / (2.0 * curv), -2 * h, 2 * h))
                c_new = c_best + direction * step
                candidates.append((c_new, sink_run(_mixed_mode(dec, c_new))[3]))
            for c_c, f_c in candidates:
                if f_c > f_best:
                    c_best, f_best = c_c, f_c
        if c_best != 0.0:
            mode = _mixed_mode(dec, c_best)

    res, sink_index, rho_sink, fidelity = sink_run(mode)

    success = 1.0
    cond_fid = fidelity
    purity = float(np.trace(rho_sink @ rho_sink).real)
    rho_h = None
    if herald is not None:
        P = _herald_projector(config, herald, res.space)
        proj = P @ res.final_state @ P
        success = float(np.trace(proj).real)
        if success > 1e-12:
            proj = proj / success
            rho_h = fock.partial_trace(proj, (sink_index,), res.space.dims)
            cond_fid = float(rho_h[n_target, n_target].real)
            purity = float(np.trace(rho_h @ rho_h).real)
    return PipelineResult(
        fidelity,
        success,
        cond_fid,
        purity,
        mode,
        dec.occupations,
        rho_sink,
        res.final_state,
        res.space,
        herald_state=rho_h,
    )
