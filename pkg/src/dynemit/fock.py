"""Truncated-Fock-space linear algebra: states, operators, tensor embedding,
traces, fidelities and Wigner grids.

Everything here is dense complex128.  Composite dimensions in this project
peak around ~1500, where dense BLAS kernels are simple and fast enough.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class FactorKind(Enum):
    BOSONIC = "bosonic"
    TLS = "tls"
    THREE_LEVEL = "three_level"


class DimensionError(ValueError):
    pass


class TruncationError(RuntimeError):
    """Raised when a requested state does not fit in the truncated basis."""

    def __init__(self, message, loss=None):
        super().__init__(message)
        self.loss = loss


@dataclass(frozen=True)
class HilbertFactor:
    """One tensor factor: a truncated bosonic mode, a TLS or a 3LS."""

    dim: int
    kind: FactorKind = FactorKind.BOSONIC

    def __post_init__(self):
        if self.dim < 2 and self.kind is FactorKind.BOSONIC:
            raise DimensionError(f"bosonic factor needs dim >= 2, got {self.dim}")
        if self.kind is FactorKind.TLS and self.dim != 2:
            raise DimensionError("TLS factor must have dim 2")
        if self.kind is FactorKind.THREE_LEVEL and self.dim != 3:
            raise DimensionError("three-level factor must have dim 3")


@dataclass(frozen=True)
class CompositeSpace:
    """Ordered tensor product of factors.

    Factor order is fixed for a simulation: source cavity, emitters in
    spatial order, sink cavity.
    """

    factors: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def dims(self):
        return tuple(f.dim for f in self.factors)

    @property
    def total_dim(self):
        return int(np.prod([f.dim for f in self.factors], dtype=np.int64)) if self.factors else 1

    def index_of(self, index):
        if not 0 <= index < len(self.factors):
            raise IndexError(f"factor index {index} out of range")
        return self.factors[index]


def single_space(dim, kind=FactorKind.BOSONIC):
    return CompositeSpace((HilbertFactor(dim, kind),))


# ---------------------------------------------------------------------------
# operators


def annihilation(dim):
    """Bosonic annihilation operator on a truncated ladder, <n-1|a|n> = sqrt(n)."""
    if dim < 2:
        raise DimensionError(f"annihilation needs dim >= 2, got {dim}")
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(dim):
    return annihilation(dim).conj().T


def number_op(dim):
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def sigma_minus():
    """TLS lowering operator |g><e| with basis order (|g>, |e>)."""
    op = np.zeros((2, 2), dtype=complex)
    op[0, 1] = 1.0
    return op


def transition(dim, i, j):
    """|i><j| on a dim-level system."""
    op = np.zeros((dim, dim), dtype=complex)
    op[i, j] = 1.0
    return op


def embed(op, index, space):
    """Kronecker-embed a single-factor operator into the composite space."""
    factor = space.index_of(index)
    op = np.asarray(op, dtype=complex)
    if op.shape != (factor.dim, factor.dim):
        raise DimensionError(
            f"operator shape {op.shape} does not match factor dim {factor.dim}"
        )
    out = np.array([[1.0 + 0j]])
    for k, f in enumerate(space.factors):
        out = np.kron(out, op if k == index else np.eye(f.dim, dtype=complex))
    return out


# ---------------------------------------------------------------------------
# pure-state constructors (single bosonic mode, Fock basis vectors)


def _check_truncation(vec, label, max_loss=1e-6):
    loss = 1.0 - np.linalg.norm(vec) ** 2
    if loss >= max_loss:
        raise TruncationError(
            f"{label}: truncated-norm loss {loss:.3e} >= {max_loss:g}; increase dim",
            loss=loss,
        )
    return vec / np.linalg.norm(vec)


def fock_vector(n, dim):
    if not 0 <= n < dim:
        raise DimensionError(f"fock level {n} outside dim {dim}")
    vec = np.zeros(dim, dtype=complex)
    vec[n] = 1.0
    return vec


def coherent_vector(alpha, dim, max_loss=1e-6):
    if alpha == 0:
        return fock_vector(0, dim)
    n = np.arange(dim)
    logfact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, dim)))))
    amps = np.exp(-0.5 * abs(alpha) ** 2 + n * np.log(complex(alpha)) - 0.5 * logfact)
    return _check_truncation(amps, f"coherent_state(alpha={alpha})", max_loss)


def squeeze_generator(r, dim):
    """Generator K with S(r) = expm(K), S(r) = exp[-(r/2)(a^2 - a^dag^2)]."""
    a = annihilation(dim)
    return -(r / 2.0) * (a @ a - a.conj().T @ a.conj().T)


def squeezed_vacuum_vector(r, dim, max_loss=1e-6):
    """S(r)|0> via the known Fock-basis closed form.

    Positive r squeezes the (a - a^dag)/(i sqrt(2)) quadrature; the matrix
    exponential of the generator is kept as an independent cross-check in the
    test suite.
    """
    vec = _squeezed_vacuum_closed_form(r, dim)
    return _check_truncation(vec, f"squeezed_vacuum(r={r})", max_loss)


def _squeezed_vacuum_closed_form(r, dim):
    # c_{2k} = (tanh r)^k sqrt((2k)!)/(2^k k!) / sqrt(cosh r)
    vec = np.zeros(dim, dtype=complex)
    th = math.tanh(r)
    vec[0] = 1.0
    for k in range(1, (dim - 1) // 2 + 1):
        log_c = 0.5 * math.lgamma(2 * k + 1) - k * math.log(2.0) - math.lgamma(k + 1)
        vec[2 * k] = th**k * math.exp(log_c)
    return vec / math.sqrt(math.cosh(r))


def displaced_squeezed_vector(alpha, r, dim, max_loss=1e-6):
    """D(alpha) S(r) |0> in the Fock basis (alpha, r real per the scan ranges)."""
    from scipy.linalg import expm

    a = annihilation(dim)
    disp = expm(alpha * a.conj().T - np.conj(alpha) * a)
    vec = disp @ squeezed_vacuum_vector(r, dim, max_loss)
    return _check_truncation(vec, f"displaced_squeezed(alpha={alpha}, r={r})", max_loss)


def cat_vector(alpha, parity, dim, max_loss=1e-6):
    """Normalized |alpha> + parity |-alpha>, parity in {+1, -1}."""
    if parity not in (+1, -1):
        raise ValueError("parity must be +1 or -1")
    if alpha == 0:
        if parity == -1:
            # odd cat limit alpha -> 0 is |1>
            return fock_vector(1, dim)
        return fock_vector(0, dim)
    plus = coherent_vector(alpha, dim, max_loss=max_loss)
    minus = coherent_vector(-alpha, dim, max_loss=max_loss)
    vec = plus + parity * minus
    return vec / np.linalg.norm(vec)


def dm(vec):
    """Pure-state density matrix from a state vector."""
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


# ---------------------------------------------------------------------------
# density-matrix utilities


def fidelity(rho, psi):
    """<psi|rho|psi>, clamped to [0, 1] against numerical noise."""
    rho = np.asarray(rho)
    psi = np.asarray(psi, dtype=complex)
    if rho.shape[0] != psi.shape[0]:
        raise DimensionError("state and density matrix live on different spaces")
    val = float(np.real(psi.conj() @ rho @ psi))
    if val < -1e-10 or val > 1 + 1e-10:
        raise RuntimeError(f"fidelity {val} outside [0,1] beyond noise tolerance")
    return min(max(val, 0.0), 1.0)


def purity(rho):
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))


def partial_trace(rho, keep, dims):
    """Trace out all factors not in `keep` (an index or an index set)."""
    if np.isscalar(keep):
        keep = (int(keep),)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must be a non-empty subset of factor indices")
    dims = list(dims)
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise IndexError("keep index out of range")
    rho = np.asarray(rho).reshape(dims + dims)
    # contract traced-out factors pairwise
    traced = [k for k in range(n) if k not in keep]
    for k in sorted(traced, reverse=True):
        rho = np.trace(rho, axis1=k, axis2=k + rho.ndim // 2)
    d = int(np.prod([dims[k] for k in keep]))
    return rho.reshape(d, d)


def check_density_matrix(rho, trace_tol=1e-8, herm_tol=1e-10, eig_tol=1e-8):
    """Validate trace, Hermiticity and positivity of a density matrix."""
    rho = np.asarray(rho)
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise RuntimeError(f"trace {tr} deviates from 1 beyond {trace_tol}")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol * max(1.0, np.max(np.abs(rho))):
        raise RuntimeError("density matrix not Hermitian within tolerance")
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if w.min() < -eig_tol:
        raise RuntimeError(f"negative eigenvalue {w.min():.3e} below -{eig_tol}")
    return True


def hermitian_defect(op):
    """Relative Frobenius-norm deviation from Hermiticity."""
    op = np.asarray(op)
    denom = np.linalg.norm(op) or 1.0
    return np.linalg.norm(op - op.conj().T) / denom


# ---------------------------------------------------------------------------
# Wigner function (displaced-parity formula)


def wigner(rho, re_grid, im_grid):
    """W(beta) = (2/pi) Tr[D(beta) rho D(beta)^dag Pi] on a grid of beta.

    Evaluated through the exact Fock-basis Laguerre series of
    Tr[rho D(2 beta) Pi], so there is no truncation artifact beyond the one
    already present in rho.  Normalized so the integral over
    d(Re beta) d(Im beta) is 1; vacuum peaks at 2/pi.
    """
    from scipy.special import eval_genlaguerre

    rho = np.asarray(rho)
    dim = rho.shape[0]
    xs, ys = np.meshgrid(np.asarray(re_grid, float), np.asarray(im_grid, float))
    alpha = 2.0 * (xs + 1j * ys)
    x2 = np.abs(alpha) ** 2
    logfact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, dim)))))
    acc = np.zeros_like(x2)
    for m in range(dim):
        sign = (-1.0) ** m
        acc += sign * np.real(rho[m, m]) * eval_genlaguerre(m, 0, x2)
        for d in range(1, dim - m):
            if rho[m, m + d] == 0 and rho[m + d, m] == 0:
                continue
            pref = sign * math.exp(0.5 * (logfact[m] - logfact[m + d]))
            lag = eval_genlaguerre(m, d, x2)
            with np.errstate(divide="ignore", invalid="ignore"):
                ad = np.where(x2 > 0, alpha**d, 0.0 if d else 1.0)
            acc += 2.0 * pref * lag * np.real(rho[m, m + d] * ad)
    return (2.0 / math.pi) * np.exp(-0.5 * x2) * acc
