import math

import numpy as np
import pytest
from scipy.linalg import expm

from dynemit import fock, states


def test_db_to_r():
    # 10 dB of squeezing: e^{2r} = 10
    assert math.exp(2 * states.db_to_r(10.0)) == pytest.approx(10.0, rel=1e-12)


def test_photon_added_target_trivial():
    t = states.photon_added_target(0.0, 0.0, 8)
    assert abs(t[1]) == pytest.approx(1.0, abs=1e-12)


def test_photon_added_coherent_closed_form():
    # a^dag |alpha> has coefficients sqrt(n) alpha^{n-1} e^{-|a|^2/2}/sqrt((n-1)!)
    alpha, dim = 1.4, 40
    target = states.photon_added_target(alpha, 0.0, dim)
    n = np.arange(1, dim)
    coeffs = np.zeros(dim)
    coeffs[1:] = np.sqrt(n) * alpha ** (n - 1) / np.sqrt(
        np.array([math.factorial(k - 1) for k in n], dtype=float)
    )
    coeffs *= math.exp(-(alpha**2) / 2.0)
    coeffs /= np.linalg.norm(coeffs)
    assert np.max(np.abs(target - coeffs)) < 1e-8


def test_photon_added_norm_identity():
    # ||a^dag psi||^2 = 1 + <n>
    alpha, r, dim = 1.1, 0.4, 50
    vec = fock.displaced_squeezed_vector(alpha, r, dim)
    raw = fock.creation(dim) @ vec
    nbar = float(np.real(vec.conj() @ fock.number_op(dim) @ vec))
    assert np.linalg.norm(raw) ** 2 == pytest.approx(1.0 + nbar, abs=1e-8)


def test_add_equals_sub_on_squeezed_vacuum():
    sq = fock.squeezed_vacuum_vector(0.8, 60)
    up = fock.creation(60) @ sq
    dn = fock.annihilation(60) @ sq
    up /= np.linalg.norm(up)
    dn /= np.linalg.norm(dn)
    assert abs(abs(np.vdot(up, dn)) - 1.0) < 1e-10


def test_scan_target_vacuum_trivial():
    rho = fock.dm(fock.fock_vector(1, 12))
    with pytest.warns(UserWarning):
        res = states.scan_target(
            rho, np.linspace(0.0, 0.5, 11), np.linspace(0.0, 0.2, 9)
        )
    assert res.alpha == pytest.approx(0.0, abs=0.05)
    assert res.r == pytest.approx(0.0, abs=0.03)
    assert res.fidelity == pytest.approx(1.0, abs=1e-8)
    assert res.delta_alpha == pytest.approx(0.0, abs=0.05)


def test_scan_target_phase_invariant():
    rho = fock.dm(np.exp(1j * 0.7) * states.photon_added_target(0.8, 0.1, 25))
    res = states.scan_target(
        rho, np.linspace(0.3, 1.3, 21), np.linspace(-0.1, 0.3, 17),
        alpha_in=0.8, r_in=0.1,
    )
    assert res.fidelity == pytest.approx(1.0, abs=1e-6)
    assert abs(res.delta_alpha) < 0.01


def test_cat_fit_exact_cat():
    cat = fock.cat_vector(1.5, +1, 40)
    fit = states.optimal_unsqueeze_cat_fit(fock.dm(cat))
    assert fit.r_opt == pytest.approx(0.0, abs=1e-9)
    assert fit.parity == +1
    assert fit.fidelity > 0.9999
    assert fit.size == pytest.approx(2.25, abs=0.05)


def test_cat_fit_squeezed_single_photon():
    U = expm(fock.squeeze_generator(0.5, 40))
    rho = fock.dm(U @ fock.fock_vector(1, 40))
    fit = states.optimal_unsqueeze_cat_fit(rho)
    assert fit.fidelity >= 0.99
    assert fit.parity == -1


def test_subtracted_squeezed_vacuum_is_squeezed_photon():
    # a S(r)|0> is S(r)|1> up to normalization: the cat-fit oracle for the
    # first point of the subtraction chain
    r = states.db_to_r(10.0)
    sq = fock.squeezed_vacuum_vector(r, 80)
    sub = fock.annihilation(80) @ sq
    sub /= np.linalg.norm(sub)
    U = expm(fock.squeeze_generator(r, 80))
    ref = U @ fock.fock_vector(1, 80)
    assert abs(abs(np.vdot(sub, ref)) - 1.0) < 1e-6  # expm truncation edge
    fit = states.optimal_unsqueeze_cat_fit(fock.dm(sub))
    assert fit.fidelity > 0.999


def test_superposition_q_constants():
    assert states.SUPERPOSITION_Q_FIRST == (0.509, 0.425)
    assert states.SUPERPOSITION_Q_LATER[0] == pytest.approx(1 / math.sqrt(10))
    assert states.SUPERPOSITION_Q_LATER[1] == pytest.approx(0.1)
