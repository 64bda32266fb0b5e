"""Deterministic photon addition/subtraction with dynamically coupled emitters.

Simulation and analysis toolkit for chiral-waveguide emitters whose coupling
(or Raman drive) is modulated in time so that a propagating pulse gains or
loses exactly one photon: coupling-ansatz construction, cascaded
master-equation evolution, output-mode tomography, prefactor optimization,
and non-Gaussian state pipelines.
"""

__all__ = [
    "fock",
    "pulses",
    "oracle",
    "engine",
    "tomography",
    "search",
    "states",
]
