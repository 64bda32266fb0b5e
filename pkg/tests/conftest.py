import numpy as np
import pytest

from dynemit.pulses import TimeGrid, make_gaussian_mode


@pytest.fixture(scope="session")
def std_mode():
    """Production-grid Gaussian: sigma g^2 = 2/sqrt(pi), 5 sigma margins."""
    return make_gaussian_mode(1.0, 5.0, TimeGrid(0.0, 10.0, 4000))


@pytest.fixture(scope="session")
def fast_mode():
    """Coarser grid for optimizer loops and property tests."""
    return make_gaussian_mode(1.0, 5.0, TimeGrid(0.0, 10.0, 2000))


@pytest.fixture(scope="session")
def pipeline_cache(std_mode):
    """Shared two-pass pipeline results for the TLS Table-I scenarios."""
    from dynemit.engine import addition_config, subtraction_config
    from dynemit.tomography import fidelity_pipeline

    cache = {}

    def get(process, n, prefactor, loss_rate=0.0, mode=None):
        key = (process, n, prefactor, loss_rate, id(mode))
        if key not in cache:
            m = mode if mode is not None else std_mode
            if process == "subtract":
                cfg = subtraction_config(n, m, prefactor, loss_rate=loss_rate)
                cache[key] = fidelity_pipeline(n - 1, cfg, herald="excited")
            else:
                cfg = addition_config(n, m, prefactor, loss_rate=loss_rate)
                cache[key] = fidelity_pipeline(n, cfg, herald="ground")
        return cache[key]

    return get
