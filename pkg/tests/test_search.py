import numpy as np
import pytest

from dynemit.pulses import GridError
from dynemit.search import (
    ObjectiveSpec,
    make_objective,
    optimize_1d,
    optimize_2d,
    pi_pulse_seed,
    sweep,
)


def test_spec_validation():
    with pytest.raises(GridError):
        ObjectiveSpec("subtract", 2, budget=5)
    with pytest.raises(GridError):
        ObjectiveSpec("subtract", 2, bounds=(0.0, np.inf))
    with pytest.raises(GridError):
        ObjectiveSpec("invert", 2)


def test_optimize_1d_quadratic():
    res = optimize_1d(lambda x: -((x - 1.3) ** 2), (0.5, 2.5), budget=40)
    assert res.best_param == pytest.approx(1.3, abs=1e-3)
    curve = res.improvement_curve()
    assert np.all(np.diff(curve) >= 0)


def test_optimize_1d_fallback_on_bimodal():
    # value at the bracket end exceeds the middle: grid fallback kicks in
    func = lambda x: np.exp(-((x - 3.5) ** 2)) + 0.5 * np.exp(-((x - 1.0) ** 2))
    res = optimize_1d(func, (0.0, 4.0), budget=60)
    assert res.best_param == pytest.approx(3.5, abs=0.05)


def test_optimize_2d_quadratic():
    res = optimize_2d(
        lambda v: -((v[0] - 0.3) ** 2 + 2 * (v[1] + 0.4) ** 2), (0.0, 0.0)
    )
    assert res.best_param[0] == pytest.approx(0.3, abs=1e-3)
    assert res.best_param[1] == pytest.approx(-0.4, abs=1e-3)


def test_sweep_and_trace_csv(tmp_path):
    xs, ys = sweep(lambda x: -(x**2), np.linspace(-1, 1, 11))
    assert ys.argmax() == 5
    res = optimize_1d(lambda x: -(x**2), (-1.0, 1.0), budget=30)
    path = tmp_path / "trace.csv"
    res.trace_to_csv(path)
    assert path.read_text().startswith("eval,param,value")


def test_pi_pulse_seed_brackets_table():
    lo, hi = pi_pulse_seed(2)
    assert lo < 1.072 < hi


def test_engine_objective_peak(fast_mode):
    spec = ObjectiveSpec("subtract", 2)
    func = make_objective(spec, fast_mode)
    # objective is the final excited population; s = 0 leaves the TLS idle
    assert func(0.05) < 0.2
    assert func(1.072) > 0.99
