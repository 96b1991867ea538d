import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinwigner.fitting import (RAMSEY_PARAMS, fit_ramsey, least_squares, ramsey_initial_guess,
                                ramsey_model)
from spinwigner.simulate import RamseyData, ramsey_sequence
from spinwigner.state import DephasingModel

TAUS = np.linspace(0.0, 6.0, 48)
TRUTH = {"amplitude": 0.5, "offset": 0.5, "detuning_mhz": 0.5, "t2star_us": 2.64}


def line(x, a, b):
    return a * x + b


class TestLeastSquares:
    def test_linear_exact(self):
        x = np.linspace(0, 1, 10)
        res = least_squares(line, x, 3 * x - 1, [0.0, 0.0], names=["a", "b"])
        assert res.converged
        assert res.params["a"] == pytest.approx(3.0, abs=1e-12)
        assert res.params["b"] == pytest.approx(-1.0, abs=1e-12)
        assert res.iterations <= 3

    def test_linear_covariance_matches_closed_form(self, rng):
        x = np.linspace(0, 1, 30)
        y = 2 * x + 1 + rng.normal(0, 0.1, x.size)
        res = least_squares(line, x, y, [1.0, 0.0], names=["a", "b"])
        a = np.column_stack([x, np.ones_like(x)])
        coef, *_ = np.linalg.lstsq(a, y, rcond=None)
        np.testing.assert_allclose([res.params["a"], res.params["b"]], coef, atol=1e-10)
        s2 = np.sum((y - a @ coef) ** 2) / (x.size - 2)
        np.testing.assert_allclose(res.covariance, s2 * np.linalg.inv(a.T @ a), rtol=1e-6)

    def test_exponential_decay(self):
        x = np.linspace(0, 4, 40)
        model = lambda x, a, k: a * np.exp(-k * x)
        res = least_squares(model, x, model(x, 2.0, 0.7), {"a": 1.0, "k": 0.2})
        assert res.params["k"] == pytest.approx(0.7, abs=1e-10)

    def test_fixed_parameter(self):
        x = np.linspace(0, 1, 10)
        res = least_squares(line, x, 3 * x - 1, {"a": 0.0, "b": -1.0}, fixed={"b": -1.0})
        assert res.params["b"] == -1.0
        assert res.sigmas["b"] == 0.0
        assert res.free == ("a",)

    def test_weights(self):
        x = np.arange(5.0)
        y = np.array([0.0, 1.0, 2.0, 3.0, 10.0])
        sigma = np.array([1, 1, 1, 1, 1e6])
        res = least_squares(line, x, y, [0.0, 0.0], sigma=sigma)
        assert res.params["p0"] == pytest.approx(1.0, abs=1e-6)

    def test_errors(self):
        with pytest.raises(ValueError, match="underdetermined"):
            least_squares(line, [1.0], [1.0], [0.0, 0.0])
        with pytest.raises(ValueError, match="singular"):
            least_squares(lambda x, a, b: (a + b) * x, np.arange(5.0), np.arange(5.0), [0.0, 0.0])
        with pytest.raises(ValueError):
            least_squares(line, [1.0, 2.0], [1.0, 2.0], [0.0, 0.0], sigma=[1.0, 0.0])
        with pytest.raises(ValueError, match="unknown"):
            least_squares(line, [1.0, 2.0], [1.0, 2.0], [0.0, 0.0], fixed={"c": 1.0})

    def test_json_shape(self):
        x = np.linspace(0, 1, 10)
        out = least_squares(line, x, 3 * x, [0.0, 0.0], names=["a", "b"]).to_json()
        assert set(out) == {"params", "sigmas", "residual_norm", "converged", "iterations"}

    @given(st.permutations(range(48)))
    @settings(max_examples=10, deadline=None)
    def test_invariant_under_reordering(self, perm):
        data = ramsey_sequence(TAUS, 0.5, DephasingModel(), noise_sigma=0.01, seed=9)
        ref = least_squares(ramsey_model, data.taus, data.signals, TRUTH, names=RAMSEY_PARAMS)
        idx = np.array(perm)
        got = least_squares(ramsey_model, data.taus[idx], data.signals[idx], TRUTH, names=RAMSEY_PARAMS)
        for k in RAMSEY_PARAMS:
            assert got.params[k] == pytest.approx(ref.params[k], abs=1e-9)


class TestRamseyFit:
    def test_noiseless_exact(self):
        data = ramsey_sequence(TAUS, 0.5, DephasingModel(2.64))
        res = fit_ramsey(data)
        assert res.residual_norm < 1e-10
        for k, v in TRUTH.items():
            assert res.params[k] == pytest.approx(v, abs=1e-9)

    def test_initial_guess_near_truth(self):
        guess = ramsey_initial_guess(ramsey_sequence(TAUS, 0.5, DephasingModel(2.64)))
        assert guess["detuning_mhz"] == pytest.approx(0.5, abs=0.05)
        assert guess["t2star_us"] == pytest.approx(2.64, rel=0.3)

    def test_flat_signal_rejected(self):
        with pytest.raises(ValueError, match="spectral"):
            fit_ramsey(RamseyData(TAUS, np.full(48, 0.5)))

    def test_too_few_points(self):
        with pytest.raises(ValueError, match="8 points"):
            fit_ramsey(RamseyData(TAUS[:5], np.ones(5)))

    def test_zero_detuning_falls_back(self):
        data = ramsey_sequence(TAUS, 0.0, DephasingModel(2.64))
        res = fit_ramsey(data)
        assert res.params["detuning_mhz"] == 0.0
        assert res.params["t2star_us"] == pytest.approx(2.64, abs=1e-8)

    def test_sigma_coverage(self):
        # the reported 1-sigma band should contain the truth about 68 % of the time
        hits = 0
        n = 500
        for seed in range(n):
            data = ramsey_sequence(TAUS, 0.5, DephasingModel(2.64), noise_sigma=0.01, seed=seed)
            res = fit_ramsey(data)
            hits += abs(res.params["t2star_us"] - 2.64) <= res.sigmas["t2star_us"]
        assert 0.60 <= hits / n <= 0.99
