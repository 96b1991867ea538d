import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinwigner import io
from spinwigner.angular import half
from spinwigner.fitting import fit_ramsey
from spinwigner.simulate import ExperimentSpec, RamseyData, ramsey_sequence, run_tomography
from spinwigner.sphere import paper_grid
from spinwigner.state import DephasingModel, random_density_matrix, spin_coherent
from spinwigner.wigner import ProbabilityGrid, WignerMap, wigner_from_rho

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(finite)
def test_fmt_round_trips(x):
    assert float(io.fmt(x)) == x


@given(st.lists(finite, min_size=12, max_size=12))
@settings(max_examples=50)
def test_wigner_map_round_trip(values):
    w = WignerMap(paper_grid(2, 4), values, half(1), {"tau_us": 1.5, "state": "y"})
    back = io.wigner_map_from_csv(io.wigner_map_to_csv(w))
    np.testing.assert_array_equal(back.values, w.values)
    assert back.grid == w.grid
    assert back.j == w.j
    assert back.meta == {"tau_us": 1.5, "state": "y"}


def test_wigner_map_file(tmp_path):
    w = wigner_from_rho(spin_coherent(half(3), 0.3, 0.9), paper_grid())
    path = tmp_path / "sub" / "w.csv"
    io.wigner_map_to_csv(w, path)
    back = io.wigner_map_from_csv(path)
    np.testing.assert_array_equal(back.values, w.values)
    assert back.grid == w.grid
    assert not [p for p in path.parent.iterdir() if p.name.startswith(".")]


def test_probability_grid_round_trip_and_columns():
    pg = run_tomography(ExperimentSpec(j=half(3), rho=spin_coherent(half(3), 1.0, 2.0),
                                       grid=paper_grid(6, 5), shots=500, seed=2))
    text = io.probability_grid_to_csv(pg)
    assert "theta_rad,phi_rad,p_+3/2,p_+1/2,p_-1/2,p_-3/2" in text
    assert "# shots=500" in text
    back = io.probability_grid_from_csv(text)
    np.testing.assert_array_equal(back.probs, pg.probs)
    assert back.shots == 500 and back.j == half(3)


def test_integer_spin_columns():
    assert io._p_columns(half(2)) == ["p_+1", "p_0", "p_-1"]


def test_malformed_row_reports_line():
    text = "# j_twice=1\n# shots=0\ntheta_rad,phi_rad,p_+1/2,p_-1/2\n0,0,0.5,0.5\n0,1,0.5\n"
    with pytest.raises(ValueError, match="line 5"):
        io.probability_grid_from_csv(text)


def test_missing_header():
    with pytest.raises(ValueError, match="j_twice"):
        io.wigner_map_from_csv("theta_rad,phi_rad,w\n0,0,1\n")


def test_wrong_column_count_for_spin():
    text = "# j_twice=2\n# shots=0\ntheta_rad,phi_rad,p_+1/2,p_-1/2\n0,0,0.5,0.5\n"
    with pytest.raises(ValueError, match="expected columns"):
        io.probability_grid_from_csv(text)


def test_non_tensor_rows_rejected():
    text = "# j_twice=1\ntheta_rad,phi_rad,w\n0,0,1\n1,0,1\n0,1,1\n"
    with pytest.raises(ValueError, match="tensor"):
        io.wigner_map_from_csv(text)


@pytest.mark.parametrize("shots", [0, 200])
def test_ramsey_round_trip(shots):
    data = ramsey_sequence(np.linspace(0, 6, 48), 0.5, DephasingModel(), shots=shots, seed=4)
    back = io.ramsey_from_csv(io.ramsey_to_csv(data))
    np.testing.assert_array_equal(back.taus, data.taus)
    np.testing.assert_array_equal(back.signals, data.signals)
    assert (back.sigma is None) == (data.sigma is None)
    assert back.shots == shots and back.seed == 4


def test_fit_json_round_trip(tmp_path):
    fit = fit_ramsey(ramsey_sequence(np.linspace(0, 6, 48), 0.5, DephasingModel()))
    io.write_json(fit.to_json(), tmp_path / "fit.json")
    assert io.read_json(tmp_path / "fit.json") == fit.to_json()


def test_density_matrix_json(tmp_path, rng):
    rho = random_density_matrix(half(2), rng)
    io.density_matrix_to_json(rho, tmp_path / "rho.json")
    back = io.density_matrix_from_json(tmp_path / "rho.json")
    np.testing.assert_array_equal(back.entries, rho.entries)


def test_json_is_canonical():
    assert io.write_json({"b": np.float64(1.5), "a": np.arange(2)}) == '{\n  "a": [\n    0,\n    1\n  ],\n  "b": 1.5\n}\n'
