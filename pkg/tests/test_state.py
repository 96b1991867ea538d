import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from spinwigner.angular import HalfInt, half
from spinwigner.state import (DensityMatrix, DephasingModel, MultipoleDecomposition, bloch_inversion,
                              bloch_vector, dephase_qubit, expectation, matrix_purity, maximally_mixed,
                              multipole_to_rho, pure_qubit, random_density_matrix, rho_to_multipole,
                              rotation_unitaries, rotation_unitary, spin_coherent, spin_operators,
                              uhlmann_fidelity)

SPINS = [half(t) for t in range(1, 6)]
Y_STATE = (math.pi / 2, math.pi / 2)


class TestDensityMatrix:
    def test_validation(self):
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(half(1), [[0.5, 0.1], [0.2, 0.5]])
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(half(1), np.eye(2))
        with pytest.raises(ValueError, match="positive"):
            DensityMatrix(half(1), [[1.2, 0], [0, -0.2]])
        with pytest.raises(ValueError, match="2x2"):
            DensityMatrix(half(1), np.eye(3) / 3)

    def test_unphysical_allowed_when_unchecked(self):
        rho = DensityMatrix(half(1), [[1.2, 0], [0, -0.2]], check_psd=False)
        assert rho.dim == 2

    def test_immutable(self):
        rho = maximally_mixed(1)
        with pytest.raises(ValueError):
            rho.entries[0, 0] = 1.0

    def test_json_round_trip(self, rng):
        rho = random_density_matrix(half(3), rng)
        back = DensityMatrix.from_json(rho.to_json())
        np.testing.assert_array_equal(back.entries, rho.entries)
        assert back.j == rho.j

    def test_json_malformed(self):
        with pytest.raises(ValueError, match="malformed"):
            DensityMatrix.from_json({"re": [[1]]})


class TestSpinOperators:
    @pytest.mark.parametrize("j", SPINS)
    def test_commutators_and_casimir(self, j):
        jx, jy, jz = spin_operators(j)
        np.testing.assert_allclose(jx @ jy - jy @ jx, 1j * jz, atol=1e-13)
        casimir = jx @ jx + jy @ jy + jz @ jz
        jj = float(j)
        np.testing.assert_allclose(casimir, jj * (jj + 1) * np.eye(jz.shape[0]), atol=1e-13)
        np.testing.assert_allclose(np.diag(jz), np.arange(jj, -jj - 1, -1), atol=0)


class TestRotations:
    @given(st.sampled_from(SPINS), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
    @settings(max_examples=60, deadline=None)
    def test_matches_matrix_exponential(self, j, theta, phi):
        jx, jy, _ = spin_operators(j)
        ref = expm(-1j * theta * (math.cos(phi) * jx + math.sin(phi) * jy))
        np.testing.assert_allclose(rotation_unitaries(j, theta, phi)[0], ref, atol=1e-12)

    def test_batched_shape_and_unitarity(self):
        u = rotation_unitaries(half(3), np.linspace(0, 3, 7), np.linspace(0, 6, 7))
        assert u.shape == (7, 4, 4)
        for m in u:
            np.testing.assert_allclose(m @ m.conj().T, np.eye(4), atol=1e-13)

    def test_qubit_form(self):
        u = np.asarray(rotation_unitary(half(1), math.pi, 0.0))
        np.testing.assert_allclose(u, -1j * np.array([[0, 1], [1, 0]]), atol=1e-15)


class TestStates:
    def test_pure_qubit_bloch(self):
        np.testing.assert_allclose(bloch_vector(pure_qubit(*Y_STATE)), [0, 1, 0], atol=1e-15)
        eps, eta = 1.1, 2.3
        n = [math.sin(eps) * math.cos(eta), math.sin(eps) * math.sin(eta), math.cos(eps)]
        np.testing.assert_allclose(bloch_vector(pure_qubit(eps, eta)), n, atol=1e-15)

    @pytest.mark.parametrize("j", SPINS)
    def test_spin_coherent_points_along_direction(self, j):
        eps, eta = 0.9, 4.0
        rho = spin_coherent(j, eps, eta)
        n = np.array([math.sin(eps) * math.cos(eta), math.sin(eps) * math.sin(eta), math.cos(eps)])
        mean = np.array([expectation(rho, op) for op in spin_operators(j)])
        np.testing.assert_allclose(mean, float(j) * n, atol=1e-12)
        assert matrix_purity(rho) == pytest.approx(1.0, abs=1e-13)

    def test_spin_coherent_qubit_equals_pure_qubit(self):
        np.testing.assert_allclose(spin_coherent(half(1), 0.4, 1.7).entries, pure_qubit(0.4, 1.7).entries,
                                   atol=1e-14)

    @given(st.sampled_from(SPINS), st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_random_state_valid(self, j, seed):
        rho = random_density_matrix(j, np.random.default_rng(seed))
        assert 1 / rho.dim - 1e-12 <= matrix_purity(rho) <= 1 + 1e-12

    def test_rank_one_is_pure(self, rng):
        assert matrix_purity(random_density_matrix(2, rng, rank=1)) == pytest.approx(1.0, abs=1e-12)


class TestMultipoles:
    @given(st.sampled_from(SPINS), st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_round_trip(self, j, seed):
        rho = random_density_matrix(j, np.random.default_rng(seed))
        d = rho_to_multipole(rho)
        assert d.is_hermitian()
        np.testing.assert_allclose(multipole_to_rho(d).entries, rho.entries, atol=1e-13)
        # Parseval: purity is the squared coefficient norm
        assert d.block_norms().sum() == pytest.approx(matrix_purity(rho), abs=1e-13)

    @pytest.mark.parametrize("j", SPINS)
    def test_only_monopole_is_mixed(self, j):
        n = (j.twice_value + 1) ** 2
        c = np.zeros(n)
        c[0] = 1 / math.sqrt(j.twice_value + 1)
        np.testing.assert_allclose(multipole_to_rho(MultipoleDecomposition(j, c)).entries,
                                   maximally_mixed(j).entries, atol=1e-15)

    def test_qubit_dipole_gives_z_state(self):
        z = 0.6
        c = np.array([1 / math.sqrt(2), 0, z / math.sqrt(2), 0])
        rho = multipole_to_rho(MultipoleDecomposition(half(1), c))
        np.testing.assert_allclose(rho.entries, np.diag([(1 + z) / 2, (1 - z) / 2]), atol=1e-15)

    def test_non_hermitian_pattern_rejected(self):
        c = np.array([1 / math.sqrt(2), 0.3, 0, 0.3])
        with pytest.raises(ValueError, match="Hermitian"):
            multipole_to_rho(MultipoleDecomposition(half(1), c))

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            MultipoleDecomposition(half(1), np.zeros(3))


class TestDephasing:
    def test_coherence_decay(self):
        model = DephasingModel(2.64)
        rho = dephase_qubit(pure_qubit(*Y_STATE), 2.64, model)
        assert abs(rho.entries[0, 1]) == pytest.approx(0.5 * math.exp(-1), abs=1e-15)
        np.testing.assert_allclose(np.diag(rho.entries).real, [0.5, 0.5], atol=1e-15)
        assert matrix_purity(rho) == pytest.approx(0.5 + 0.5 * math.exp(-2), abs=1e-12)

    def test_zero_delay_identity(self):
        rho = pure_qubit(1.0, 0.3)
        np.testing.assert_array_equal(dephase_qubit(rho, 0.0, DephasingModel()).entries, rho.entries)

    def test_errors(self):
        with pytest.raises(ValueError):
            DephasingModel(0.0)
        with pytest.raises(ValueError):
            dephase_qubit(maximally_mixed(1), 1.0, DephasingModel())
        with pytest.raises(ValueError):
            dephase_qubit(pure_qubit(0, 0), -1.0, DephasingModel())


class TestFidelityPurity:
    def test_purity_values(self):
        assert matrix_purity(pure_qubit(0.3, 0.2)) == pytest.approx(1.0)
        assert matrix_purity(maximally_mixed(half(1))) == pytest.approx(0.5)

    def test_uhlmann_pure_reference(self, rng):
        psi = pure_qubit(*Y_STATE)
        rho = random_density_matrix(half(1), rng)
        expected = float(np.trace(psi.entries @ rho.entries).real)
        assert uhlmann_fidelity(psi, rho) == pytest.approx(expected, abs=1e-10)

    def test_uhlmann_symmetric_and_bounded(self, rng):
        a = random_density_matrix(half(3), rng)
        b = random_density_matrix(half(3), rng)
        f = uhlmann_fidelity(a, b)
        assert 0 <= f <= 1
        assert uhlmann_fidelity(b, a) == pytest.approx(f, abs=1e-10)
        assert uhlmann_fidelity(a, a) == pytest.approx(1.0, abs=1e-10)

    def test_dephased_fidelity(self):
        psi = pure_qubit(*Y_STATE)
        rho = dephase_qubit(psi, 2.64, DephasingModel(2.64))
        assert uhlmann_fidelity(psi, rho) == pytest.approx(0.5 + 0.5 * math.exp(-1), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            uhlmann_fidelity(maximally_mixed(half(1)), maximally_mixed(1))


class TestBlochInversion:
    def test_physical(self):
        rho = bloch_inversion(0.0, 1.0, 0.0)
        np.testing.assert_allclose(rho.entries, pure_qubit(*Y_STATE).entries, atol=1e-15)

    def test_overlong_vector_kept_or_projected(self):
        raw = bloch_inversion(0.0, 1.1, 0.2)
        assert np.linalg.eigvalsh(raw.entries).min() < 0
        proj = bloch_inversion(0.0, 1.1, 0.2, project=True)
        w = np.linalg.eigvalsh(proj.entries)
        assert w.min() >= -1e-15 and w.sum() == pytest.approx(1.0)


def test_measured_y_state_bloch_vector():
    from spinwigner.state import MEASURED_Y_STATE, bloch_inversion
    m = MEASURED_Y_STATE
    h = 0.5 * (m + m.conj().T)
    s = np.array([2 * h[1, 0].real, 2 * h[1, 0].imag, (h[0, 0] - h[1, 1]).real])
    assert np.allclose(s, [-0.052, 1.034, -0.036], atol=1e-12)
    rho = bloch_inversion(*s)
    assert np.allclose(rho.entries, h, atol=1e-12)
    # unphysical as measured: Bloch length above 1 gives a negative eigenvalue
    assert np.linalg.norm(s) > 1
    assert np.min(np.linalg.eigvalsh(h)) < 0
