import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ggpeps import fock
from ggpeps.gaussian import (
    InvalidCovarianceError,
    MajoranaCovariance,
    PairingMatrix,
    apply_phase_rotation,
    covariance_from_pairing,
    gaussian_map,
    log_overlap_det,
    majorana_indices,
    overlap_weight,
    vacuum_covariance,
)
from ggpeps.weight import vertex_pairing


def random_antisym(rng, n):
    a = rng.normal(size=(n, n))
    return a - a.T


def assert_pure(cov):
    g = cov.gamma
    assert np.abs(g + g.T).max() < 1e-12
    assert np.abs(g @ g + np.eye(len(g))).max() < 1e-10


class TestVacuum:
    def test_single_mode(self):
        np.testing.assert_array_equal(vacuum_covariance(1).gamma, [[0, 1], [-1, 0]])

    def test_product_of_blocks(self):
        g = vacuum_covariance(2).gamma
        block = np.array([[0, 1], [-1, 0]])
        np.testing.assert_array_equal(g[:2, :2], block)
        np.testing.assert_array_equal(g[2:, 2:], block)
        np.testing.assert_array_equal(g[:2, 2:], 0)

    def test_squares_to_minus_identity(self):
        g = vacuum_covariance(5).gamma
        np.testing.assert_array_equal(g @ g, -np.eye(10))

    def test_matches_oracle_convention(self):
        np.testing.assert_allclose(fock.FockVector.vacuum(3).covariance(), vacuum_covariance(3).gamma,
                                   atol=1e-15)

    def test_rejects_zero_modes(self):
        with pytest.raises(ValueError):
            vacuum_covariance(0)


class TestPairing:
    def test_zero_pairing_is_vacuum(self):
        np.testing.assert_allclose(covariance_from_pairing(PairingMatrix(np.zeros((4, 4)))).gamma,
                                   vacuum_covariance(4).gamma, atol=1e-15)

    def test_two_mode_against_explicit_state(self):
        t = 0.7
        cov = covariance_from_pairing(PairingMatrix([[0, t], [-t, 0]]))
        amps = np.zeros(4, dtype=complex)
        amps[0], amps[3] = 1, t
        explicit = fock.FockVector(2, amps / np.sqrt(1 + t * t))
        np.testing.assert_allclose(cov.gamma, explicit.covariance(), atol=1e-14)

    def test_vertex_pairing_against_oracle(self):
        t = vertex_pairing(1.0, 0.5).t
        cov = covariance_from_pairing(PairingMatrix(t))
        assert_pure(cov)
        np.testing.assert_allclose(cov.gamma, fock.pairing_state(t).covariance(), atol=1e-10)

    def test_rejects_symmetric(self):
        with pytest.raises(ValueError):
            PairingMatrix(np.ones((2, 2)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 7), st.integers(0, 2**32 - 1))
    def test_random_against_oracle(self, n, seed):
        t = random_antisym(np.random.default_rng(seed), n)
        cov = covariance_from_pairing(PairingMatrix(t))
        assert_pure(cov)
        assert np.abs(cov.gamma - fock.pairing_state(t).covariance()).max() < 1e-9


class TestPhaseRotation:
    def setup_method(self):
        self.rng = np.random.default_rng(11)
        self.t = random_antisym(self.rng, 3)
        self.cov = covariance_from_pairing(PairingMatrix(self.t))

    def test_zero_angles(self):
        np.testing.assert_array_equal(apply_phase_rotation(self.cov, [0, 1, 2], [0, 0, 0]).gamma,
                                      self.cov.gamma)

    def test_full_turn(self):
        out = apply_phase_rotation(self.cov, [1], [2 * np.pi]).gamma
        assert np.abs(out - self.cov.gamma).max() < 1e-12

    def test_against_oracle(self):
        angles = self.rng.uniform(-np.pi, np.pi, size=2)
        out = apply_phase_rotation(self.cov, [0, 2], angles).gamma
        ref = fock.pairing_state(self.t).phase_rotated([0, 2], angles).covariance()
        assert np.abs(out - ref).max() < 1e-10

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            apply_phase_rotation(self.cov, [3], [0.1])

    def test_duplicate_modes(self):
        with pytest.raises(ValueError):
            apply_phase_rotation(self.cov, [1, 1], [0.1, 0.2])

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-7, 7), st.floats(-7, 7), st.integers(0, 2))
    def test_composition(self, phi, psi, mode):
        one = apply_phase_rotation(apply_phase_rotation(self.cov, [mode], [phi]), [mode], [psi])
        both = apply_phase_rotation(self.cov, [mode], [phi + psi])
        assert np.abs(one.gamma - both.gamma).max() < 1e-12


class TestOverlap:
    def test_identical_states(self):
        cov = covariance_from_pairing(PairingMatrix(random_antisym(np.random.default_rng(2), 4)))
        assert overlap_weight(cov, cov) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_states(self):
        vac = vacuum_covariance(1)
        full = MajoranaCovariance(-vac.gamma)
        assert overlap_weight(vac, full) == pytest.approx(0.0, abs=1e-12)

    def test_against_oracle(self):
        rng = np.random.default_rng(5)
        ta, tb = random_antisym(rng, 3), random_antisym(rng, 3)
        a, b = fock.pairing_state(ta), fock.pairing_state(tb)
        got = overlap_weight(covariance_from_pairing(PairingMatrix(ta)), covariance_from_pairing(PairingMatrix(tb)))
        assert abs(got - fock.overlap_squared(a, b)) < 1e-10

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_symmetric(self, n, seed):
        rng = np.random.default_rng(seed)
        a = covariance_from_pairing(PairingMatrix(random_antisym(rng, n)))
        b = covariance_from_pairing(PairingMatrix(random_antisym(rng, n)))
        assert abs(overlap_weight(a, b) - overlap_weight(b, a)) < 1e-12

    def test_negative_determinant_raises(self):
        # antisymmetric inputs give a product of squared Pfaffians, so only corrupted input goes negative
        with pytest.raises(InvalidCovarianceError):
            log_overlap_det(np.diag([3.0, -1.0]), np.eye(2))

    def test_roundoff_negative_is_zero_overlap(self):
        assert log_overlap_det(np.diag([1.0 + 1e-10, -1.0]), np.eye(2)) == -np.inf

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            overlap_weight(vacuum_covariance(1), vacuum_covariance(2))


class TestGaussianMap:
    def test_decoupled(self):
        rng = np.random.default_rng(3)
        a = covariance_from_pairing(PairingMatrix(random_antisym(rng, 2))).gamma
        d = covariance_from_pairing(PairingMatrix(random_antisym(rng, 2))).gamma
        m = MajoranaCovariance(np.block([[a, np.zeros((4, 4))], [np.zeros((4, 4)), d]]))
        out = gaussian_map(m, 2, vacuum_covariance(2))
        np.testing.assert_allclose(out.gamma, a, atol=1e-14)

    def test_empty_virtual_sector(self):
        m = covariance_from_pairing(PairingMatrix(random_antisym(np.random.default_rng(4), 3)))
        empty = MajoranaCovariance(np.zeros((0, 0)))
        np.testing.assert_array_equal(gaussian_map(m, 3, empty).gamma, m.gamma)

    def test_against_projected_state(self):
        rng = np.random.default_rng(6)
        t, t_in = random_antisym(rng, 4), random_antisym(rng, 2)
        state, onto = fock.pairing_state(t), fock.pairing_state(t_in)
        out = gaussian_map(MajoranaCovariance(state.covariance()), 2, MajoranaCovariance(onto.covariance()))
        assert np.abs(out.gamma - fock.project(state, 2, onto).covariance()).max() < 1e-9
        assert_pure(out)

    def test_zero_norm_projection(self):
        # physical mode 0 paired with virtual mode 1 in |11>; projecting onto <1|... via full occupation
        vac = vacuum_covariance(2)
        with pytest.raises(InvalidCovarianceError):
            gaussian_map(vac, 1, MajoranaCovariance(-vacuum_covariance(1).gamma))


class TestFockOracle:
    def test_zero_pairing(self):
        amps = fock.pairing_state(np.zeros((3, 3))).amplitudes
        assert amps[0] == 1 and np.all(amps[1:] == 0)

    def test_single_pair(self):
        t = 0.3
        amps = fock.pairing_state(np.array([[0, t], [-t, 0]])).amplitudes
        np.testing.assert_allclose(amps, [1, 0, 0, t])

    def test_overlap_two_ways(self):
        rng = np.random.default_rng(8)
        a, b = fock.pairing_state(random_antisym(rng, 4)), fock.pairing_state(random_antisym(rng, 4))
        assert fock.overlap_squared(a, b) == pytest.approx(fock.overlap_squared_by_sum(a, b), abs=1e-14)

    def test_anticommutation(self):
        psi = fock.pairing_state(random_antisym(np.random.default_rng(9), 4)).amplitudes
        for i in range(4):
            for j in range(4):
                lhs = fock.create(fock.annihilate(psi, 4, j), 4, i) + fock.annihilate(fock.create(psi, 4, i), 4, j)
                np.testing.assert_allclose(lhs, psi * (i == j), atol=1e-14)

    def test_too_many_modes(self):
        with pytest.raises(ValueError):
            fock.FockVector.vacuum(fock.MAX_MODES + 1)


def test_permutation_is_index_conjugation():
    t = random_antisym(np.random.default_rng(12), 4)
    cov = covariance_from_pairing(PairingMatrix(t))
    order = [2, 0, 3, 1]
    perm = t[np.ix_(order, order)]
    np.testing.assert_allclose(cov.permuted(order).gamma, covariance_from_pairing(PairingMatrix(perm)).gamma,
                               atol=1e-13)
    assert list(majorana_indices([1, 3])) == [2, 3, 6, 7]
