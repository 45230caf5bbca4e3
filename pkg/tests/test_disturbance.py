import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfrf import (
    ArrayGeometry,
    DomainError,
    GeneralCovariance,
    NumericalError,
    StructuredCovariance,
    quadratic_form_matrix,
    receive_sinr,
    rx_steering,
    spatial_covariance,
    sqrt_operator,
    tx_steering,
)
from mfrf.disturbance import MAX_DENSE_DIM
from mfrf.linalg import DenseOperator, KronOperator


class TestSpatialCovariance:
    def test_white_noise_identity(self):
        np.testing.assert_allclose(spatial_covariance(StructuredCovariance(), ArrayGeometry(3, 5)), np.eye(5))

    def test_single_broadside_jammer(self):
        r = spatial_covariance(StructuredCovariance(1.0, ((0.0, 3.0),)), ArrayGeometry(2, 2))
        np.testing.assert_allclose(r, [[4, 3], [3, 4]])

    def test_three_jammers_spectrum(self):
        model = StructuredCovariance(1.0, ((-40.0, 100.0), (5.0, 50.0), (45.0, 200.0)))
        w = np.linalg.eigvalsh(spatial_covariance(model, ArrayGeometry(12, 12)))
        np.testing.assert_allclose(w[:9], 1.0, atol=1e-9)
        assert np.all(w[9:] > 10.0)

    def test_validation(self):
        with pytest.raises(DomainError):
            StructuredCovariance(0.0)
        with pytest.raises(DomainError):
            StructuredCovariance(1.0, ((10.0, -1.0),))
        with pytest.raises(DomainError):
            GeneralCovariance(np.array([[1, 1j], [1j, 1]]))


class TestReceiveSinr:
    def test_white_noise(self):
        geom = ArrayGeometry(12, 12)
        assert receive_sinr(StructuredCovariance(1.0), geom, 0.0) == pytest.approx(12.0)
        assert receive_sinr(StructuredCovariance(2.0), geom, 0.0) == pytest.approx(6.0)

    def test_dense_inverse_oracle(self):
        geom = ArrayGeometry(12, 12)
        model = StructuredCovariance(1.0, ((40.0, 1.0),))
        b = rx_steering(geom, 0.0)
        r = np.eye(12) + np.outer(rx_steering(geom, 40.0), rx_steering(geom, 40.0).conj())
        expected = np.real(b.conj() @ np.linalg.inv(r) @ b)
        assert receive_sinr(model, geom, 0.0) == pytest.approx(expected, rel=1e-12)

    def test_mainbeam_jammer_monotone(self):
        geom = ArrayGeometry(6, 6)
        powers = np.logspace(-2, 6, 40)
        values = [receive_sinr(StructuredCovariance(1.0, ((0.0, p),)), geom, 0.0) for p in powers]
        assert np.all(np.diff(values) < 0)
        assert values[-1] < 1e-4

    @settings(max_examples=30)
    @given(
        sigma=st.floats(0.1, 10.0), p=st.floats(0.01, 1e3), scale=st.floats(1.01, 10.0),
        theta=st.floats(-80, 80), n=st.integers(1, 10),
    )
    def test_nonincreasing_in_powers(self, sigma, p, scale, theta, n):
        geom = ArrayGeometry(4, n)
        base = receive_sinr(StructuredCovariance(sigma, ((theta, p),)), geom, 5.0)
        more_jam = receive_sinr(StructuredCovariance(sigma, ((theta, p * scale),)), geom, 5.0)
        more_noise = receive_sinr(StructuredCovariance(sigma * scale, ((theta, p),)), geom, 5.0)
        assert more_jam <= base * (1 + 1e-12)
        assert more_noise <= base * (1 + 1e-12)


class TestQuadraticForm:
    def test_white_noise_structure(self):
        geom = ArrayGeometry(12, 12)
        m = quadratic_form_matrix(StructuredCovariance(1.0, (), 4), geom, 0.0, 4)
        assert isinstance(m, KronOperator)
        a = tx_steering(geom, 0.0)
        np.testing.assert_allclose(m.block, 12 * np.outer(a, a.conj()), atol=1e-12)
        assert m.lambda_max() == pytest.approx(144.0)

    def test_structured_matches_general(self):
        geom = ArrayGeometry(3, 2)
        model = StructuredCovariance(0.7, ((30.0, 5.0),), 2)
        m_s = quadratic_form_matrix(model, geom, -10.0, 2).to_dense()
        m_g = quadratic_form_matrix(model.materialize(geom), geom, -10.0, 2).to_dense()
        assert np.abs(m_s - m_g).max() <= 1e-12 * np.abs(m_g).max()

    @settings(max_examples=30)
    @given(
        n_tx=st.integers(1, 5), n_rx=st.integers(1, 6), length=st.integers(1, 6),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_paths_agree_property(self, n_tx, n_rx, length, seed):
        if length * n_rx > 64:
            return
        r = np.random.default_rng(seed)
        geom = ArrayGeometry(n_tx, n_rx)
        jam = tuple((float(r.uniform(-80, 80)), float(10 ** r.uniform(-1, 2))) for _ in range(r.integers(0, 3)))
        model = StructuredCovariance(float(r.uniform(0.3, 3.0)), jam, length)
        theta = float(r.uniform(-60, 60))
        m_s = quadratic_form_matrix(model, geom, theta, length).to_dense()
        m_g = quadratic_form_matrix(model.materialize(geom), geom, theta, length).to_dense()
        assert np.abs(m_s - m_g).max() <= 1e-10 * np.abs(m_g).max()
        np.testing.assert_array_equal(m_g, m_g.conj().T)
        assert np.linalg.eigvalsh(m_g).min() >= -1e-10 * np.abs(m_g).max()

    def test_general_dense_limit(self):
        geom = ArrayGeometry(33, 1)
        cov = GeneralCovariance(np.eye(32))
        assert 32 * 33 > MAX_DENSE_DIM
        with pytest.raises(DomainError):
            quadratic_form_matrix(cov, geom, 0.0, 32)

    def test_general_not_positive_definite(self):
        geom = ArrayGeometry(2, 2)
        with pytest.raises(NumericalError, match="condition number"):
            quadratic_form_matrix(GeneralCovariance(np.diag([1.0, -1.0])), geom, 0.0, 1)

    def test_code_length_mismatch(self):
        with pytest.raises(DomainError):
            quadratic_form_matrix(StructuredCovariance(1.0, (), 3), ArrayGeometry(2, 2), 0.0, 4)


class TestSqrtOperator:
    def test_identity(self):
        np.testing.assert_allclose(sqrt_operator(np.eye(4)).to_dense(), np.eye(4), atol=1e-14)

    def test_structured_square(self):
        geom = ArrayGeometry(4, 3)
        m = quadratic_form_matrix(StructuredCovariance(1.0, ((25.0, 10.0),), 3), geom, 0.0, 3)
        root = sqrt_operator(m)
        assert isinstance(root, KronOperator)
        dense = m.to_dense()
        r = root.to_dense()
        assert np.abs(r @ r - dense).max() <= 1e-10 * np.abs(dense).max()

    def test_rank_one(self):
        a = tx_steering(ArrayGeometry(5, 5), 17.0)
        m = np.outer(a, a.conj())
        np.testing.assert_allclose(sqrt_operator(m).to_dense(), m / np.sqrt(5), atol=1e-12)

    def test_rejects_indefinite(self):
        with pytest.raises(NumericalError):
            sqrt_operator(DenseOperator(np.diag([1.0, -0.5])))
