import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfrf import (
    DesiredSignalSpec,
    DetectionSpec,
    DomainError,
    Scenario,
    comm_sinr,
    detection_probability,
    generate_desired,
    jamming_power,
    normality_check,
    solve_structured,
    sum_rate,
    sum_rate_lower_bound,
    tx_steering,
)
from mfrf.signals_eval import psk_constellation, psk_ser_approx, ser_monte_carlo

from oracles import np_detector_pd, psk_ser_exact
from scenarios import CODE_LENGTH, white_noise


@pytest.fixture(scope="module")
def base_design(base_scn):
    return solve_structured(base_scn, white_noise()).waveform


class TestGenerateDesired:
    def test_psk_energy(self):
        d = generate_desired(DesiredSignalSpec.psk(8, 128, seed=3))
        assert np.sum(np.abs(d) ** 2) == pytest.approx(128.0, rel=1e-12)
        np.testing.assert_allclose(np.abs(d), 1.0)

    def test_psk_symbols_on_grid(self):
        d = generate_desired(DesiredSignalSpec.psk(8, 256, amplitude=2.0, seed=1))
        dist = np.abs(d[:, None] - psk_constellation(8, 2.0)[None, :]).min(axis=1)
        np.testing.assert_allclose(dist, 0.0, atol=1e-12)

    def test_bpsk_reproducible(self):
        first = generate_desired(DesiredSignalSpec.psk(2, 64, seed=42))
        np.testing.assert_array_equal(first, generate_desired(DesiredSignalSpec.psk(2, 64, seed=42)))
        np.testing.assert_allclose(first.imag, 0.0, atol=1e-12)
        assert set(np.round(first.real).astype(int)) <= {-1, 1}

    def test_noise_energy_moments(self):
        energies = np.array([
            np.sum(np.abs(generate_desired(DesiredSignalSpec.noise_like(128, seed=s))) ** 2) for s in range(200)
        ])
        # ||d||^2 is Gamma(128, 1): mean 128, standard deviation sqrt(128).
        assert abs(energies.mean() - 128.0) <= 3 * np.sqrt(128.0 / energies.size)
        assert np.all(np.abs(energies - 128.0) <= 6 * np.sqrt(128.0))

    def test_noise_variance(self):
        d = generate_desired(DesiredSignalSpec.noise_like(200_000, variance=2.5, seed=0))
        assert np.mean(np.abs(d) ** 2) == pytest.approx(2.5, rel=0.02)
        assert abs(np.mean(d.real * d.imag)) < 0.02
        assert np.var(d.real) == pytest.approx(np.var(d.imag), rel=0.02)

    def test_invalid(self):
        with pytest.raises(DomainError):
            DesiredSignalSpec.psk(1, 8)
        with pytest.raises(DomainError):
            DesiredSignalSpec.noise_like(8, variance=0.0)
        with pytest.raises(DomainError):
            DesiredSignalSpec("qam", 8)


class TestDetection:
    @pytest.mark.parametrize("p_fa", [1e-6, 1e-3, 0.1, 0.5])
    def test_zero_sinr(self, p_fa):
        assert detection_probability(p_fa, 0.0) == pytest.approx(p_fa, rel=1e-12)

    def test_half_false_alarm(self):
        sinr = np.array([0.5, 2.0, 10.0])
        from scipy import special

        np.testing.assert_allclose(detection_probability(0.5, sinr), 0.5 * special.erfc(-np.sqrt(sinr)), rtol=1e-14)
        assert detection_probability(0.5, 1e4) == pytest.approx(1.0)

    def test_strictly_increasing(self):
        sinr = np.linspace(0.0, 20.0, 4001)
        for p_fa in (1e-4, 1e-2, 0.3):
            assert np.all(np.diff(detection_probability(p_fa, sinr)) > 0)

    def test_monte_carlo(self):
        rng = np.random.default_rng(11)
        sinr = 10.0
        trials = 1_000_000
        pd = detection_probability(1e-2, sinr)
        mc = np_detector_pd(1e-2, sinr, trials, rng)
        assert abs(mc - pd) <= 3 * np.sqrt(pd * (1 - pd) / trials)

    def test_spec_type(self):
        assert DetectionSpec(1e-2, 10.0).p_d == pytest.approx(detection_probability(1e-2, 10.0))
        with pytest.raises(DomainError):
            DetectionSpec(0.0, 1.0)
        with pytest.raises(DomainError):
            detection_probability(1.0, 1.0)
        with pytest.raises(DomainError):
            detection_probability(0.1, -1.0)

    @given(p_fa=st.floats(1e-8, 0.5), a=st.floats(0, 50), b=st.floats(0, 50))
    def test_monotone_property(self, p_fa, a, b):
        lo, hi = sorted((a, b))
        assert detection_probability(p_fa, lo) <= detection_probability(p_fa, hi) + 1e-15


class TestCommunication:
    def test_perfect_match_is_csnr(self, base_scn, base_design):
        chi = comm_sinr(base_scn, base_design, 0, 0.5)
        assert chi == pytest.approx(1.0 / 0.5, rel=1e-10)

    def test_admm_lower_bound(self, base_scn, base_admm):
        for noise in (0.1, 1.0, 3.0):
            chi = comm_sinr(base_scn, base_admm["s"], 0, noise)
            csnr = 1.0 / noise
            assert chi >= csnr / (1 + 1e-3 * 1.001 / (CODE_LENGTH * noise))
            assert sum_rate([chi]) >= sum_rate_lower_bound(csnr, [1e-3 * 1.001], CODE_LENGTH, noise)

    def test_sum_rate_two_receivers(self, rng):
        from mfrf import ArrayGeometry, DirectionSet

        geom = ArrayGeometry(8, 8)
        d = np.stack([generate_desired(DesiredSignalSpec.psk(8, 64, seed=k)) for k in range(2)])
        scn = Scenario(geom, 0.0, DirectionSet((-30.0, 35.0), n_comm=2), d, 100.0)
        s = solve_structured(scn, white_noise(64)).waveform + 0.05 * (
            rng.standard_normal((8, 64)) + 1j * rng.standard_normal((8, 64))
        )
        chis = []
        for k, theta in enumerate((-30.0, 35.0)):
            mse = np.mean(np.abs(tx_steering(geom, theta).conj() @ s - d[k]) ** 2)
            chis.append(1.0 / (mse + 0.2))
            assert comm_sinr(scn, s, k, 0.2) == pytest.approx(chis[-1], rel=1e-12)
        assert sum_rate(chis) == pytest.approx(np.log2(1 + chis[0]) + np.log2(1 + chis[1]), rel=1e-12)

    def test_receiver_index(self, base_scn, base_design):
        with pytest.raises(DomainError):
            comm_sinr(base_scn, base_design, 1, 1.0)


class TestJamming:
    def test_perfect_match(self, base_scn, base_design):
        jp = jamming_power(base_scn, base_design, 0)
        energy = np.sum(np.abs(base_scn.desired[1]) ** 2)
        assert jp.power == pytest.approx(energy, rel=1e-10)
        assert jp.upper - jp.lower <= 1e-4 * energy

    def test_admm_within_bounds(self, base_scn, base_admm):
        jp = jamming_power(base_scn, base_admm["s"], 0, eps=0.2 * 1.001)
        assert jp.bound_valid
        assert jp.lower <= jp.power <= jp.upper

    def test_degenerate_bound(self, base_scn, base_design):
        energy = float(np.sum(np.abs(base_scn.desired[1]) ** 2))
        jp = jamming_power(base_scn, base_design, 0, eps=energy)
        assert jp.lower == 0.0
        assert not jp.bound_valid

    def test_index(self, base_scn, base_design):
        with pytest.raises(DomainError):
            jamming_power(base_scn, base_design, 1)


class TestSer:
    def test_matches_exact_psk(self):
        d = generate_desired(DesiredSignalSpec.psk(8, 128, seed=5))
        grid = [0.0, 4.0, 8.0, 12.0]
        for pt in ser_monte_carlo(d, psk_constellation(8), grid, 1000, seed=3):
            exact = psk_ser_exact(8, 10 ** (pt.snr_db / 10))
            assert pt.symbols >= 100_000
            assert abs(pt.ser - exact) <= 3 * np.sqrt(exact * (1 - exact) / pt.symbols)

    def test_high_snr(self):
        d = generate_desired(DesiredSignalSpec.psk(8, 128, seed=5))
        (pt,) = ser_monte_carlo(d, psk_constellation(8), [30.0], 200, seed=1)
        assert pt.ser < 1e-4
        assert psk_ser_approx(8, 1000.0) < 1e-4
        assert psk_ser_exact(8, 1000.0) == pytest.approx(psk_ser_approx(8, 1000.0), rel=0.05)

    def test_synthesized_matches_desired(self, base_scn, base_design):
        d = base_scn.desired[0]
        rx = tx_steering(base_scn.geom, -25.0).conj() @ base_design
        ref = np.argmin(np.abs(d[:, None] - psk_constellation(8)[None, :]), axis=1)
        grid = [0.0, 4.0, 8.0]
        a = ser_monte_carlo(d, psk_constellation(8), grid, 500, seed=9, reference=ref)
        b = ser_monte_carlo(rx, psk_constellation(8), grid, 500, seed=9, reference=ref)
        for pa, pb in zip(a, b):
            assert abs(pa.ser - pb.ser) <= 3 * np.hypot(pa.stderr, pb.stderr)

    def test_jamming_degrades(self):
        victim = generate_desired(DesiredSignalSpec.psk(8, 128, seed=2))
        jam = generate_desired(DesiredSignalSpec.noise_like(128, seed=4))
        grid = [0.0, 6.0, 12.0]
        clean = ser_monte_carlo(victim, psk_constellation(8), grid, 300, seed=1)
        jammed = ser_monte_carlo(victim, psk_constellation(8), grid, 300, seed=1, jam_signal=jam, jnr_db=0.0)
        assert all(j.ser > c.ser for j, c in zip(jammed, clean))

    def test_deterministic_and_prefix_stable(self):
        d = generate_desired(DesiredSignalSpec.psk(8, 16, seed=0))
        c = psk_constellation(8)
        first = ser_monte_carlo(d, c, [3.0], 512, seed=6)
        assert first == ser_monte_carlo(d, c, [3.0], 512, seed=6)
        half = ser_monte_carlo(d, c, [3.0], 256, seed=6)
        assert half[0].errors <= first[0].errors

    def test_invalid(self):
        c = psk_constellation(8)
        with pytest.raises(DomainError):
            ser_monte_carlo(np.array([]), c, [0.0], 10)
        with pytest.raises(DomainError):
            ser_monte_carlo(np.ones(4), c[:1], [0.0], 10)
        with pytest.raises(DomainError):
            ser_monte_carlo(np.ones(4), c, [0.0], 0)
        with pytest.raises(DomainError):
            ser_monte_carlo(np.ones(4), c, [0.0], 10, jam_signal=np.ones(4))


class TestNormality:
    def test_gaussian_passes(self):
        x = generate_desired(DesiredSignalSpec.noise_like(4096, seed=8))
        rep = normality_check(x)
        assert rep.passed
        assert rep.real.theoretical.shape == rep.real.sample.shape == (4096,)

    def test_psk_fails(self):
        rep = normality_check(generate_desired(DesiredSignalSpec.psk(8, 4096, seed=8)))
        assert not rep.passed
        assert rep.real.excess_kurtosis < -1.0

    def test_synthesized_jam_passes(self, base_scn, base_design):
        emitted = tx_steering(base_scn.geom, 20.0).conj() @ base_design
        assert normality_check(emitted).passed

    def test_too_short(self):
        with pytest.raises(DomainError):
            normality_check(np.ones(16))

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_gaussian_property(self, seed):
        x = generate_desired(DesiredSignalSpec.noise_like(2048, seed=seed))
        rep = normality_check(x)
        assert abs(rep.real.excess_kurtosis) < 1.0 and abs(rep.imag.excess_kurtosis) < 1.0
