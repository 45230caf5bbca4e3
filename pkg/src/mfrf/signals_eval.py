"""Desired-signal generation and performance metrics.

Covers PSK / noise-like desired signals, Neyman-Pearson detection probability,
communication SINR and sum rate, jamming power bounds, Monte Carlo symbol error
rates and a normality check for noise-like emissions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import special, stats

from .array_model import tx_steering
from .energy_solver import Scenario
from .errors import DomainError

#: Trials drawn per RNG substream in :func:`ser_monte_carlo`.
SER_CHUNK = 256


@dataclass(frozen=True)
class DesiredSignalSpec:
    """Recipe for a desired signal.

    ``kind`` is ``"psk"`` (symbols ``amplitude * exp(2j pi k / order)``) or
    ``"noise"`` (i.i.d. circular Gaussian with the given variance).
    """

    kind: str
    length: int
    seed: object = None
    order: int = 8
    amplitude: float = 1.0
    variance: float = 1.0

    def __post_init__(self):
        if self.kind not in ("psk", "noise"):
            raise DomainError(f"unknown signal kind {self.kind!r}")
        if self.length < 1:
            raise DomainError("signal length must be >= 1")
        if self.kind == "psk" and (int(self.order) != self.order or self.order < 2):
            raise DomainError(f"PSK order must be an integer >= 2, got {self.order!r}")
        if self.kind == "psk" and not self.amplitude > 0:
            raise DomainError("PSK amplitude must be positive")
        if self.kind == "noise" and not self.variance > 0:
            raise DomainError("noise variance must be positive")

    @classmethod
    def psk(cls, order, length, amplitude=1.0, seed=None):
        return cls("psk", length, seed, order=order, amplitude=amplitude)

    @classmethod
    def noise_like(cls, length, variance=1.0, seed=None):
        return cls("noise", length, seed, variance=variance)


def psk_constellation(order: int, amplitude: float = 1.0) -> np.ndarray:
    return amplitude * np.exp(2j * np.pi * np.arange(order) / order)


def generate_desired(spec: DesiredSignalSpec) -> np.ndarray:
    """Draw the signal described by ``spec``; identical seeds give identical output."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "psk":
        k = rng.integers(0, spec.order, size=spec.length)
        return psk_constellation(spec.order, spec.amplitude)[k]
    scale = np.sqrt(spec.variance / 2.0)
    return scale * (rng.standard_normal(spec.length) + 1j * rng.standard_normal(spec.length))


@dataclass(frozen=True)
class DetectionSpec:
    p_fa: float
    sinr: float

    def __post_init__(self):
        if not 0 < self.p_fa < 1:
            raise DomainError(f"false-alarm probability must lie in (0, 1), got {self.p_fa!r}")
        if not self.sinr >= 0:
            raise DomainError(f"SINR must be non-negative, got {self.sinr!r}")

    @property
    def p_d(self) -> float:
        return float(detection_probability(self.p_fa, self.sinr))


def detection_probability(p_fa, sinr):
    """``P_D = erfc(erfcinv(2 P_FA) - sqrt(SINR)) / 2`` for a known target amplitude.

    Vectorized over both arguments; ``sinr`` is linear.
    """
    p_fa = np.asarray(p_fa, dtype=float)
    sinr = np.asarray(sinr, dtype=float)
    if np.any((p_fa <= 0) | (p_fa >= 1)):
        raise DomainError("false-alarm probability must lie in (0, 1)")
    if np.any(sinr < 0):
        raise DomainError("SINR must be non-negative")
    return 0.5 * special.erfc(special.erfcinv(2.0 * p_fa) - np.sqrt(sinr))


def _emitted(scn: Scenario, waveform, index):
    return tx_steering(scn.geom, scn.dirs.angles[index]).conj() @ np.asarray(waveform)


def comm_sinr(scn: Scenario, waveform, n: int, noise_power: float) -> float:
    """SINR of communication receiver ``n`` (0-based).

    Multiuser interference is the per-slot mean squared mismatch between the
    emitted and desired signals over the block.
    """
    if not 0 <= n < scn.dirs.n_comm:
        raise DomainError(f"receiver index {n} out of range for {scn.dirs.n_comm} receivers")
    if not noise_power > 0:
        raise DomainError("noise power must be positive")
    d = scn.desired[n]
    mismatch = np.mean(np.abs(_emitted(scn, waveform, n) - d) ** 2)
    return float(np.mean(np.abs(d) ** 2) / (mismatch + noise_power))


def sum_rate(chis: Sequence[float]) -> float:
    """Achievable sum rate in bits per channel use."""
    return float(np.sum(np.log2(1.0 + np.asarray(chis, dtype=float))))


def sum_rate_lower_bound(csnr: float, eps: Sequence[float], code_length: int, noise_power: float = 1.0) -> float:
    """Rate guaranteed when every receiver's squared matching error is within ``eps``.

    The per-slot interference is at most ``eps / L``, which is compared with
    the receiver noise power.
    """
    eps = np.asarray(eps, dtype=float)
    return float(np.sum(np.log2(1.0 + csnr / (1.0 + eps / (code_length * noise_power)))))


class JammingPower(NamedTuple):
    power: float
    lower: float
    upper: float
    eps: float
    bound_valid: bool


def jamming_power(scn: Scenario, waveform, m: int, eps: Optional[float] = None) -> JammingPower:
    """Energy emitted toward hostile target ``m`` (0-based among jamming directions).

    The bounds ``(||d|| -/+ sqrt(eps))^2`` follow from the triangle inequality.
    With ``eps=None`` the achieved squared mismatch is used. ``bound_valid`` is
    False when ``eps >= ||d||^2``, where the lower bound degenerates.
    """
    if not 0 <= m < scn.dirs.n_jam:
        raise DomainError(f"jamming index {m} out of range for {scn.dirs.n_jam} targets")
    index = scn.dirs.n_comm + m
    y = _emitted(scn, waveform, index)
    d = scn.desired[index]
    if eps is None:
        eps = float(np.sum(np.abs(y - d) ** 2))
    d_norm = float(np.linalg.norm(d))
    root = np.sqrt(eps)
    lower = max(d_norm - root, 0.0) ** 2
    return JammingPower(
        power=float(np.sum(np.abs(y) ** 2)),
        lower=float(lower),
        upper=float((d_norm + root) ** 2),
        eps=float(eps),
        bound_valid=eps < d_norm**2,
    )


class SerPoint(NamedTuple):
    snr_db: float
    ser: float
    errors: int
    symbols: int

    @property
    def stderr(self) -> float:
        """Binomial standard error of the SER estimate."""
        return float(np.sqrt(max(self.ser * (1.0 - self.ser), 0.0) / self.symbols))


def nearest_symbols(x, constellation) -> np.ndarray:
    """Index of the closest constellation point for every sample."""
    c = np.asarray(constellation)
    return np.argmin(np.abs(np.asarray(x)[..., None] - c), axis=-1)


def ser_monte_carlo(
    tx_signal,
    constellation,
    snr_grid_db: Sequence[float],
    trials: int,
    seed=0,
    jam_signal=None,
    jnr_db: Optional[float] = None,
    reference=None,
) -> List[SerPoint]:
    """Symbol error rate of ``tx_signal`` through AWGN (plus optional jamming).

    SNR is the mean constellation power over the noise power. The optional jam
    waveform is scaled to ``jnr_db`` above the noise and added unchanged in
    every trial. Errors are counted against ``reference`` symbol indices, which
    default to the noise-free hard decisions of ``tx_signal``.

    Trials are drawn in chunks of :data:`SER_CHUNK`, each from its own substream
    keyed by ``(seed, grid point, chunk)``, so raising ``trials`` never changes
    the earlier trials.
    """
    x = np.asarray(tx_signal, dtype=complex)
    c = np.asarray(constellation, dtype=complex)
    if x.size == 0:
        raise DomainError("transmitted signal is empty")
    if c.size < 2:
        raise DomainError("constellation needs at least two points")
    if trials < 1:
        raise DomainError("trials must be >= 1")
    ref = nearest_symbols(x, c) if reference is None else np.asarray(reference)
    signal_power = float(np.mean(np.abs(c) ** 2))

    jam = None
    if jam_signal is not None:
        if jnr_db is None:
            raise DomainError("jnr_db is required with a jam signal")
        jam = np.asarray(jam_signal, dtype=complex)
        if jam.shape != x.shape:
            raise DomainError("jam signal must match the transmitted signal length")

    if int(seed) != seed or seed < 0:
        raise DomainError(f"seed must be a non-negative integer, got {seed!r}")
    out = []
    for point, snr_db in enumerate(snr_grid_db):
        noise_var = signal_power / 10 ** (snr_db / 10)
        rx_clean = x
        if jam is not None:
            jam_power = noise_var * 10 ** (jnr_db / 10)
            rx_clean = x + jam * np.sqrt(jam_power / np.mean(np.abs(jam) ** 2))
        errors = 0
        done = 0
        chunk = 0
        while done < trials:
            rng = np.random.default_rng([int(seed), point, chunk])
            noise = rng.standard_normal((SER_CHUNK, x.size, 2))
            take = min(SER_CHUNK, trials - done)
            n = np.sqrt(noise_var / 2) * (noise[:take, :, 0] + 1j * noise[:take, :, 1])
            errors += int(np.count_nonzero(nearest_symbols(rx_clean + n, c) != ref))
            done += take
            chunk += 1
        symbols = trials * x.size
        out.append(SerPoint(float(snr_db), errors / symbols, errors, symbols))
    return out


def psk_ser_approx(order: int, snr):
    """High-SNR approximation ``erfc(sqrt(SNR) sin(pi/M))`` of M-PSK symbol error rate."""
    return special.erfc(np.sqrt(np.asarray(snr, dtype=float)) * np.sin(np.pi / order))


class PartNormality(NamedTuple):
    skewness: float
    excess_kurtosis: float
    qq_max_deviation: float
    theoretical: np.ndarray
    sample: np.ndarray


class NormalityReport(NamedTuple):
    real: PartNormality
    imag: PartNormality
    passed: bool


def _part_normality(x):
    n = x.size
    z = np.sort((x - x.mean()) / x.std())
    probs = (np.arange(1, n + 1) - 0.375) / (n + 0.25)
    theoretical = stats.norm.ppf(probs)
    # Deviation measured on the probability scale so the tails do not dominate.
    dev = float(np.max(np.abs(stats.norm.cdf(z) - probs)))
    return PartNormality(
        skewness=float(stats.skew(x)),
        excess_kurtosis=float(stats.kurtosis(x, fisher=True)),
        qq_max_deviation=dev,
        theoretical=theoretical,
        sample=z,
    )


def normality_check(signal) -> NormalityReport:
    """Check real and imaginary parts of ``signal`` for Gaussianity.

    A part passes when its absolute excess kurtosis is below 1 and its Q-Q
    deviation (on the probability scale) is below ``4 / sqrt(n)``.
    """
    x = np.asarray(signal, dtype=complex)
    if x.size < 32:
        raise DomainError("normality check needs at least 32 samples")
    parts = [_part_normality(np.real(x)), _part_normality(np.imag(x))]
    gate = 4.0 / np.sqrt(x.size)
    passed = all(abs(p.excess_kurtosis) < 1.0 and p.qq_max_deviation < gate for p in parts)
    return NormalityReport(real=parts[0], imag=parts[1], passed=passed)
