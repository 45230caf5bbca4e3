"""Uniform linear array geometry, steering vectors and lifted operators.

Angles are given in degrees and measured from broadside. The steering phase of
element ``m`` (0-based) is ``exp(+1j * 2 * pi * spacing * m * sin(theta))`` so the
first element is the phase reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .linalg import KronOperator


@dataclass(frozen=True)
class ArrayGeometry:
    """Transmit/receive ULA pair.

    Args:
        n_tx: Number of transmit antennas.
        n_rx: Number of receive antennas.
        tx_spacing: Transmit element spacing in wavelengths.
        rx_spacing: Receive element spacing in wavelengths.
    """

    n_tx: int
    n_rx: int
    tx_spacing: float = 0.5
    rx_spacing: float = 0.5

    def __post_init__(self):
        if int(self.n_tx) != self.n_tx or self.n_tx < 1:
            raise DomainError(f"n_tx must be a positive integer, got {self.n_tx!r}")
        if int(self.n_rx) != self.n_rx or self.n_rx < 1:
            raise DomainError(f"n_rx must be a positive integer, got {self.n_rx!r}")
        if not self.tx_spacing > 0 or not self.rx_spacing > 0:
            raise DomainError("element spacings must be positive")


@dataclass(frozen=True)
class DirectionSet:
    """Ordered constrained directions: communication receivers first, then jamming.

    Args:
        angles: Directions in degrees, each in the open interval (-90, 90).
        n_comm: How many of the leading angles are communication receivers.
    """

    angles: tuple
    n_comm: int = 0

    def __post_init__(self):
        angles = tuple(float(t) for t in self.angles)
        object.__setattr__(self, "angles", angles)
        for t in angles:
            _check_angle(t)
        if len(set(angles)) != len(angles):
            raise DomainError(f"directions must be distinct, got {angles}")
        if not 0 <= self.n_comm <= len(angles):
            raise DomainError(f"n_comm={self.n_comm} out of range for {len(angles)} directions")

    @classmethod
    def from_groups(cls, comm: Sequence[float] = (), jam: Sequence[float] = ()):
        return cls(tuple(comm) + tuple(jam), n_comm=len(comm))

    def __len__(self):
        return len(self.angles)

    @property
    def n_jam(self) -> int:
        return len(self.angles) - self.n_comm

    @property
    def comm_angles(self):
        return self.angles[: self.n_comm]

    @property
    def jam_angles(self):
        return self.angles[self.n_comm :]

    def check_feasible(self, geom: ArrayGeometry):
        if len(self.angles) >= geom.n_tx:
            raise DomainError(
                f"{len(self.angles)} constrained directions need more than that many "
                f"transmit antennas (n_tx={geom.n_tx})"
            )


def _check_angle(theta):
    if not np.all(np.isfinite(theta)) or np.any(np.abs(theta) >= 90.0):
        raise DomainError(f"angle must lie in (-90, 90) degrees, got {theta!r}")


def _steering(n, spacing, theta):
    _check_angle(theta)
    phase = 2.0 * np.pi * spacing * np.sin(np.deg2rad(theta))
    return np.exp(1j * phase * np.arange(n))


def tx_steering(geom: ArrayGeometry, theta: float) -> np.ndarray:
    """Transmit steering vector ``a(theta)`` of length ``n_tx``."""
    return _steering(geom.n_tx, geom.tx_spacing, theta)


def rx_steering(geom: ArrayGeometry, theta: float) -> np.ndarray:
    """Receive steering vector ``b(theta)`` of length ``n_rx``."""
    return _steering(geom.n_rx, geom.rx_spacing, theta)


def steering_matrix(geom: ArrayGeometry, dirs) -> np.ndarray:
    """Stack transmit steering vectors column-wise, in the order of ``dirs``."""
    angles = dirs.angles if isinstance(dirs, DirectionSet) else tuple(dirs)
    if not angles:
        raise DomainError("at least one direction is required")
    return np.stack([tx_steering(geom, t) for t in angles], axis=1)


def normalized_beampattern(geom: ArrayGeometry, theta_point: float, theta_eval: float) -> complex:
    """``a^H(theta_eval) a(theta_point) / n_tx``: the array response at ``theta_eval``
    when steered to ``theta_point``. Its modulus is the normalized gain."""
    a_point = tx_steering(geom, theta_point)
    a_eval = tx_steering(geom, theta_eval)
    return complex(np.vdot(a_eval, a_point) / geom.n_tx)


def normalized_gain(geom: ArrayGeometry, theta_point: float, theta_eval: float) -> float:
    return abs(normalized_beampattern(geom, theta_point, theta_eval))


def lift_target(geom: ArrayGeometry, theta_t: float, code_length: int) -> KronOperator:
    """Implicit ``H(theta_t) = I_L kron b(theta_t) a^H(theta_t)``.

    ``H @ vec(S)`` equals ``vec(b a^H S)``; call ``.to_dense()`` only for small
    test instances.
    """
    b = rx_steering(geom, theta_t)
    a = tx_steering(geom, theta_t)
    return KronOperator(np.outer(b, a.conj()), code_length)


def lift_direction(geom: ArrayGeometry, theta: float, code_length: int) -> KronOperator:
    """Implicit ``G(theta) = I_L kron a(theta)`` of shape ``(L*n_tx, L)``.

    ``G.rmatvec(vec(S))`` is the length-``L`` signal emitted toward ``theta``,
    i.e. ``(a^H(theta) S)^T``.
    """
    a = tx_steering(geom, theta)
    return KronOperator(a[:, None], code_length)
