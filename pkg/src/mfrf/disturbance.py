"""Disturbance covariance models, the SINR quadratic form and its square root."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import scipy.linalg as sla

from .array_model import ArrayGeometry, rx_steering, tx_steering, lift_target
from .errors import DomainError, NumericalError
from .linalg import DenseOperator, KronOperator, hermitian_part

#: Largest ``L * n_tx`` for which the general-covariance path builds M densely.
MAX_DENSE_DIM = 1024


@dataclass(frozen=True)
class GeneralCovariance:
    """Arbitrary space-time disturbance covariance of size ``(L*n_rx, L*n_rx)``."""

    r: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise DomainError("covariance must be a square matrix")
        scale = max(np.abs(r).max(), np.finfo(float).tiny)
        if np.abs(r - r.conj().T).max() > 1e-10 * scale:
            raise DomainError("covariance must be Hermitian")
        object.__setattr__(self, "r", hermitian_part(r))


@dataclass(frozen=True)
class StructuredCovariance:
    """White noise plus independent white jammers, identical in every code slot.

    Args:
        noise_power: Thermal noise power (linear, > 0).
        jammers: ``(angle_deg, power)`` pairs with linear powers > 0.
        code_length: Code length ``L``; the full covariance is ``I_L kron R_bar``.
    """

    noise_power: float = 1.0
    jammers: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)
    code_length: int = 1

    def __post_init__(self):
        if not self.noise_power > 0:
            raise DomainError(f"noise power must be positive, got {self.noise_power!r}")
        jammers = tuple((float(t), float(p)) for t, p in self.jammers)
        for t, p in jammers:
            if not p > 0:
                raise DomainError(f"jammer power must be positive, got {p!r}")
        object.__setattr__(self, "jammers", jammers)
        if self.code_length < 1:
            raise DomainError("code_length must be >= 1")

    def materialize(self, geom: ArrayGeometry) -> GeneralCovariance:
        """Full ``I_L kron R_bar``; only sensible for small test instances."""
        return GeneralCovariance(np.kron(np.eye(self.code_length), spatial_covariance(self, geom)))


def spatial_covariance(model: StructuredCovariance, geom: ArrayGeometry) -> np.ndarray:
    """``R_bar = sigma^2 I + sum_n p_n b(theta_n) b^H(theta_n)``."""
    r = model.noise_power * np.eye(geom.n_rx, dtype=complex)
    for theta, power in model.jammers:
        b = rx_steering(geom, theta)
        r += power * np.outer(b, b.conj())
    return r


def receive_sinr(model: StructuredCovariance, geom: ArrayGeometry, theta_t: float) -> float:
    """Gain of the optimal receive spatial filter, ``b^H R_bar^{-1} b``."""
    r_bar = spatial_covariance(model, geom)
    b = rx_steering(geom, theta_t)
    x = sla.solve(r_bar, b, assume_a="pos")
    return float(np.real(np.vdot(b, x)))


def quadratic_form_matrix(cov, geom: ArrayGeometry, theta_t: float, code_length: int):
    """SINR quadratic form ``M = H^H R^{-1} H`` as an implicit Hermitian operator.

    A :class:`StructuredCovariance` yields a :class:`KronOperator` with block
    ``SINR_R * a a^H``. A :class:`GeneralCovariance` is solved densely and is
    limited to ``L * n_tx <= MAX_DENSE_DIM``.
    """
    if isinstance(cov, StructuredCovariance):
        if cov.code_length != code_length:
            raise DomainError(
                f"covariance code length {cov.code_length} != requested {code_length}"
            )
        a = tx_steering(geom, theta_t)
        block = receive_sinr(cov, geom, theta_t) * np.outer(a, a.conj())
        return KronOperator(block, code_length)
    if not isinstance(cov, GeneralCovariance):
        raise TypeError(f"unsupported covariance type {type(cov).__name__}")

    n = code_length * geom.n_tx
    if n > MAX_DENSE_DIM:
        raise DomainError(
            f"general covariance needs a dense {n}x{n} matrix (limit {MAX_DENSE_DIM}); "
            "use StructuredCovariance for long codes"
        )
    expected = code_length * geom.n_rx
    if cov.r.shape != (expected, expected):
        raise DomainError(f"covariance shape {cov.r.shape} != ({expected}, {expected})")
    h = lift_target(geom, theta_t, code_length).to_dense()
    try:
        factor = sla.cho_factor(cov.r)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(cov.r)
        raise NumericalError(f"covariance is not positive definite (condition number {cond:.3e})") from exc
    m = h.conj().T @ sla.cho_solve(factor, h)
    return DenseOperator(hermitian_part(m))


def sqrt_operator(m):
    """Hermitian PSD square root ``M_r`` with ``M_r @ M_r == M``.

    Works on either operator type; the Kronecker structure is preserved, so the
    root of ``I_L kron X`` is ``I_L kron X^{1/2}``.
    """
    if isinstance(m, (KronOperator, DenseOperator)):
        return m.sqrt()
    return DenseOperator(np.asarray(m)).sqrt()
