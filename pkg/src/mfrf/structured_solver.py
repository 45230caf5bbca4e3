"""Closed-form design for disturbance covariance ``I_L kron R_bar``.

With this structure the SINR factors into a transmit part ``a^H S S^H a`` and a
waveform-independent receive part, and the optimal free component is the rank-one
matrix ``sqrt(e_hat) * u_bar q_bar^H``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_model import normalized_beampattern, tx_steering
from .disturbance import StructuredCovariance, receive_sinr
from .energy_solver import Scenario, parameterize
from .errors import DomainError

# Relative thresholds below which q or u count as zero.
_ZERO_RTOL = 1e-12


@dataclass(frozen=True)
class StructuredSolution:
    """Optimal waveform and the quantities that determine its SINR.

    ``q = S_hat^H a(theta_t)``, ``u = B^H a(theta_t)``; ``beta0`` is ``None``
    whenever ``q`` or ``u`` vanishes.
    """

    waveform: np.ndarray
    q: np.ndarray
    u: np.ndarray
    beta0: float | None
    sinr_t: float
    sinr_r: float
    residual_energy: float
    branch: str = "standard"

    @property
    def sinr(self) -> float:
        return self.sinr_t * self.sinr_r


def solve_structured(scn: Scenario, model: StructuredCovariance) -> StructuredSolution:
    """Optimal energy-constrained waveform under a structured covariance.

    Degenerate inputs keep the rank of the result at most ``N_0``: when
    ``u = 0`` the free energy goes along the first null-space basis vector with
    row direction ``q_bar`` (or the top right singular vector of ``S_hat``), and
    when ``q = 0`` the row direction falls back to that singular vector, or the
    first code slot if ``S_hat`` is zero.
    """
    param = parameterize(scn)
    a_t = tx_steering(scn.geom, scn.theta_t)
    s_hat, basis, e_hat = param.s_hat, param.basis, param.residual_energy
    q = s_hat.conj().T @ a_t
    u = basis.conj().T @ a_t
    q_norm = float(np.linalg.norm(q))
    u_norm = float(np.linalg.norm(u))
    q_zero = q_norm <= _ZERO_RTOL * np.sqrt(scn.geom.n_tx * scn.energy)
    u_zero = u_norm <= _ZERO_RTOL * np.sqrt(scn.geom.n_tx)

    beta0 = None
    if e_hat == 0.0:
        free = np.zeros((basis.shape[1], s_hat.shape[1]), dtype=complex)
        branch = "no-free-energy"
    elif not q_zero and not u_zero:
        free = np.sqrt(e_hat) * np.outer(u / u_norm, q.conj() / q_norm)
        beta0 = float(np.sqrt(e_hat) / (u_norm * q_norm))
        branch = "standard"
    else:
        col = np.eye(basis.shape[1], 1, dtype=complex)[:, 0] if u_zero else u / u_norm
        row = (q / q_norm) if not q_zero else _row_direction(s_hat)
        free = np.sqrt(e_hat) * np.outer(col, row.conj())
        branch = "u-zero" if u_zero else "q-zero"

    waveform = s_hat + basis @ free
    sinr_t = (q_norm + np.sqrt(e_hat) * u_norm) ** 2 if branch == "standard" else _transmit_sinr(waveform, a_t)
    return StructuredSolution(
        waveform=waveform,
        q=q,
        u=u,
        beta0=beta0,
        sinr_t=float(sinr_t),
        sinr_r=receive_sinr(model, scn.geom, scn.theta_t),
        residual_energy=e_hat,
        branch=branch,
    )


def _row_direction(s_hat):
    # Conjugated so that outer(col, row.conj()) lies in the row space of s_hat.
    if np.linalg.norm(s_hat) > 0:
        _, _, vh = np.linalg.svd(s_hat)
        return vh[0].conj()
    e1 = np.zeros(s_hat.shape[1], dtype=complex)
    e1[0] = 1.0
    return e1


def _transmit_sinr(waveform, a_t):
    return float(np.linalg.norm(a_t.conj() @ waveform) ** 2)


def transmit_sinr(scn: Scenario, waveform) -> float:
    """Transmit beampattern power ``a^H(theta_t) S S^H a(theta_t)``."""
    return _transmit_sinr(np.asarray(waveform), tx_steering(scn.geom, scn.theta_t))


def coherent_case(scn: Scenario, model: StructuredCovariance):
    """Single constrained direction: the optimum is ``w d^T`` with ``w`` a
    combination of ``a(theta_bar)`` and ``a(theta_t)``.

    Returns:
        ``(w, solution)``.

    Raises:
        DomainError: more than one constrained direction, or an all-zero
            desired signal (no rank-one ``w d^T`` form exists).
    """
    if scn.n_dirs != 1:
        raise DomainError(f"coherent_case needs exactly one constrained direction, got {scn.n_dirs}")
    d = scn.desired[0]
    if not np.any(d):
        raise DomainError("desired signal is identically zero")
    sol = solve_structured(scn, model)
    theta_bar = scn.dirs.angles[0]
    if sol.branch == "standard":
        pattern = normalized_beampattern(scn.geom, scn.theta_t, theta_bar)
        gain2 = abs(pattern) ** 2
        alpha1 = 1.0 / scn.geom.n_tx - sol.beta0 * gain2
        alpha2 = sol.beta0 * np.conj(pattern)
        w = alpha1 * tx_steering(scn.geom, theta_bar) + alpha2 * tx_steering(scn.geom, scn.theta_t)
    else:
        # Rank one by construction: recover the beamformer by projecting onto d.
        w = sol.waveform @ d.conj() / np.vdot(d, d)
    return w, sol


@dataclass(frozen=True)
class SinrApproximation:
    """Large-array approximation of the transmit SINR.

    ``valid`` is False when the sum of squared normalized gains exceeds one,
    where the underlying approximation breaks down.
    """

    sinr_t: float
    g_sos: float
    residual_energy: float
    valid: bool


def approximate_sinr(scn: Scenario) -> SinrApproximation:
    """Transmit SINR from normalized gains and desired-signal energies alone.

    Assumes ``A^H A ~ n_tx I`` and mutually orthogonal desired signals; the
    estimate degrades when desired signals are correlated.
    """
    n_tx = scn.geom.n_tx
    gains2 = np.array([
        abs(normalized_beampattern(scn.geom, scn.theta_t, t)) ** 2 for t in scn.dirs.angles
    ])
    energies = np.sum(np.abs(scn.desired) ** 2, axis=1)
    g_sos = float(gains2.sum())
    e_hat = scn.energy - energies.sum() / n_tx
    matched = np.sqrt(float(np.dot(energies, gains2)))
    free = np.sqrt(max(e_hat * n_tx * (1.0 - g_sos), 0.0))
    return SinrApproximation(
        sinr_t=float((matched + free) ** 2),
        g_sos=g_sos,
        residual_energy=float(e_hat),
        valid=g_sos <= 1.0 and e_hat > 0,
    )


def sinr_bound_case2(energy: float, n_tx: int, n_dirs: int, e_bar: float) -> float:
    """Largest approximate transmit SINR with ``n_dirs`` equal-energy desired signals."""
    if not (energy > 0 and n_tx > 0 and n_dirs > 0 and e_bar > 0):
        raise DomainError("all arguments must be positive")
    return energy * n_tx - (n_dirs - 1) * e_bar
