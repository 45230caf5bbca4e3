"""Energy-constrained optimum for an arbitrary disturbance covariance.

Every waveform that reproduces the desired signals exactly in the constrained
directions is ``S = S_hat + B V``, with ``S_hat`` the minimum-norm solution and
``B`` an orthonormal basis of the null space of ``A^H``. Maximizing ``s^H M s``
over ``||V||_F^2 = e_t - ||S_hat||_F^2`` is a sphere-constrained quadratic
program whose Lagrange multiplier is the root of a secular equation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .array_model import ArrayGeometry, DirectionSet, steering_matrix, tx_steering
from .errors import ConditioningError, DomainError, InfeasibleError, NumericalError
from .linalg import hermitian_eigh, unvec, vec
from .report import SolverReport

#: Largest dimension of the materialized reduced matrix ``B_hat^H M B_hat``.
MAX_REDUCED_DIM = 2048
MAX_CONDITION = 1e8


@dataclass(frozen=True)
class Scenario:
    """Design inputs shared by all solvers.

    Args:
        geom: Array geometry.
        theta_t: Target direction in degrees.
        dirs: Constrained directions, communication first.
        desired: Desired signals, one row of length ``L`` per direction.
        energy: Total transmit energy ``e_t``.
    """

    geom: ArrayGeometry
    theta_t: float
    dirs: DirectionSet
    desired: np.ndarray
    energy: float

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.desired, dtype=complex))
        object.__setattr__(self, "desired", d)
        if d.shape[0] != len(self.dirs):
            raise DomainError(f"{d.shape[0]} desired signals for {len(self.dirs)} directions")
        if not self.energy > 0:
            raise DomainError(f"transmit energy must be positive, got {self.energy!r}")
        self.dirs.check_feasible(self.geom)
        tx_steering(self.geom, self.theta_t)  # validates the angle

    @property
    def code_length(self) -> int:
        return self.desired.shape[1]

    @property
    def n_dirs(self) -> int:
        return len(self.dirs)

    def steering(self) -> np.ndarray:
        return steering_matrix(self.geom, self.dirs)

    def with_energy(self, energy: float) -> "Scenario":
        return Scenario(self.geom, self.theta_t, self.dirs, self.desired, energy)


@dataclass(frozen=True)
class NullSpaceParam:
    """``S = s_hat + basis @ V`` parameterization of the matching constraint."""

    s_hat: np.ndarray
    basis: np.ndarray
    residual_energy: float


def parameterize(scn: Scenario) -> NullSpaceParam:
    """Minimum-norm particular solution and orthonormal null-space basis.

    Raises:
        ConditioningError: ``A^H A`` has condition number above ``1e8``.
        InfeasibleError: ``e_t`` is below the energy of the particular solution.
    """
    a = scn.steering()
    gram = a.conj().T @ a
    cond = np.linalg.cond(gram)
    if not cond < MAX_CONDITION:
        raise ConditioningError(
            f"steering matrix Gram has condition number {cond:.3e}; directions too close",
            condition_number=cond,
        )
    s_hat = a @ sla.solve(gram, scn.desired, assume_a="pos")

    # Full QR of A: trailing columns of Q span the null space of A^H.
    q, _ = sla.qr(a, mode="full")
    basis = q[:, scn.n_dirs :]

    required = float(np.linalg.norm(s_hat) ** 2)
    residual = scn.energy - required
    if residual < -1e-12 * scn.energy:
        raise InfeasibleError(
            f"transmit energy {scn.energy:.6g} is below the {required:.6g} needed to "
            "synthesize the desired signals",
            required_energy=required,
        )
    return NullSpaceParam(s_hat=s_hat, basis=basis, residual_energy=max(residual, 0.0))


class DegenerateSecularError(DomainError):
    """All secular-equation coefficients vanish; any top-eigenvector mix is optimal."""


def secular_function(nu, spectrum, coeffs):
    """``sum |c_m|^2 / (nu - tau_m)^2``."""
    w = np.abs(np.asarray(coeffs)) ** 2
    return float(np.sum(w / (nu - np.asarray(spectrum)) ** 2))


def secular_bracket(spectrum, coeffs, budget):
    """Root bracket ``||c|| / sqrt(budget) + (tau_min, tau_max)``."""
    tau = np.asarray(spectrum, dtype=float)
    c = np.linalg.norm(coeffs) / np.sqrt(budget)
    return c + tau.min(), c + tau.max()


def solve_secular(spectrum, coeffs, budget, rtol=1e-12, max_iter=200):
    """Root ``nu > max(spectrum)`` of ``sum |c_m|^2 / (nu - tau_m)^2 = budget``.

    Newton steps are taken on ``1/sqrt(f(nu))``, which is close to linear in
    ``nu``, and fall back to bisection whenever they leave the current bracket.

    Raises:
        DegenerateSecularError: every coefficient is zero.
    """
    tau = np.asarray(spectrum, dtype=float)
    c2 = np.abs(np.asarray(coeffs)) ** 2
    if not budget > 0:
        raise DomainError(f"budget must be positive, got {budget!r}")
    if not np.any(c2 > 0):
        raise DegenerateSecularError("secular equation has all-zero coefficients")
    tau_max = tau.max()
    lo, hi = secular_bracket(tau, coeffs, budget)
    lo = max(lo, tau_max)
    target = 1.0 / np.sqrt(budget)

    def phi(nu):
        d = nu - tau
        f = np.sum(c2 / d**2)
        df = -2.0 * np.sum(c2 / d**3)
        return f, df

    nu = hi
    for _ in range(max_iter):
        f, df = phi(nu)
        if abs(f - budget) <= rtol * budget:
            return float(nu)
        if f > budget:
            lo = nu
        else:
            hi = nu
        # d/dnu f^{-1/2} = -df / (2 f^{3/2})
        g = 1.0 / np.sqrt(f) - target
        dg = -0.5 * df / f**1.5
        step = nu - g / dg if dg > 0 else np.nan
        nu = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * max(abs(hi), 1.0):
            break
    f, _ = phi(nu)
    if abs(f - budget) > 1e-8 * budget:
        raise NumericalError(f"secular root finder stalled (residual {abs(f - budget):.3e})")
    return float(nu)


def _reduced_problem(scn, m, param):
    n_free = param.basis.shape[1]
    dim = n_free * scn.code_length
    if dim > MAX_REDUCED_DIM:
        raise DomainError(
            f"reduced problem of size {dim} exceeds {MAX_REDUCED_DIM}; use the structured solver"
        )
    b_hat = np.kron(np.eye(scn.code_length), param.basis)
    m_dense = m.to_dense() if hasattr(m, "to_dense") else np.asarray(m)
    s_hat = vec(param.s_hat)
    k = b_hat.conj().T @ m_dense @ b_hat
    g = b_hat.conj().T @ (m_dense @ s_hat)
    return k, g, m_dense, s_hat


def solve_general(scn: Scenario, m) -> tuple:
    """Maximize ``s^H M s`` s.t. ``A^H S = D`` and ``||S||_F^2 = e_t``.

    Args:
        scn: Design scenario.
        m: Hermitian PSD operator (anything with ``to_dense``) or array.

    Returns:
        ``(S, report)`` with ``S`` of shape ``(n_tx, L)``.
    """
    start = time.perf_counter()
    param = parameterize(scn)
    k, g, m_dense, s_hat = _reduced_problem(scn, m, param)
    tau, u = hermitian_eigh(k)
    e_hat = param.residual_energy
    coeffs = u.conj().T @ g
    scale = max(np.linalg.norm(m_dense, 2) * np.linalg.norm(s_hat), np.finfo(float).tiny)

    nu = None
    branch = "secular"
    if e_hat == 0.0:
        v = np.zeros_like(g)
        branch = "no-free-energy"
    elif np.linalg.norm(g) <= 1e-14 * scale:
        # Objective reduces to v^H K v: take the principal eigenvector.
        v = np.sqrt(e_hat) * u[:, 0]
        branch = "degenerate"
    else:
        v, nu, branch = _secular_solution(tau, u, coeffs, e_hat)

    # Equals |f(nu) - e_hat| on the secular branch and stays finite in the hard case.
    sphere_residual = abs(float(np.linalg.norm(v) ** 2) - e_hat) if nu is not None else 0.0
    if e_hat > 0:
        v *= np.sqrt(e_hat) / np.linalg.norm(v)
    s = s_hat + vec(param.basis @ unvec(v, param.basis.shape[1]))
    sm = unvec(s, scn.geom.n_tx)

    sinr = float(np.real(np.vdot(s, m_dense @ s)))
    a = scn.steering()
    extras = {
        "branch": branch,
        "nu": nu,
        "residual_energy": e_hat,
        "secular_residual": sphere_residual,
        "kkt_residual": (
            float(np.linalg.norm(nu * v - k @ v - g)) if nu is not None else 0.0
        ),
        "kkt_scale": float(np.linalg.norm(g)),
        "lambda_max_reduced": float(tau[0]),
    }
    report = SolverReport(
        solver="energy",
        sinr=sinr,
        energy=float(np.linalg.norm(sm) ** 2),
        matching_residuals=list(np.sum(np.abs(a.conj().T @ sm - scn.desired) ** 2, axis=1)),
        elapsed=time.perf_counter() - start,
        extras=extras,
    )
    return sm, report


def _secular_solution(tau, u, coeffs, e_hat):
    """Solve the sphere-constrained stationarity system in the eigenbasis.

    Handles the hard case where ``coeffs`` vanish on the top eigenspace and the
    secular function stays below ``e_hat`` as ``nu`` approaches ``tau[0]``.
    """
    top = np.isclose(tau, tau[0], rtol=1e-12, atol=1e-12 * max(abs(tau[0]), 1.0))
    c_top = np.linalg.norm(coeffs[top])
    if c_top <= 1e-13 * np.linalg.norm(coeffs):
        rest = ~top
        f_edge = np.sum(np.abs(coeffs[rest]) ** 2 / (tau[0] - tau[rest]) ** 2)
        if f_edge <= e_hat:
            y = np.zeros_like(coeffs)
            y[rest] = coeffs[rest] / (tau[0] - tau[rest])
            y[np.argmax(top)] = np.sqrt(max(e_hat - f_edge, 0.0))
            return u @ y, float(tau[0]), "hard-case"
        coeffs = np.where(top, 0.0, coeffs)
    nu = solve_secular(tau, coeffs, e_hat)
    y = coeffs / (nu - tau)
    return u @ y, nu, "secular"


def radar_only_optimum(m, energy: float):
    """Best waveform without matching constraints: ``sqrt(e_t)`` times the principal
    eigenvector of ``M``; SINR ``e_t * lambda_max(M)``."""
    if not energy > 0:
        raise DomainError(f"transmit energy must be positive, got {energy!r}")
    if hasattr(m, "block"):
        w, u = hermitian_eigh(m.block)
        x = np.zeros((m.block.shape[0], m.code_length), dtype=complex)
        x[:, 0] = u[:, 0]
        s = vec(x)
    else:
        dense = m.to_dense() if hasattr(m, "to_dense") else np.asarray(m)
        w, u = hermitian_eigh(dense)
        s = u[:, 0]
    return np.sqrt(energy) * s, float(energy * w[0])
