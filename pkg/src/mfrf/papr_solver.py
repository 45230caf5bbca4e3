"""SINR maximization under matching-error balls and per-antenna energy/PAPR limits.

The outer loop is ADMM over the splitting ``y_k = G_k^H s - d_k`` and
``v = M_r s``. Its ``s``-subproblem, a quadratic over a product of per-antenna
PAPR sets, is solved by majorization-minimization: each MM step linearizes
``s^H T s`` around the current iterate and reduces to one independent
projection per antenna.
"""

from __future__ import annotations

import logging
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .array_model import tx_steering
from .energy_solver import Scenario
from .errors import DomainError, InfeasibleError, MonotonicityError, NumericalError
from .linalg import DenseOperator, KronOperator, unvec, vec
from .report import SolverReport

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PaprConstraint:
    """Per-antenna energy and peak-to-average power limit.

    Args:
        rho: PAPR bound in ``[1, L]``; 1 means constant modulus.
        per_antenna_energy: Energy of every antenna's code, ``e_t / n_tx``.
        code_length: ``L``.
    """

    rho: float
    per_antenna_energy: float
    code_length: int

    def __post_init__(self):
        if self.code_length < 1:
            raise DomainError("code_length must be >= 1")
        if not 1.0 - 1e-12 <= self.rho <= self.code_length + 1e-12:
            raise DomainError(f"rho must lie in [1, {self.code_length}], got {self.rho!r}")
        if not self.per_antenna_energy > 0:
            raise DomainError("per-antenna energy must be positive")

    @classmethod
    def from_total(cls, energy: float, n_tx: int, code_length: int, rho: float = 1.0):
        return cls(rho=rho, per_antenna_energy=energy / n_tx, code_length=code_length)

    @property
    def modulus(self) -> float:
        """Constant modulus ``sqrt(e_t / (L n_tx))`` used when ``rho == 1``."""
        return float(np.sqrt(self.per_antenna_energy / self.code_length))


@dataclass(frozen=True)
class MatchingTolerances:
    """Squared matching-error bound per constrained direction."""

    eps: tuple

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        if not eps or any(not e > 0 for e in eps):
            raise DomainError(f"matching tolerances must be positive, got {self.eps!r}")
        object.__setattr__(self, "eps", eps)

    def __len__(self):
        return len(self.eps)


def papr(row) -> float:
    """Peak-to-average power ratio of one code sequence."""
    p = np.abs(np.asarray(row)) ** 2
    return float(p.max() / p.mean())


def papr_project(target, energy: float, rho: float) -> np.ndarray:
    """Maximize ``Re(target^H s)`` over ``||s||^2 = energy``, ``max |s_l|^2 <= rho * energy / L``.

    Phases follow the target. Magnitudes are ``min(c |target_l|, cap)`` with ``c``
    found by repeatedly clipping entries above the cap and rescaling the rest;
    each pass clips at least one more entry, so at most ``L`` passes are needed.
    Zero target entries get phase zero.
    """
    t = np.asarray(target, dtype=complex)
    length = t.size
    if not energy > 0:
        raise DomainError(f"energy must be positive, got {energy!r}")
    if not 1.0 - 1e-12 <= rho <= length + 1e-12:
        raise DomainError(f"rho must lie in [1, {length}], got {rho!r}")
    phase = np.exp(1j * np.angle(t))
    if rho <= 1.0 + 1e-12:
        return np.sqrt(energy / length) * phase

    cap2 = rho * energy / length
    mag = np.abs(t)
    amp = np.zeros(length)
    clipped = np.zeros(length, dtype=bool)
    for _ in range(length + 1):
        free = ~clipped
        remaining = energy - clipped.sum() * cap2
        norm_free = np.linalg.norm(mag[free])
        if norm_free > 0:
            amp[free] = mag[free] * np.sqrt(max(remaining, 0.0)) / norm_free
        else:
            amp[free] = np.sqrt(max(remaining, 0.0) / free.sum())
        over = free & (amp**2 > cap2)
        if not over.any():
            break
        clipped |= over
        amp[clipped] = np.sqrt(cap2)
    return amp * phase


def _project_rows(target_mat, constraint: PaprConstraint):
    if constraint.rho <= 1.0 + 1e-12:
        return constraint.modulus * np.exp(1j * np.angle(target_mat))
    return np.stack([
        papr_project(row, constraint.per_antenna_energy, constraint.rho) for row in target_mat
    ])


@dataclass
class MMResult:
    s: np.ndarray
    objectives: List[float]
    iterations: int
    converged: bool


def mm_objective(t_op, t_vec, s) -> float:
    return float(np.real(np.vdot(s, t_op @ s)) - 2.0 * np.real(np.vdot(t_vec, s)))


def mm_inner_solve(
    t_op,
    t_vec,
    start,
    constraint: PaprConstraint,
    lambda_max: Optional[float] = None,
    rtol: float = 1e-6,
    max_iter: int = 500,
    slack: float = 1e-9,
) -> MMResult:
    """Minimize ``s^H T s - 2 Re(t^H s)`` over per-antenna PAPR sets by MM.

    ``start`` must already be feasible. Each step projects
    ``t - (T - lambda_max I) s`` row by row (rows are antennas).

    Raises:
        MonotonicityError: the objective rose by more than ``slack`` (relative).
    """
    t_vec = np.asarray(t_vec, dtype=complex)
    s = np.asarray(start, dtype=complex).copy()
    n_tx = s.size // constraint.code_length
    lam = t_op.lambda_max() if lambda_max is None else lambda_max
    f = mm_objective(t_op, t_vec, s)
    objectives = [f]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        t_bar = t_vec - (t_op @ s - lam * s)
        s_new = vec(_project_rows(unvec(t_bar, n_tx), constraint))
        f_new = mm_objective(t_op, t_vec, s_new)
        objectives.append(f_new)
        if f_new > f + slack * max(abs(f), 1.0):
            raise MonotonicityError(f"MM objective increased from {f:.12g} to {f_new:.12g}")
        s = s_new
        done = abs(f_new - f) < rtol * max(abs(f), np.finfo(float).tiny)
        f = f_new
        if done:
            converged = True
            break
    return MMResult(s=s, objectives=objectives, iterations=it, converged=converged)


@dataclass
class AdmmState:
    """Iterate of the ADMM loop; all vectors are column-stacked."""

    s: np.ndarray
    y: np.ndarray  # (N_0, L)
    v: np.ndarray
    t: float
    gamma: np.ndarray  # (N_0, L)
    lam: np.ndarray
    mu: float
    iteration: int = 0


def initial_waveform(n_tx: int, constraint: PaprConstraint, seed) -> np.ndarray:
    """Constant-modulus start with independent uniform phases."""
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_tx, constraint.code_length))
    return constraint.modulus * np.exp(1j * phases)


def _build_t(scn: Scenario, m, steer):
    gram = steer @ steer.conj().T
    if isinstance(m, KronOperator):
        return KronOperator(gram + m.block, scn.code_length)
    dense = m.to_dense() if hasattr(m, "to_dense") else np.asarray(m)
    return DenseOperator(np.kron(np.eye(scn.code_length), gram) + dense)


def _sinr_t(m, steer_t, sm):
    if isinstance(m, KronOperator):
        return float(np.linalg.norm(steer_t.conj() @ sm) ** 2)
    return None


# Overflow in a diverging run is detected below and reported as NumericalError.
@np.errstate(over="ignore", invalid="ignore")
def admm_solve(
    scn: Scenario,
    m,
    m_r,
    tol: MatchingTolerances | Sequence[float],
    constraint: PaprConstraint,
    mu: float = 5.0,
    seed=0,
    *,
    max_iter: int = 2000,
    sinr_rtol: float = 1e-5,
    feas_rtol: float = 1e-3,
    inner_rtol: float = 1e-6,
    inner_max_iter: int = 500,
    plateau: int = 200,
    plateau_margin: float = 0.1,
    record_inner: bool = False,
    callback: Optional[Callable[[dict], None]] = None,
):
    """Design a PAPR-limited waveform maximizing ``s^H M s``.

    Args:
        scn: Design scenario; ``scn.energy`` is split evenly across antennas.
        m: SINR quadratic form (``KronOperator`` enables the fast path).
        m_r: Hermitian square root of ``m``.
        tol: Squared matching-error bound per direction.
        constraint: PAPR constraint; per-antenna energy must equal ``e_t/n_tx``.
        mu: ADMM penalty, must exceed 2.
        seed: Seed for the random-phase initialization.
        max_iter: Outer iteration cap.
        sinr_rtol: Stop once the relative SINR change drops below this and
            every matching residual is within ``eps_k * (1 + feas_rtol)``.
        plateau: Infeasibility window: residuals more than ``plateau_margin``
            above tolerance and flat to within 1% for this many iterations
            abort the solve. Runs hovering just above the tolerance are still
            converging and are left alone.
        record_inner: Keep every inner MM objective sequence in the report.
        callback: Called with each trace record.

    Returns:
        ``(S, report)``.

    Raises:
        InfeasibleError: matching residuals stall above their tolerance.
        NumericalError: the iterates overflowed.
    """
    if not mu > 2:
        raise DomainError(f"penalty mu must exceed 2, got {mu!r}")
    if not isinstance(tol, MatchingTolerances):
        tol = MatchingTolerances(tuple(tol))
    if len(tol) != scn.n_dirs:
        raise DomainError(f"{len(tol)} tolerances for {scn.n_dirs} directions")
    if constraint.code_length != scn.code_length:
        raise DomainError("constraint code length does not match the scenario")
    if not np.isclose(constraint.per_antenna_energy * scn.geom.n_tx, scn.energy, rtol=1e-12):
        raise DomainError("per-antenna energy must equal e_t / n_tx")

    start = time.perf_counter()
    n_tx, length = scn.geom.n_tx, scn.code_length
    steer = scn.steering()
    steer_t = tx_steering(scn.geom, scn.theta_t)
    d = scn.desired
    eps = np.array(tol.eps)

    t_op = _build_t(scn, m, steer)
    lam_max = t_op.lambda_max()

    s = vec(initial_waveform(n_tx, constraint, seed))
    state = AdmmState(
        s=s,
        y=np.zeros_like(d),
        v=np.zeros(m_r.shape[0], dtype=complex),
        t=0.0,
        gamma=np.zeros_like(d),
        lam=np.zeros(m_r.shape[0], dtype=complex),
        mu=float(mu),
    )

    trace = []
    inner_traces = []
    ratios = deque(maxlen=plateau)
    prev_sinr = None
    converged = False
    for it in range(1, max_iter + 1):
        state.iteration = it
        t_vec = vec(steer @ (state.y + d + state.gamma)) + m_r @ (state.v + state.lam)
        mm = mm_inner_solve(
            t_op, t_vec, state.s, constraint, lambda_max=lam_max,
            rtol=inner_rtol, max_iter=inner_max_iter,
        )
        state.s = mm.s
        if record_inner:
            inner_traces.append(mm.objectives)

        sm = unvec(state.s, n_tx)
        emitted = steer.conj().T @ sm  # row k is a_k^H S = (G_k^H s)^T
        z = emitted - d - state.gamma
        znorm = np.linalg.norm(z, axis=1)
        shrink = np.minimum(np.sqrt(eps) / np.where(znorm > 0, znorm, 1.0), 1.0)
        state.y = shrink[:, None] * z

        mr_s = m_r @ state.s
        state.v = state.mu * (mr_s - state.lam) / (state.mu - 2.0)
        state.t = float(np.real(np.vdot(state.v, state.v)))

        state.gamma = state.gamma + state.y - emitted + d
        state.lam = state.lam + state.v - mr_s

        sinr = m.quadratic(state.s) if hasattr(m, "quadratic") else float(
            np.real(np.vdot(state.s, np.asarray(m) @ state.s))
        )
        residuals = np.sum(np.abs(emitted - d) ** 2, axis=1)
        if not (np.isfinite(sinr) and np.all(np.isfinite(state.lam)) and np.all(np.isfinite(state.s))):
            raise NumericalError(
                f"ADMM diverged at iteration {it}; a larger penalty mu usually restores stability"
            )
        record = {
            "iteration": it,
            "sinr": sinr,
            "sinr_t": _sinr_t(m, steer_t, sm),
            "matching": residuals.tolist(),
            "primal_y": float(np.max(np.linalg.norm(state.y - (emitted - d), axis=1))),
            "primal_v": float(np.linalg.norm(state.v - mr_s)),
            "t": state.t,
            "inner_iterations": mm.iterations,
        }
        trace.append(record)
        if callback is not None:
            callback(record)

        feasible = bool(np.all(residuals <= eps * (1.0 + feas_rtol)))
        if prev_sinr is not None and feasible and abs(sinr - prev_sinr) < sinr_rtol * abs(prev_sinr):
            converged = True
            break
        prev_sinr = sinr

        ratios.append(float(np.max(residuals / eps)))
        if len(ratios) == plateau and min(ratios) > 1.0 + plateau_margin:
            if max(ratios) - min(ratios) <= 0.01 * min(ratios):
                raise InfeasibleError(
                    f"matching residuals stalled at {ratios[-1]:.3g} x tolerance for "
                    f"{plateau} iterations; increase the matching tolerances eps_k "
                    "to make the problem feasible"
                )

    if not converged:
        log.warning("ADMM stopped at the iteration cap (%d) without converging", max_iter)

    sm = unvec(state.s, n_tx)
    final = trace[-1]
    report = SolverReport(
        solver="papr",
        sinr=final["sinr"],
        sinr_t=final["sinr_t"],
        energy=float(np.linalg.norm(sm) ** 2),
        matching_residuals=final["matching"],
        iterations=len(trace),
        converged=converged,
        elapsed=time.perf_counter() - start,
        trace=trace,
        extras={
            "lambda_max_T": lam_max,
            "mu": state.mu,
            "seed": seed,
            "inner_objectives": inner_traces,
            "state": state,
        },
    )
    return sm, report
