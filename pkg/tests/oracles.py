"""Independent reference computations used as test oracles.

Each oracle avoids the code path it checks: plain loops, dense matrices,
bisection, grid search or random search.
"""

import numpy as np


def steering_loop(n, spacing, theta_deg):
    """Element-by-element steering vector."""
    out = np.empty(n, dtype=complex)
    for m in range(n):
        phase = 2.0 * np.pi * spacing * m * np.sin(np.deg2rad(theta_deg))
        out[m] = complex(np.cos(phase), np.sin(phase))
    return out


def dirichlet_gain2(n, spacing, theta_point, theta_eval):
    """Squared normalized array gain from the Dirichlet kernel."""
    u = 2.0 * np.pi * spacing * (np.sin(np.deg2rad(theta_eval)) - np.sin(np.deg2rad(theta_point)))
    if abs(np.sin(u / 2.0)) < 1e-15:
        return 1.0
    return float((np.sin(n * u / 2.0) / (n * np.sin(u / 2.0))) ** 2)


def bisect_root(f, lo, hi, tol=1e-14, max_iter=400):
    """Root of a decreasing function on ``[lo, hi]``."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(abs(hi), 1.0):
            break
    return 0.5 * (lo + hi)


def projected_ascent_best(m_dense, s_hat, basis_hat, e_hat, rng, restarts=10_000, steps=60):
    """Best ``s^H M s`` found by batched projected gradient ascent on the free sphere.

    Every restart starts from a random point of ``||v|| = sqrt(e_hat)`` and
    repeatedly steps along the gradient, renormalizing onto the sphere.
    """
    k = basis_hat.conj().T @ m_dense @ basis_hat
    g = basis_hat.conj().T @ (m_dense @ s_hat)
    c = float(np.real(np.vdot(s_hat, m_dense @ s_hat)))
    dim = k.shape[0]
    v = rng.standard_normal((restarts, dim)) + 1j * rng.standard_normal((restarts, dim))
    v *= np.sqrt(e_hat) / np.linalg.norm(v, axis=1, keepdims=True)
    step = 1.0 / max(np.linalg.norm(k, 2), 1e-12)

    def value(v):
        return np.real(np.einsum("ri,ij,rj->r", v.conj(), k, v)) + 2.0 * np.real(v.conj() @ g) + c

    best = value(v).max()
    for _ in range(steps):
        v = v + step * (v @ k.T + g)
        v *= np.sqrt(e_hat) / np.linalg.norm(v, axis=1, keepdims=True)
        best = max(best, value(v).max())
    return float(best)


def rayleigh_random_max(m, rng, samples=100_000):
    """Largest Rayleigh quotient over random unit vectors."""
    n = m.shape[0]
    best = -np.inf
    for start in range(0, samples, 20_000):
        x = rng.standard_normal((min(20_000, samples - start), n)) + 1j * rng.standard_normal(
            (min(20_000, samples - start), n)
        )
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        best = max(best, np.real(np.einsum("ri,ij,rj->r", x.conj(), m, x)).max())
    return float(best)


def papr_projection_grid(target, energy, rho, n_grid=2000):
    """Exhaustive polar-grid maximizer of ``Re(target^H x)`` for ``L = 2``.

    Magnitudes are parameterized by ``psi`` (``|x_1| = sqrt(E) cos psi``) and
    phases by a grid on ``[0, 2 pi)``; infeasible PAPR points are discarded.
    """
    t = np.asarray(target, dtype=complex)
    phis = np.linspace(0.0, 2.0 * np.pi, n_grid, endpoint=False)
    psis = np.linspace(0.0, np.pi / 2.0, n_grid)
    cap = rho * energy / 2.0
    r1 = np.sqrt(energy) * np.cos(psis)
    r2 = np.sqrt(energy) * np.sin(psis)
    ok = (r1**2 <= cap * (1 + 1e-12)) & (r2**2 <= cap * (1 + 1e-12))
    # Objective is separable: r1 * Re(e^{-i phi1} t1) + r2 * Re(e^{-i phi2} t2).
    c1 = np.real(np.exp(-1j * phis) * t[0])
    c2 = np.real(np.exp(-1j * phis) * t[1])
    vals = r1[:, None] * c1[None, :]
    best1 = vals.max(axis=1)
    best2 = (r2[:, None] * c2[None, :]).max(axis=1)
    total = np.where(ok, best1 + best2, -np.inf)
    return float(total.max())


def np_detector_pd(p_fa, sinr, trials, rng, chunk=250_000):
    """Monte Carlo Pd of the detector ``Re(h^H y) > eta`` for a known signal ``h``.

    With white unit-variance noise and ``||h||^2 = sinr`` the statistic is
    ``N(0, sinr/2)`` under noise only, which fixes the threshold ``eta`` for the
    requested false-alarm rate. Detections are counted by simulation.
    """
    from scipy import stats

    n = 4
    h = np.full(n, np.sqrt(sinr / n), dtype=complex)
    eta = stats.norm.isf(p_fa) * np.sqrt(sinr / 2.0)
    hits = 0
    for start in range(0, trials, chunk):
        size = min(chunk, trials - start)
        noise = (rng.standard_normal((size, n)) + 1j * rng.standard_normal((size, n))) / np.sqrt(2)
        hits += int(np.count_nonzero(np.real((noise + h) @ h.conj()) > eta))
    return hits / trials


def cm_random_search(score, shape, modulus, rng, samples=1_000_000, chunk=100_000):
    """Best ``score`` over random constant-modulus matrices.

    ``score`` maps a ``(chunk, *shape)`` batch to ``(values, feasible)``;
    infeasible samples are ignored. Returns ``-inf`` if nothing is feasible.
    """
    best = -np.inf
    for start in range(0, samples, chunk):
        size = min(chunk, samples - start)
        batch = modulus * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=(size,) + tuple(shape)))
        values, ok = score(batch)
        values = np.where(ok, values, -np.inf)
        best = max(best, float(values.max()))
    return best


def cm_coordinate_descent(t_dense, t_vec, modulus, rng, starts=200, sweeps=200):
    """Smallest ``s^H T s - 2 Re(t^H s)`` over ``|s_i| = modulus`` by exact
    one-phase-at-a-time minimization from random starts."""
    n = t_vec.size
    off = t_dense - np.diag(np.diag(t_dense))
    best = np.inf
    for _ in range(starts):
        s = modulus * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n))
        for _ in range(sweeps):
            for i in range(n):
                # Only 2 Re(conj(s_i) (off_i s - t_i)) depends on the phase of s_i.
                c = off[i] @ s - t_vec[i]
                s[i] = -modulus * np.exp(1j * np.angle(c)) if abs(c) > 0 else s[i]
        best = min(best, float(np.real(np.vdot(s, t_dense @ s)) - 2.0 * np.real(np.vdot(t_vec, s))))
    return best


def cm_matching_slsqp(a_t, a_bar, d, eps, modulus, shape, rng, starts=40):
    """Largest ``||a_t^H S||^2`` over constant-modulus ``S`` with
    ``||a_bar^H S - d||^2 <= eps``, by SLSQP on the phases from random starts."""
    from scipy.optimize import minimize

    def waveform(p):
        return modulus * np.exp(1j * p.reshape(shape))

    def objective(p):
        return -float(np.sum(np.abs(a_t.conj() @ waveform(p)) ** 2))

    def slack(p):
        return eps - float(np.sum(np.abs(a_bar.conj() @ waveform(p) - d) ** 2))

    best = -np.inf
    size = int(np.prod(shape))
    for _ in range(starts):
        res = minimize(
            objective, rng.uniform(0.0, 2.0 * np.pi, size), method="SLSQP",
            constraints=[{"type": "ineq", "fun": slack}], options={"maxiter": 500, "ftol": 1e-12},
        )
        if slack(res.x) >= -1e-9:
            best = max(best, -float(res.fun))
    return best


def psk_ser_exact(order, snr):
    """Exact M-PSK symbol error rate in AWGN from the single-integral (Craig) form."""
    from scipy import integrate

    upper = (order - 1) * np.pi / order
    k = np.sin(np.pi / order) ** 2
    value, _ = integrate.quad(lambda phi: np.exp(-snr * k / np.sin(phi) ** 2), 1e-12, upper, epsabs=1e-14)
    return value / np.pi
