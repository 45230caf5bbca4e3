import numpy as np
import pytest

from scenarios import reference_scenario


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def base_scn():
    return reference_scenario()


@pytest.fixture(scope="session")
def base_admm(base_scn):
    """Constant-modulus design on the two-direction base setup, with inner MM traces kept."""
    import time

    from mfrf import PaprConstraint, admm_solve, quadratic_form_matrix, sqrt_operator

    from scenarios import CODE_LENGTH, white_noise

    m = quadratic_form_matrix(white_noise(), base_scn.geom, base_scn.theta_t, CODE_LENGTH)
    constraint = PaprConstraint.from_total(base_scn.energy, base_scn.geom.n_tx, CODE_LENGTH, 1.0)
    start = time.perf_counter()
    s, report = admm_solve(
        base_scn, m, sqrt_operator(m), (1e-3, 0.2), constraint, 5.0, seed=0, record_inner=True
    )
    return {"s": s, "report": report, "constraint": constraint, "m": m, "elapsed": time.perf_counter() - start}


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split(".")[0].split()[-1])):
            terminalreporter.write_line(line)
