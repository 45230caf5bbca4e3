"""Command-line harness: ``mfrf {design,sweep,ser,detect,compare}``.

Every command writes CSV tables (first two lines are ``#`` comments carrying the
seed and the full resolved config) and a ``manifest.yaml`` that can be passed
back through ``--config`` to reproduce the tables byte for byte.

Exit codes: 0 success, 2 configuration error, 3 infeasible scenario,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import yaml

from . import __version__
from . import config as C
from .array_model import tx_steering
from .disturbance import quadratic_form_matrix, receive_sinr, sqrt_operator
from .energy_solver import radar_only_optimum, solve_general
from .errors import DomainError, InfeasibleError, NumericalError
from .papr_solver import admm_solve
from .report import db
from .signals_eval import (
    comm_sinr,
    detection_probability,
    jamming_power,
    nearest_symbols,
    normality_check,
    psk_constellation,
    psk_ser_approx,
    ser_monte_carlo,
)
from .structured_solver import approximate_sinr, solve_structured

log = logging.getLogger("mfrf")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


@dataclass
class Design:
    """Outcome of one solver run, reduced to what the tables need."""

    waveform: np.ndarray
    sinr_t: float
    sinr_r: float
    radar_only_t: float
    branch: str = ""
    iterations: int = 0
    converged: bool = True
    trace: list = field(default_factory=list)

    @property
    def sinr(self) -> float:
        return self.sinr_t * self.sinr_r

    @property
    def loss_db(self) -> float:
        return db(self.radar_only_t) - db(self.sinr_t)


def run_design(cfg: dict, *, solver: Optional[str] = None, energy: Optional[float] = None, desired=None) -> Design:
    """Solve the scenario described by ``cfg`` with the selected solver."""
    solver = solver or cfg["solver"]["name"]
    scn = C.scenario(cfg, desired)
    if energy is not None:
        scn = scn.with_energy(energy)
    cov = C.covariance(cfg)
    m = quadratic_form_matrix(cov, scn.geom, scn.theta_t, scn.code_length)
    _, radar_total = radar_only_optimum(m, scn.energy)

    if solver == "structured":
        sol = solve_structured(scn, cov)
        return Design(sol.waveform, sol.sinr_t, sol.sinr_r, radar_total / sol.sinr_r, branch=sol.branch)

    sinr_r = receive_sinr(cov, scn.geom, scn.theta_t)
    if solver == "energy":
        s, rep = solve_general(scn, m)
        return Design(s, rep.sinr / sinr_r, sinr_r, radar_total / sinr_r, branch=rep.extras["branch"])

    sol_cfg = cfg["solver"]
    s, rep = admm_solve(
        scn,
        m,
        sqrt_operator(m),
        sol_cfg["eps"],
        C.papr_constraint(cfg, scn.energy),
        float(sol_cfg["mu"]),
        seed=C.derived_seed(cfg, 1),
        max_iter=int(sol_cfg["max_iter"]),
    )
    return Design(
        s,
        rep.sinr_t,
        sinr_r,
        radar_total / sinr_r,
        branch="admm",
        iterations=rep.iterations,
        converged=rep.converged,
        trace=rep.trace,
    )


# -- output helpers ----------------------------------------------------------


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def _db2(x):
    """dB value rounded to 0.01 for display columns."""
    return None if x is None else f"{db(x):.2f}"


class Output:
    """Collects tables and writes them, plus the manifest, in one go."""

    def __init__(self, out_dir: Path, command: str, cfg: dict, extra: Optional[dict] = None):
        self.out_dir = Path(out_dir)
        self.command = command
        self.cfg = cfg
        self.extra = extra or {}
        self.tables = {}

    def table(self, name: str, header: List[str], rows):
        self.tables[name] = (header, [[_cell(v) for v in row] for row in rows])

    def write(self, status="ok", message=None, elapsed=None):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        files = []
        config_line = json.dumps(self.cfg, sort_keys=True, separators=(",", ":"))
        for name, (header, rows) in self.tables.items():
            path = self.out_dir / f"{name}.csv"
            with path.open("w", newline="") as fh:
                fh.write(f"# mfrf {self.command} seed={self.cfg['seed']}\n")
                fh.write(f"# config={config_line}\n")
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(header)
                writer.writerows(rows)
            files.append(path.name)
        manifest = {
            "manifest_version": 1,
            "mfrf_version": __version__,
            "command": self.command,
            "seed": self.cfg["seed"],
            "status": status,
            "outputs": files,
            **self.extra,
            "config": self.cfg,
        }
        if message:
            manifest["message"] = message
        if elapsed is not None:
            manifest["elapsed_s"] = round(float(elapsed), 3)
        with (self.out_dir / "manifest.yaml").open("w") as fh:
            yaml.safe_dump(manifest, fh, sort_keys=False)
        return files


def _map(fn, items, jobs):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- commands ----------------------------------------------------------------


def cmd_design(cfg, args, out: Output):
    desired = C.desired_signals(cfg)
    res = run_design(cfg, desired=desired)
    scn = C.scenario(cfg, desired)
    eps = cfg["solver"]["eps"] if cfg["solver"]["name"] == "papr" else None
    out.table(
        "design",
        ["solver", "branch", "energy_lin", "sinr_t_db", "sinr_r_db", "sinr_db", "radar_only_t_db", "loss_db",
         "sinr_t_lin", "sinr_r_lin", "sinr_lin", "radar_only_t_lin", "iterations", "converged"],
        [[cfg["solver"]["name"], res.branch, scn.energy, _db2(res.sinr_t), _db2(res.sinr_r), _db2(res.sinr),
          _db2(res.radar_only_t), f"{res.loss_db:.2f}", res.sinr_t, res.sinr_r, res.sinr, res.radar_only_t,
          res.iterations, res.converged]],
    )

    comm_noise = 10 ** (cfg["disturbance"]["comm_noise_power_db"] / 10)
    rows = []
    for k, theta in enumerate(scn.dirs.angles):
        emitted = tx_steering(scn.geom, theta).conj() @ res.waveform
        d = scn.desired[k]
        row = [k, "comm" if k < scn.dirs.n_comm else "jam", theta, float(np.sum(np.abs(d) ** 2)),
               float(np.sum(np.abs(emitted - d) ** 2)), None if eps is None else eps[k]]
        if k < scn.dirs.n_comm:
            row += [_db2(comm_sinr(scn, res.waveform, k, comm_noise)), None, None, None, None]
        else:
            jp = jamming_power(scn, res.waveform, k - scn.dirs.n_comm, None if eps is None else eps[k])
            row += [None, jp.power, jp.lower, jp.upper, normality_check(emitted).passed]
        rows.append(row)
    out.table(
        "directions",
        ["index", "role", "angle_deg", "desired_energy_lin", "matching_residual_lin", "eps_lin",
         "comm_sinr_db", "jam_power_lin", "jam_power_lower_lin", "jam_power_upper_lin", "normality_passed"],
        rows,
    )
    s = res.waveform
    out.table(
        "waveform",
        ["antenna", "slot", "re", "im"],
        [[n, l, s[n, l].real, s[n, l].imag] for n in range(s.shape[0]) for l in range(s.shape[1])],
    )
    if res.trace:
        n_dirs = scn.n_dirs
        out.table(
            "trace",
            ["iteration", "sinr_t_db", "sinr_t_lin", "sinr_lin"]
            + [f"matching_{k}_lin" for k in range(n_dirs)]
            + ["primal_y", "primal_v", "inner_iterations"],
            [[r["iteration"], f"{db(r['sinr_t']):.4f}", r["sinr_t"], r["sinr"], *r["matching"],
              r["primal_y"], r["primal_v"], r["inner_iterations"]] for r in res.trace],
        )
    print(f"{cfg['solver']['name']}: SINR_T {db(res.sinr_t):.2f} dB, total SINR {db(res.sinr):.2f} dB, "
          f"loss vs radar-only {res.loss_db:.2f} dB")


def cmd_sweep(cfg, args, out: Output):
    desired = C.desired_signals(cfg)
    var = cfg["sweep"]["var"]
    points = C.sweep_points(cfg)

    def one(value):
        point_cfg = C.apply_sweep(cfg, value)
        scn = C.scenario(point_cfg, desired)
        approx = approximate_sinr(scn)
        try:
            res = run_design(point_cfg, desired=desired)
        except InfeasibleError:
            return value, point_cfg, None, approx, "infeasible"
        except (DomainError, NumericalError) as exc:
            return value, point_cfg, None, approx, f"error: {exc}"
        return value, point_cfg, res, approx, "ok"

    results = _map(one, points, args.jobs)
    rows = []
    for value, pc, res, approx, status in results:
        theta_c = pc["comm"][0]["angle_deg"] if pc["comm"] else None
        theta_j = pc["jam"][0]["angle_deg"] if pc["jam"] else None
        rows.append([
            value, theta_c, theta_j,
            _db2(res.sinr_t) if res else None, _db2(approx.sinr_t) if approx.sinr_t > 0 else None,
            res.sinr_t if res else None, approx.sinr_t, approx.valid, approx.g_sos, status,
        ])
    unit = "lin" if var == "energy" else "deg"
    out.table(
        "sweep",
        [f"value_{unit}", "theta_c_deg", "theta_jam_deg", "sinr_t_db", "approx_sinr_t_db",
         "sinr_t_lin", "approx_sinr_t_lin", "approx_valid", "g_sos", "status"],
        rows,
    )
    ok = [r for r in results if r[2] is not None]
    if ok:
        lo = min(ok, key=lambda r: r[2].sinr_t)
        hi = max(ok, key=lambda r: r[2].sinr_t)
        print(f"sweep over {var}: {len(ok)}/{len(results)} points solved; min SINR_T {db(lo[2].sinr_t):.2f} dB "
              f"at {lo[0]:g}, max {db(hi[2].sinr_t):.2f} dB at {hi[0]:g}")


def cmd_ser(cfg, args, out: Output):
    if not cfg["comm"] and not cfg["jam"]:
        raise C.ConfigError(["comm/jam: the SER experiment needs at least one constrained direction"])
    desired = C.desired_signals(cfg)
    scn = C.scenario(cfg, desired)
    res = run_design(cfg, desired=desired)
    mc = cfg["monte_carlo"]
    snr_grid = C.grid(mc["snr_db"])
    trials = int(mc["trials"])
    rows = []

    def add(curve, k, points, analytic=None):
        for i, p in enumerate(points):
            rows.append([p.snr_db, k, scn.dirs.angles[k], curve, p.ser, p.stderr, p.errors, p.symbols,
                         None if analytic is None else analytic[i]])

    for k in range(scn.dirs.n_comm):
        sig = cfg["comm"][k]["signal"]
        if sig["kind"] != "psk":
            continue
        const = psk_constellation(int(sig["order"]), float(sig["amplitude"]))
        d = desired[k]
        ref = nearest_symbols(d, const)
        synth = tx_steering(scn.geom, scn.dirs.angles[k]).conj() @ res.waveform
        # Common noise realizations for both curves sharpen the comparison.
        seed = C.derived_seed(cfg, 2, k)
        analytic = psk_ser_approx(int(sig["order"]), 10 ** (snr_grid / 10))
        add("desired", k, ser_monte_carlo(d, const, snr_grid, trials, seed, reference=ref), analytic)
        add("synthesized", k, ser_monte_carlo(synth, const, snr_grid, trials, seed, reference=ref))

    victim_const = psk_constellation(8)
    for m in range(scn.dirs.n_jam):
        k = scn.dirs.n_comm + m
        rng = np.random.default_rng(C.derived_seed(cfg, 3, m))
        victim = victim_const[rng.integers(0, 8, size=scn.code_length)]
        ref = nearest_symbols(victim, victim_const)
        seed = C.derived_seed(cfg, 4, m)
        jnr = float(mc["jnr_db"])
        synth = tx_steering(scn.geom, scn.dirs.angles[k]).conj() @ res.waveform
        analytic = psk_ser_approx(8, 10 ** (snr_grid / 10))
        add("victim_no_jam", k, ser_monte_carlo(victim, victim_const, snr_grid, trials, seed, reference=ref), analytic)
        add("victim_desired_jam", k, ser_monte_carlo(victim, victim_const, snr_grid, trials, seed,
                                                      jam_signal=desired[k], jnr_db=jnr, reference=ref))
        add("victim_synthesized_jam", k, ser_monte_carlo(victim, victim_const, snr_grid, trials, seed,
                                                          jam_signal=synth, jnr_db=jnr, reference=ref))
    out.table(
        "ser",
        ["snr_db", "direction", "angle_deg", "curve", "ser", "ser_stderr", "errors", "symbols", "analytic_ser"],
        rows,
    )
    print(f"SER: {len(rows)} points over {len(snr_grid)} SNR values, {trials} trials each")


def cmd_detect(cfg, args, out: Output):
    det = cfg["detection"]
    sinr_db = C.grid(det["sinr_db"])
    p_fa = [float(p) for p in det["p_fa"]]
    out.table(
        "pd_curve",
        ["sinr_db", "p_fa", "p_d"],
        [[s, p, detection_probability(p, 10 ** (s / 10))] for p in p_fa for s in sinr_db],
    )
    rows = []
    if cfg["comm"] or cfg["jam"]:
        res = run_design(cfg)
        for p in p_fa:
            rows.append([p, cfg["solver"]["name"], _db2(res.sinr), res.sinr, detection_probability(p, res.sinr)])
            radar = res.radar_only_t * res.sinr_r
            rows.append([p, "radar_only", _db2(radar), radar, detection_probability(p, radar)])
        out.table("operating_points", ["p_fa", "system", "sinr_db", "sinr_lin", "p_d"], rows)
    print(f"detection: {len(sinr_db)} SINR points x {len(p_fa)} false-alarm levels")


def cmd_compare(cfg, args, out: Output):
    desired = C.desired_signals(cfg)
    energies = C.grid(cfg["compare"]["energies"])
    solver = cfg["solver"]["name"]

    def one(e):
        row = {"energy": e, "status": "ok", "res": None, "bench": None}
        if solver == "papr":
            try:
                row["bench"] = run_design(cfg, solver="structured", energy=e, desired=desired)
            except InfeasibleError:
                pass
        try:
            row["res"] = run_design(cfg, energy=e, desired=desired)
        except InfeasibleError:
            row["status"] = "infeasible"
        except (DomainError, NumericalError) as exc:
            row["status"] = f"error: {exc}"
        return row

    results = _map(one, energies, args.jobs)
    rows = []
    for r in results:
        res, bench = r["res"], r["bench"]
        radar = float(r["energy"]) * cfg["array"]["n_tx"]
        row = [r["energy"], _db2(res.sinr_t) if res else None, _db2(radar),
               f"{res.loss_db:.2f}" if res else None, res.sinr_t if res else None, radar,
               res.loss_db if res else None, res is not None, res.converged if res else None, r["status"]]
        if solver == "papr":
            gap = db(bench.sinr_t) - db(res.sinr_t) if (res and bench) else None
            row += [_db2(bench.sinr_t) if bench else None, None if gap is None else f"{gap:.2f}", gap]
        rows.append(row)
    header = ["energy_lin", "mfrf_sinr_db", "radar_only_db", "loss_db", "mfrf_sinr_lin", "radar_only_lin",
              "loss_db_raw", "feasible", "converged", "status"]
    if solver == "papr":
        header += ["energy_constrained_db", "gap_db", "gap_db_raw"]
    out.table("compare", header, rows)
    print(f"compare: {sum(r['res'] is not None for r in results)}/{len(results)} energies feasible")


COMMANDS = {
    "design": cmd_design,
    "sweep": cmd_sweep,
    "ser": cmd_ser,
    "detect": cmd_detect,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfrf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mfrf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default="baseline", help="config file, manifest, or preset name")
        p.add_argument("--seed", type=int, default=None, help="master seed (unsigned 64-bit)")
        p.add_argument("--out", default="mfrf_out", help="output directory")
        p.add_argument("--solver", choices=C.SOLVERS, default=None)
        p.add_argument("--format", choices=["csv"], default="csv")
        p.add_argument("--jobs", type=int, default=1, help="worker threads for grid commands")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "sweep":
            p.add_argument("--var", choices=C.SWEEP_VARS)
            p.add_argument("--from", dest="start", type=float)
            p.add_argument("--to", dest="stop", type=float)
            p.add_argument("--step", type=float)
            p.add_argument("--jam-offset", dest="jam_offset", type=float,
                           help="keep the first jamming direction this many degrees from theta_c")
        if name == "compare":
            p.add_argument("--energies", help="comma-separated transmit energies")
        if name == "ser":
            p.add_argument("--trials", type=int)
    return parser


def _overrides(args, raw):
    raw = dict(raw)
    if args.command == "sweep":
        sweep = dict(raw.get("sweep") or {})
        for key, value in (("var", args.var), ("from", args.start), ("to", args.stop),
                           ("step", args.step), ("jam_offset_deg", args.jam_offset)):
            if value is not None:
                sweep[key] = value
        if any(v is not None for v in (args.start, args.stop, args.step)):
            sweep.pop("values", None)
        raw["sweep"] = sweep
    if args.command == "compare" and args.energies:
        try:
            raw["compare"] = {"energies": [float(x) for x in args.energies.split(",") if x.strip()]}
        except ValueError:
            raise C.ConfigError([f"--energies: not a comma-separated list of numbers: {args.energies!r}"])
    if args.command == "ser" and args.trials is not None:
        raw["monte_carlo"] = {**(raw.get("monte_carlo") or {}), "trials": args.trials}
    return raw


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        raw = _overrides(args, C.load_raw(args.config))
        cfg = C.resolve(raw, seed=args.seed, solver=args.solver)
        if args.command == "sweep" and cfg.get("sweep") is None:
            raise C.ConfigError(["sweep: no sweep section; give --var, --from, --to and --step"])
        if args.jobs < 1:
            raise C.ConfigError([f"--jobs: must be >= 1, got {args.jobs}"])
    except C.ConfigError as exc:
        print(f"mfrf: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Output(Path(args.out), args.command, cfg, {"solver": cfg["solver"]["name"]})
    start = time.perf_counter()
    try:
        COMMANDS[args.command](cfg, args, out)
    except C.ConfigError as exc:
        print(f"mfrf: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        if cfg["solver"]["name"] == "papr":
            hint = "increase the matching tolerances solver.eps so the problem becomes feasible"
        elif exc.required_energy is not None:
            hint = f"raise energy to more than {exc.required_energy:.6g} or lower the desired-signal energies"
        else:
            hint = "relax the constraints"
        msg = f"{exc}; {hint}"
        print(f"mfrf: infeasible scenario: {msg}", file=sys.stderr)
        out.tables.clear()
        out.write(status="infeasible", message=msg)
        return EXIT_INFEASIBLE
    except DomainError as exc:
        print(f"mfrf: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"mfrf: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    files = out.write(elapsed=time.perf_counter() - start)
    print(f"wrote {', '.join(files + ['manifest.yaml'])} to {out.out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
