"""Run configuration: YAML schema, validation and scenario construction.

Schema (units in brackets)::

    seed: 0                          # unsigned 64-bit master seed
    array:
      n_tx: 12                       # transmit elements
      n_rx: 12                       # receive elements
      tx_spacing: 0.5                # [wavelengths]
      rx_spacing: 0.5                # [wavelengths]
    target_deg: 0.0                  # [deg]
    code_length: 128                 # samples per antenna
    energy: 500.0                    # total transmit energy [linear]
    comm:                            # communication directions
      - angle_deg: -25.0             # [deg]
        signal: {kind: psk, order: 8, amplitude: 1.0}
    jam:                             # jamming directions
      - angle_deg: 20.0
        signal: {kind: noise, variance: 1.0}   # variance [linear]
    disturbance:
      noise_power_db: 0.0            # receiver noise power [dB]
      comm_noise_power_db: 0.0       # noise at communication receivers [dB]
      jammers:                       # external interference at the radar
        - {angle_deg: 40.0, power_db: 20.0}    # [deg], [dB]
    solver:
      name: structured               # energy | structured | papr
      rho: 1.0                       # PAPR bound (papr only)
      eps: [0.001, 0.2]              # squared matching error per direction
      mu: 5.0                        # ADMM penalty, > 2
      max_iter: 2000
    sweep: {var: theta_c, from: -40.0, to: 40.0, step: 0.5, jam_offset_deg: 24.0}
    monte_carlo: {trials: 1000, snr_db: [0, 2, 4], jnr_db: 0.0}
    detection: {p_fa: [0.01, 0.001], sinr_db: {from: -5, to: 20, step: 0.5}}
    compare: {energies: [50, 100, 500]}

Each signal may carry its own ``seed``; otherwise direction ``k`` draws from
the ``k``-th child of the master seed. Grids given as ``{from, to, step}``
include both end points.
"""

from __future__ import annotations

import copy
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import yaml

from .array_model import ArrayGeometry, DirectionSet
from .disturbance import StructuredCovariance
from .energy_solver import Scenario
from .papr_solver import PaprConstraint
from .signals_eval import DesiredSignalSpec, generate_desired

SOLVERS = ("energy", "structured", "papr")
SWEEP_VARS = ("theta_c", "theta_jam", "target_deg", "energy")

DEFAULTS: Dict[str, Any] = {
    "seed": 0,
    "array": {"n_tx": 12, "n_rx": 12, "tx_spacing": 0.5, "rx_spacing": 0.5},
    "target_deg": 0.0,
    "code_length": 128,
    "energy": 500.0,
    "comm": [],
    "jam": [],
    "disturbance": {"noise_power_db": 0.0, "comm_noise_power_db": 0.0, "jammers": []},
    "solver": {"name": "structured", "rho": 1.0, "eps": None, "mu": 5.0, "max_iter": 2000},
    "sweep": None,
    "monte_carlo": {"trials": 1000, "snr_db": {"from": 0.0, "to": 20.0, "step": 2.0}, "jnr_db": 0.0},
    "detection": {"p_fa": [1e-2, 1e-3], "sinr_db": {"from": -5.0, "to": 20.0, "step": 0.5}},
    "compare": {"energies": [50, 100, 150, 200, 300, 400, 500]},
}

_SIGNAL_DEFAULTS = {
    "psk": {"order": 8, "amplitude": 1.0},
    "noise": {"variance": 1.0},
}


class ConfigError(Exception):
    """Invalid configuration; ``problems`` lists every violated field."""

    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


def preset_names() -> List[str]:
    folder = resources.files(__package__) / "presets"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".yaml"))


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_raw(source: str) -> dict:
    """Read a config file, a preset name, or a run manifest.

    A manifest (a mapping with a ``config`` section) yields its resolved config.
    """
    path = Path(source)
    if path.is_file():
        text = path.read_text()
    elif source in preset_names():
        text = (resources.files(__package__) / "presets" / f"{source}.yaml").read_text()
    else:
        raise ConfigError([f"config: no file or preset named {source!r} (presets: {', '.join(preset_names())})"])
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"config: YAML parse error: {exc}"]) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(["config: top level must be a mapping"])
    if "manifest_version" in data and isinstance(data.get("config"), dict):
        data = data["config"]
    return data


def grid(spec) -> np.ndarray:
    """Expand ``[..]`` or ``{from, to, step}`` into an array (end points inclusive)."""
    if isinstance(spec, dict):
        lo, hi, step = float(spec["from"]), float(spec["to"]), float(spec["step"])
        if not step > 0 or hi < lo:
            return np.empty(0)
        count = int(np.floor((hi - lo) / step + 1e-9)) + 1
        return np.round(lo + step * np.arange(count), 12)
    return np.asarray(spec, dtype=float).reshape(-1)


class _Checker:
    def __init__(self):
        self.problems: List[str] = []

    def fail(self, field, message):
        self.problems.append(f"{field}: {message}")

    def number(self, cfg, key, field, *, positive=False, integer=False, lo=None, hi=None, open_range=False):
        value = cfg[key] if isinstance(cfg, list) else cfg.get(key)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(field, f"expected a number, got {value!r}")
            return None
        if integer and int(value) != value:
            self.fail(field, f"expected an integer, got {value!r}")
            return None
        if not np.isfinite(value):
            self.fail(field, "must be finite")
            return None
        if positive and not value > 0:
            self.fail(field, f"must be positive, got {value!r}")
        if lo is not None and (value <= lo if open_range else value < lo):
            self.fail(field, f"must be {'>' if open_range else '>='} {lo}, got {value!r}")
        if hi is not None and (value >= hi if open_range else value > hi):
            self.fail(field, f"must be {'<' if open_range else '<='} {hi}, got {value!r}")
        return value

    def angle(self, cfg, key, field):
        return self.number(cfg, key, field, lo=-90.0, hi=90.0, open_range=True)

    def grid(self, spec, field, *, allow_empty=False):
        if isinstance(spec, dict):
            missing = [k for k in ("from", "to", "step") if k not in spec]
            if missing:
                self.fail(field, f"missing {', '.join(missing)}")
                return None
            before = len(self.problems)
            for k in ("from", "to", "step"):
                self.number(spec, k, f"{field}.{k}")
            if len(self.problems) > before:
                return None
        elif not isinstance(spec, (list, tuple)) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in spec
        ):
            self.fail(field, "expected a list of numbers or {from, to, step}")
            return None
        values = grid(spec)
        if values.size == 0 and not allow_empty:
            self.fail(field, "grid is empty")
        return values


def _check_signal(chk, sig, field, role):
    if sig is None:
        return
    if not isinstance(sig, dict):
        chk.fail(field, "expected a mapping")
        return
    kind = sig.get("kind")
    if kind not in _SIGNAL_DEFAULTS:
        chk.fail(f"{field}.kind", f"expected 'psk' or 'noise', got {kind!r}")
        return
    unknown = set(sig) - set(_SIGNAL_DEFAULTS[kind]) - {"kind", "seed"}
    for key in sorted(unknown):
        chk.fail(f"{field}.{key}", f"unknown field for {kind} signals")
    if "order" in sig:
        chk.number(sig, "order", f"{field}.order", integer=True, lo=2)
    if "amplitude" in sig:
        chk.number(sig, "amplitude", f"{field}.amplitude", positive=True)
    if "variance" in sig:
        chk.number(sig, "variance", f"{field}.variance", positive=True)
    if sig.get("seed") is not None:
        chk.number(sig, "seed", f"{field}.seed", integer=True, lo=0)


def resolve(raw: dict, *, seed=None, solver=None) -> dict:
    """Merge defaults and overrides, then validate.

    Returns:
        The fully resolved config (plain YAML-serializable types).

    Raises:
        ConfigError: listing every violated field.
    """
    unknown = sorted(set(raw) - set(DEFAULTS))
    cfg = _merge(DEFAULTS, raw)
    if seed is not None:
        cfg["seed"] = seed
    if solver is not None:
        cfg["solver"]["name"] = solver
    for group in ("comm", "jam"):
        items = cfg.get(group) or []
        if isinstance(items, list):
            cfg[group] = [_resolve_direction(item, group) for item in items]

    chk = _Checker()
    for key in unknown:
        chk.fail(key, "unknown field")
    chk.number(cfg, "seed", "seed", integer=True, lo=0, hi=2**64 - 1)

    arr = cfg["array"]
    if not isinstance(arr, dict):
        chk.fail("array", "expected a mapping")
        arr = DEFAULTS["array"]
    n_tx = chk.number(arr, "n_tx", "array.n_tx", integer=True, lo=1)
    chk.number(arr, "n_rx", "array.n_rx", integer=True, lo=1)
    chk.number(arr, "tx_spacing", "array.tx_spacing", positive=True)
    chk.number(arr, "rx_spacing", "array.rx_spacing", positive=True)
    chk.angle(cfg, "target_deg", "target_deg")
    chk.number(cfg, "code_length", "code_length", integer=True, lo=1)
    chk.number(cfg, "energy", "energy", positive=True)

    angles = []
    for group in ("comm", "jam"):
        items = cfg[group]
        if not isinstance(items, list):
            chk.fail(group, "expected a list")
            continue
        for i, item in enumerate(items):
            field = f"{group}[{i}]"
            if not isinstance(item, dict):
                chk.fail(field, "expected a mapping with angle_deg and signal")
                continue
            for key in sorted(set(item) - {"angle_deg", "signal"}):
                chk.fail(f"{field}.{key}", "unknown field")
            theta = chk.angle(item, "angle_deg", f"{field}.angle_deg")
            if theta is not None:
                angles.append(theta)
            _check_signal(chk, item.get("signal"), f"{field}.signal", group)
    if len(set(angles)) != len(angles):
        chk.fail("comm/jam", "constrained directions must be distinct")
    if n_tx is not None and n_tx >= 1 and len(angles) >= n_tx:
        chk.fail("comm/jam", f"{len(angles)} constrained directions need n_tx > {len(angles)}")

    dist = cfg["disturbance"]
    if not isinstance(dist, dict):
        chk.fail("disturbance", "expected a mapping")
    else:
        for key in sorted(set(dist) - set(DEFAULTS["disturbance"])):
            chk.fail(f"disturbance.{key}", "unknown field")
        chk.number(dist, "noise_power_db", "disturbance.noise_power_db")
        chk.number(dist, "comm_noise_power_db", "disturbance.comm_noise_power_db")
        jammers = dist.get("jammers") or []
        if not isinstance(jammers, list):
            chk.fail("disturbance.jammers", "expected a list")
        else:
            for i, jm in enumerate(jammers):
                field = f"disturbance.jammers[{i}]"
                if not isinstance(jm, dict):
                    chk.fail(field, "expected a mapping with angle_deg and power_db")
                    continue
                chk.angle(jm, "angle_deg", f"{field}.angle_deg")
                chk.number(jm, "power_db", f"{field}.power_db")

    sol = cfg["solver"]
    if not isinstance(sol, dict):
        chk.fail("solver", "expected a mapping")
    else:
        for key in sorted(set(sol) - set(DEFAULTS["solver"])):
            chk.fail(f"solver.{key}", "unknown field")
        if sol.get("name") not in SOLVERS:
            chk.fail("solver.name", f"expected one of {', '.join(SOLVERS)}, got {sol.get('name')!r}")
        length = cfg.get("code_length")
        rho = chk.number(sol, "rho", "solver.rho", lo=1.0)
        if rho is not None and isinstance(length, int) and rho > length:
            chk.fail("solver.rho", f"must not exceed code_length {length}")
        mu = chk.number(sol, "mu", "solver.mu")
        if mu is not None and not mu > 2:
            chk.fail("solver.mu", f"must exceed 2, got {mu!r}")
        chk.number(sol, "max_iter", "solver.max_iter", integer=True, lo=1)
        eps = sol.get("eps")
        if sol.get("name") == "papr":
            if not isinstance(eps, list):
                chk.fail("solver.eps", "papr needs one matching tolerance per constrained direction")
            else:
                if len(eps) != len(cfg["comm"]) + len(cfg["jam"]):
                    chk.fail("solver.eps", f"{len(eps)} tolerances for {len(cfg['comm']) + len(cfg['jam'])} directions")
                for i in range(len(eps)):
                    chk.number(eps, i, f"solver.eps[{i}]", positive=True)

    sweep = cfg.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict):
            chk.fail("sweep", "expected a mapping")
        else:
            for key in sorted(set(sweep) - {"var", "from", "to", "step", "values", "jam_offset_deg"}):
                chk.fail(f"sweep.{key}", "unknown field")
            var = sweep.get("var")
            if var not in SWEEP_VARS:
                chk.fail("sweep.var", f"expected one of {', '.join(SWEEP_VARS)}, got {var!r}")
            elif var == "theta_c" and not cfg["comm"]:
                chk.fail("sweep.var", "theta_c needs a communication direction")
            elif var == "theta_jam" and not cfg["jam"]:
                chk.fail("sweep.var", "theta_jam needs a jamming direction")
            offset = sweep.get("jam_offset_deg")
            if offset is not None:
                chk.number(sweep, "jam_offset_deg", "sweep.jam_offset_deg")
                if var != "theta_c":
                    chk.fail("sweep.jam_offset_deg", "only applies to theta_c sweeps")
                elif not cfg["jam"]:
                    chk.fail("sweep.jam_offset_deg", "needs a jamming direction")
            spec = sweep.get("values", {k: sweep.get(k) for k in ("from", "to", "step")})
            values = chk.grid(spec, "sweep")
            if values is not None and values.size and var in ("theta_c", "theta_jam", "target_deg"):
                swept = values + (float(offset) if var == "theta_c" and isinstance(offset, (int, float)) else 0.0)
                if np.any(np.abs(values) >= 90) or np.any(np.abs(swept) >= 90):
                    chk.fail("sweep", "swept angles must stay inside (-90, 90)")
            if values is not None and values.size and var == "energy" and np.any(values <= 0):
                chk.fail("sweep", "swept energies must be positive")

    mc = cfg["monte_carlo"]
    if not isinstance(mc, dict):
        chk.fail("monte_carlo", "expected a mapping")
    else:
        chk.number(mc, "trials", "monte_carlo.trials", integer=True, lo=1)
        chk.grid(mc.get("snr_db"), "monte_carlo.snr_db")
        chk.number(mc, "jnr_db", "monte_carlo.jnr_db")

    det = cfg["detection"]
    if not isinstance(det, dict):
        chk.fail("detection", "expected a mapping")
    else:
        pfa = det.get("p_fa")
        if not isinstance(pfa, list) or not pfa:
            chk.fail("detection.p_fa", "expected a nonempty list")
        else:
            for i in range(len(pfa)):
                chk.number(pfa, i, f"detection.p_fa[{i}]", lo=0.0, hi=1.0, open_range=True)
        chk.grid(det.get("sinr_db"), "detection.sinr_db")

    cmp_ = cfg["compare"]
    if not isinstance(cmp_, dict):
        chk.fail("compare", "expected a mapping")
    else:
        values = chk.grid(cmp_.get("energies"), "compare.energies")
        if values is not None and np.any(values <= 0):
            chk.fail("compare.energies", "energies must be positive")

    if chk.problems:
        raise ConfigError(chk.problems)
    return _plain(cfg)


def _resolve_direction(item, group):
    if not isinstance(item, dict):
        return item
    item = dict(item)
    sig = item.get("signal")
    if sig is None:
        sig = {"kind": "psk"} if group == "comm" else {"kind": "noise"}
    if isinstance(sig, dict) and sig.get("kind") in _SIGNAL_DEFAULTS:
        sig = {**_SIGNAL_DEFAULTS[sig["kind"]], **sig}
    item["signal"] = sig
    return item


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# -- construction ------------------------------------------------------------


def geometry(cfg) -> ArrayGeometry:
    a = cfg["array"]
    return ArrayGeometry(int(a["n_tx"]), int(a["n_rx"]), float(a["tx_spacing"]), float(a["rx_spacing"]))


def desired_signals(cfg) -> np.ndarray:
    """One row per direction (communication first), reproducible from the seed."""
    items = cfg["comm"] + cfg["jam"]
    children = np.random.SeedSequence(int(cfg["seed"])).spawn(len(items))
    rows = []
    for item, child in zip(items, children):
        sig = item["signal"]
        seed = sig.get("seed")
        seed = child if seed is None else int(seed)
        if sig["kind"] == "psk":
            spec = DesiredSignalSpec.psk(int(sig["order"]), cfg["code_length"], float(sig["amplitude"]), seed)
        else:
            spec = DesiredSignalSpec.noise_like(cfg["code_length"], float(sig["variance"]), seed)
        rows.append(generate_desired(spec))
    if not rows:
        return np.zeros((0, cfg["code_length"]), dtype=complex)
    return np.array(rows)


def directions(cfg) -> DirectionSet:
    return DirectionSet.from_groups(
        [float(c["angle_deg"]) for c in cfg["comm"]], [float(j["angle_deg"]) for j in cfg["jam"]]
    )


def scenario(cfg, desired=None) -> Scenario:
    if desired is None:
        desired = desired_signals(cfg)
    return Scenario(geometry(cfg), float(cfg["target_deg"]), directions(cfg), desired, float(cfg["energy"]))


def covariance(cfg) -> StructuredCovariance:
    dist = cfg["disturbance"]
    jammers = tuple(
        (float(j["angle_deg"]), 10 ** (float(j["power_db"]) / 10)) for j in dist.get("jammers") or []
    )
    return StructuredCovariance(10 ** (float(dist["noise_power_db"]) / 10), jammers, int(cfg["code_length"]))


def papr_constraint(cfg, energy=None) -> PaprConstraint:
    energy = float(cfg["energy"]) if energy is None else energy
    return PaprConstraint.from_total(energy, int(cfg["array"]["n_tx"]), int(cfg["code_length"]), float(cfg["solver"]["rho"]))


def sweep_points(cfg) -> np.ndarray:
    sweep = cfg["sweep"]
    return grid(sweep.get("values", {k: sweep[k] for k in ("from", "to", "step")}))


def apply_sweep(cfg, value) -> dict:
    """Config with the sweep variable set to ``value``."""
    out = copy.deepcopy(cfg)
    var = cfg["sweep"]["var"]
    if var == "theta_c":
        out["comm"][0]["angle_deg"] = float(value)
        offset = cfg["sweep"].get("jam_offset_deg")
        if offset is not None:
            out["jam"][0]["angle_deg"] = float(value) + float(offset)
    elif var == "theta_jam":
        out["jam"][0]["angle_deg"] = float(value)
    elif var == "target_deg":
        out["target_deg"] = float(value)
    else:
        out["energy"] = float(value)
    return out


def derived_seed(cfg, *key) -> int:
    """Non-negative integer seed for an auxiliary stream named by ``key``."""
    return int(np.random.SeedSequence([int(cfg["seed"]), *key]).generate_state(1, np.uint64)[0] >> 1)
