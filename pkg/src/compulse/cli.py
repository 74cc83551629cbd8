"""Command-line front end: config ingestion and figure-reproduction runs.

Every command materializes its full configuration (defaults included) into
a manifest JSON next to its CSV outputs, so a run can be reproduced by
re-ingesting the manifest with --config.  Angles are accepted in degrees
on this boundary and converted to radians internally.  Exit codes: 0 ok,
1 runtime failure, 2 usage error.  The only environment variable read is
COMPULSE_THREADS (optimizer restart parallelism).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .fidelity import TargetGate, fidelity_map, fidelity_slice
from .optimize import (
    OptimizerConfig,
    ParamVector,
    ascend,
    momentum_ascent,
    pulse_from_params,
    random_inits,
)
from .output import write_csv, write_json, write_manifest
from .pulses import (
    ErrorModel,
    PulseSequence,
    build_composite_pi,
    build_rectangular,
    build_rectangular_pi,
    sigma_from_fwhm,
)
from .sensing import (
    CPMG,
    DEPHASE_THRESHOLD,
    SPIN_ECHO,
    DegenerateWorkingPointError,
    ProtocolSpec,
    ReadoutModel,
    SensorParams,
    cpmg_enhancement_vs_n,
    cpmg_sensitivity_map,
    detuning_enhancement,
    suggested_delta_nodes,
    sweep_signal,
)

#: Gaussian width of delta/Omega_0 for a 2 MHz FWHM line at Omega_0 = 10 MHz
SIGMA_DELTA_DEFAULT = sigma_from_fwhm(2.0) / 10.0


class ConfigError(ValueError):
    """Invalid or unknown configuration content (a usage error)."""


def _merge(defaults: dict, override: dict, path: str = "") -> dict:
    """Deep-merge override into defaults, rejecting unknown fields."""
    out = {}
    for key, dval in defaults.items():
        if key in override:
            oval = override[key]
            if isinstance(dval, dict):
                if not isinstance(oval, dict):
                    raise ConfigError(f"config field '{path}{key}' must be an object")
                out[key] = _merge(dval, oval, f"{path}{key}.")
            elif isinstance(dval, bool):
                if not isinstance(oval, bool):
                    raise ConfigError(f"config field '{path}{key}' must be a boolean")
                out[key] = oval
            elif isinstance(dval, int):
                if isinstance(oval, bool) or not isinstance(oval, (int, float)):
                    raise ConfigError(f"config field '{path}{key}' must be an integer")
                if not float(oval).is_integer():
                    raise ConfigError(f"config field '{path}{key}' must be an integer")
                out[key] = int(oval)
            elif isinstance(dval, float):
                if isinstance(oval, bool) or not isinstance(oval, (int, float)):
                    raise ConfigError(f"config field '{path}{key}' must be a number")
                out[key] = float(oval)
            elif isinstance(dval, list):
                if not isinstance(oval, list):
                    raise ConfigError(f"config field '{path}{key}' must be a list")
                out[key] = oval
            elif isinstance(dval, str):
                if not isinstance(oval, str):
                    raise ConfigError(f"config field '{path}{key}' must be a string")
                out[key] = oval
            else:
                out[key] = oval
        else:
            out[key] = dval
    unknown = set(override) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config field(s): {sorted(path + u for u in unknown)}")
    return out


def _load_config_file(path: str, command: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    # a previously emitted manifest is accepted as a config
    if "config" in doc and "command" in doc:
        if doc["command"] != command:
            raise ConfigError(
                f"manifest was produced by '{doc['command']}', not '{command}'"
            )
        doc = doc["config"]
    return doc


ERROR_MODEL_FIDELITY = {
    "sigma_delta": SIGMA_DELTA_DEFAULT,
    "gamma_eps": 0.01,
    "n_delta_nodes": 33,
    "n_eps_nodes": 11,
    "eps_truncation": 0.3,
}

# sensing workflows keep the amplitude ensemble at percent scale; MW power
# drift is far narrower than the inhomogeneous line
ERROR_MODEL_SENSING = {
    "sigma_delta": SIGMA_DELTA_DEFAULT,
    "gamma_eps": 0.01,
    "n_delta_nodes": 33,
    "n_eps_nodes": 5,
    "eps_truncation": 0.05,
}

SENSOR_BLOCK = {
    "omega0_mhz": 10.0,
    "gamma_e_mhz_per_mt": 28.03,
    "t2star_us": 3.0,
    "t2_us": 104.0,
    "stretch": 1.5,
    "detuning_offset_mhz": 0.0,
    "cpmg_t2_exponent": 2.0 / 3.0,
}

READOUT_BLOCK = {
    "photons_per_shot": 1000,
    "contrast": 0.02,
    "shots": 1,
}

PULSE_BLOCK = {
    "kind": "composite",
    "phase_deg": 90.0,
    "dphi21_deg": 97.08,
    "dphi31_deg": -47.88,
    "phi1_deg": 0.0,
}

TARGET_BLOCK = {"kind": "best_equatorial", "phi_deg": 0.0}


def _build_error_model(block: dict) -> ErrorModel:
    return ErrorModel(
        sigma_delta=block["sigma_delta"],
        gamma_eps=block["gamma_eps"],
        n_delta_nodes=block["n_delta_nodes"],
        n_eps_nodes=block["n_eps_nodes"],
        eps_truncation=block["eps_truncation"],
    )


def _build_sensor(block: dict) -> SensorParams:
    return SensorParams(**block)


def _build_readout(block: dict) -> ReadoutModel:
    return ReadoutModel(**block)


def _build_pulse(block: dict) -> PulseSequence:
    if block["kind"] == "rectangular":
        return build_rectangular_pi(math.radians(block["phase_deg"]))
    if block["kind"] == "composite":
        return build_composite_pi(
            math.radians(block["dphi21_deg"]),
            math.radians(block["dphi31_deg"]),
            math.radians(block["phi1_deg"]),
        )
    raise ConfigError(f"unknown pulse kind {block['kind']!r}")


def _build_target(block: dict) -> TargetGate:
    if block["kind"] == "best_equatorial":
        return TargetGate.best_equatorial()
    if block["kind"] == "fixed_axis":
        return TargetGate.fixed_axis(math.radians(block["phi_deg"]))
    raise ConfigError(f"unknown target kind {block['kind']!r}")


def _out_dir(config: dict) -> Path:
    out = Path(config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _apply_overrides(config: dict, args: argparse.Namespace, mapping: dict) -> None:
    """Write provided CLI flags into their config paths."""
    for attr, path in mapping.items():
        value = getattr(args, attr, None)
        if value is None:
            continue
        node = config
        *parents, leaf = path.split(".")
        for part in parents:
            node = node[part]
        if leaf not in node:
            raise ConfigError(f"config path {path} missing")
        node[leaf] = value


# ---------------------------------------------------------------- commands


def cmd_fidelity_map(args: argparse.Namespace) -> int:
    defaults = {
        "pulse": dict(PULSE_BLOCK),
        "target": dict(TARGET_BLOCK),
        "delta_min": -2.0,
        "delta_max": 2.0,
        "delta_steps": 161,
        "omega_min": 0.01,
        "omega_max": 2.0,
        "omega_steps": 161,
        "contour_level": 0.9,
        "slice_eps": 1.0,
        "seed": 0,
        "output_dir": "out/fidelity_map",
    }
    config = _merge(defaults, _load_config_file(args.config, "fidelity-map") if args.config else {})
    _apply_overrides(
        config,
        args,
        {
            "pulse": "pulse.kind",
            "phase": "pulse.phase_deg",
            "dphi21": "pulse.dphi21_deg",
            "dphi31": "pulse.dphi31_deg",
            "phi1": "pulse.phi1_deg",
            "target": "target.kind",
            "contour_level": "contour_level",
            "out_dir": "output_dir",
            "seed": "seed",
        },
    )
    out = _out_dir(config)
    seq = _build_pulse(config["pulse"])
    target = _build_target(config["target"])
    fmap = fidelity_map(
        seq,
        target,
        (config["delta_min"], config["delta_max"]),
        (config["omega_min"], config["omega_max"]),
        (config["delta_steps"], config["omega_steps"]),
        config["contour_level"],
    )
    write_csv(out / "map.csv", ["delta_norm", "omega_norm", "fidelity"], fmap.rows())
    contour_rows = []
    for i, line in enumerate(fmap.contours):
        if i:
            contour_rows.append((float("nan"), float("nan")))
        contour_rows.extend((float(d), float(o)) for d, o in line)
    write_csv(out / "contour.csv", ["delta_norm", "omega_norm"], contour_rows)
    deltas = np.linspace(config["delta_min"], config["delta_max"], config["delta_steps"])
    sl = fidelity_slice(seq, target, deltas, eps=config["slice_eps"])
    write_csv(out / "slice.csv", ["delta_norm", "fidelity"], sl)
    write_manifest(
        out / "manifest.json",
        "fidelity-map",
        config,
        ["map.csv", "contour.csv", "slice.csv"],
        __version__,
    )
    print(f"fidelity-map: wrote {out}/map.csv ({config['delta_steps']}x{config['omega_steps']})")
    return 0


def cmd_optimize(args: argparse.Namespace) -> int:
    defaults = {
        "error_model": dict(ERROR_MODEL_FIDELITY),
        "target": dict(TARGET_BLOCK),
        "layout": "phases_only",
        "n_starts": 16,
        "learning_rate": 0.05,
        "momentum": 0.9,
        "fd_step": 1e-5,
        "max_iters": 300,
        "tol": 1e-8,
        "phi1_deg": 0.0,
        "self_test": False,
        "seed": 0,
        "output_dir": "out/optimize",
    }
    config = _merge(defaults, _load_config_file(args.config, "optimize") if args.config else {})
    _apply_overrides(
        config,
        args,
        {
            "sigma_delta": "error_model.sigma_delta",
            "gamma_eps": "error_model.gamma_eps",
            "n_starts": "n_starts",
            "layout": "layout",
            "learning_rate": "learning_rate",
            "momentum": "momentum",
            "max_iters": "max_iters",
            "out_dir": "output_dir",
            "seed": "seed",
        },
    )
    if args.self_test:
        config["self_test"] = True
    out = _out_dir(config)
    cfg = OptimizerConfig(
        learning_rate=config["learning_rate"],
        momentum=config["momentum"],
        fd_step=config["fd_step"],
        max_iters=config["max_iters"],
        tol=config["tol"],
        seed=config["seed"],
    )
    if config["self_test"]:
        # concave quadratic with a known maximum exercises the ascent loop
        p_star = np.array([0.7, -1.3])

        def toy(v: np.ndarray) -> float:
            return -float(np.sum((v - p_star) ** 2))

        run = ascend(toy, ParamVector((0.0, 0.0)), cfg)
        err = float(np.max(np.abs(np.array(run.best_params.values) - p_star)))
        doc = {
            "mode": "self_test",
            "analytic_optimum": list(p_star),
            "found": list(run.best_params.values),
            "max_abs_error": err,
            "iterations": len(run.trajectory) - 1,
        }
        write_json(out / "optrun.json", doc)
        write_manifest(out / "manifest.json", "optimize", config, ["optrun.json"], __version__)
        print(f"optimize --self-test: max |p - p*| = {err:.2e}")
        return 0 if err < 1e-4 else 1

    model = _build_error_model(config["error_model"])
    target = _build_target(config["target"])
    quad = model.quadrature()

    def run_one(init: ParamVector):
        return momentum_ascent(init, model, target, cfg)

    inits = random_inits(config["n_starts"], config["layout"], config["seed"])
    n_threads = max(1, int(os.environ.get("COMPULSE_THREADS", "1")))
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            runs = list(pool.map(run_one, inits))
    else:
        runs = [run_one(init) for init in inits]
    ok_runs = [r for r in runs if not r.failed]
    doc = {
        "config": {
            "learning_rate": cfg.learning_rate,
            "momentum": cfg.momentum,
            "fd_step": cfg.fd_step,
            "max_iters": cfg.max_iters,
            "tol": cfg.tol,
            "seed": cfg.seed,
        },
        "runs": [
            {"init": list(init.values), **run.to_json_dict()}
            for init, run in zip(inits, runs)
        ],
    }
    write_json(out / "optrun.json", doc)
    outputs = ["optrun.json"]
    if ok_runs:
        best = max(ok_runs, key=lambda r: r.best_objective)
        pulse = pulse_from_params(best.best_params, math.radians(config["phi1_deg"]))
        (out / "best_pulse.json").write_text(pulse.to_json(), encoding="utf-8")
        outputs.append("best_pulse.json")
        print(
            f"optimize: best objective {best.best_objective:.6f} over "
            f"{len(runs)} starts ({sum(r.failed for r in runs)} failed)"
        )
    write_manifest(out / "manifest.json", "optimize", config, outputs, __version__)
    if not ok_runs:
        print("optimize: every restart diverged; partial results saved", file=sys.stderr)
        return 1
    return 0


def _protocol_defaults() -> dict:
    return {
        "kind": "spin_echo",
        "n_pi": 1,
        "tau_half_us": 10.0,
        "b_amp_ut": 0.0,
        "readout_phase_deg": 0.0,
        "ideal_pulses": False,
        "phase_cycle_deg": [],
    }


def _build_protocol(block: dict, pulse: PulseSequence) -> ProtocolSpec:
    kind = block["kind"]
    if kind not in (SPIN_ECHO, CPMG):
        raise ConfigError(f"unknown protocol kind {kind!r}")
    return ProtocolSpec(
        kind=kind,
        n_pi=block["n_pi"],
        tau_half_us=block["tau_half_us"],
        b_amp_ut=block["b_amp_ut"],
        pi_pulse=pulse,
        pi_half_pulse=build_rectangular(math.pi / 2, 0.0),
        readout_phase=math.radians(block["readout_phase_deg"]),
        ideal_pulses=block["ideal_pulses"],
        phase_cycle=tuple(math.radians(v) for v in block["phase_cycle_deg"]),
    )


def cmd_sense(args: argparse.Namespace) -> int:
    defaults = {
        "error_model": dict(ERROR_MODEL_SENSING),
        "sensor": dict(SENSOR_BLOCK),
        "protocol": _protocol_defaults(),
        "pulse": dict(PULSE_BLOCK),
        "detuning_norm": 0.0,
        "axis": "tau",
        "sweep_min": 0.05,
        "sweep_max": 3.0,
        "sweep_steps": 241,
        "seed": 0,
        "output_dir": "out/sense",
    }
    config = _merge(defaults, _load_config_file(args.config, "sense") if args.config else {})
    _apply_overrides(
        config,
        args,
        {
            "pulse": "pulse.kind",
            "detuning_norm": "detuning_norm",
            "axis": "axis",
            "sweep_min": "sweep_min",
            "sweep_max": "sweep_max",
            "sweep_steps": "sweep_steps",
            "tau_half": "protocol.tau_half_us",
            "b_amp": "protocol.b_amp_ut",
            "out_dir": "output_dir",
            "seed": "seed",
        },
    )
    out = _out_dir(config)
    sensor = SensorParams(
        **{
            **config["sensor"],
            "detuning_offset_mhz": config["detuning_norm"] * config["sensor"]["omega0_mhz"],
        }
    )
    pulse = _build_pulse(config["pulse"])
    protocol = _build_protocol(config["protocol"], pulse)
    points = np.linspace(config["sweep_min"], config["sweep_max"], config["sweep_steps"])
    # resolve the detuning node count for the slowest direct-mode point, so
    # the emitted trace carries no quadrature aliasing; the manifest records
    # the node count actually used
    em = config["error_model"]
    tau_max = float(points.max()) if config["axis"] == "tau" else protocol.tau_half_us
    wrap_tau = DEPHASE_THRESHOLD / (
        2.0 * math.pi * em["sigma_delta"] * sensor.omega0_mhz
    ) if em["sigma_delta"] > 0 else tau_max
    em["n_delta_nodes"] = suggested_delta_nodes(
        em["sigma_delta"],
        sensor.omega0_mhz,
        2.0 * protocol.n_pi * min(tau_max, wrap_tau),
        minimum=em["n_delta_nodes"],
    )
    model = _build_error_model(em)
    trace = sweep_signal(protocol, sensor, model, config["axis"], points)
    write_csv(out / "trace.csv", ["x", "signal"], zip(trace.x, trace.signal))
    write_manifest(out / "manifest.json", "sense", config, ["trace.csv"], __version__)
    print(f"sense: wrote {out}/trace.csv ({config['axis']} sweep, {points.size} points)")
    return 0


def cmd_sensitivity(args: argparse.Namespace) -> int:
    defaults = {
        "error_model": dict(ERROR_MODEL_SENSING),
        "sensor": dict(SENSOR_BLOCK),
        "readout": dict(READOUT_BLOCK),
        "tau_half_us": 10.0,
        "n_pi": 1,
        "detuning_norm_min": -1.1,
        "detuning_norm_max": 1.1,
        "detuning_steps": 23,
        "overhead_us": 5.0,
        "eta_scale": 1.0,
        "seed": 0,
        "output_dir": "out/sensitivity",
    }
    config = _merge(defaults, _load_config_file(args.config, "sensitivity") if args.config else {})
    _apply_overrides(
        config,
        args,
        {
            "tau_half": "tau_half_us",
            "detuning_min": "detuning_norm_min",
            "detuning_max": "detuning_norm_max",
            "detuning_steps": "detuning_steps",
            "out_dir": "output_dir",
            "seed": "seed",
        },
    )
    out = _out_dir(config)
    model = _build_error_model(config["error_model"])
    sensor = _build_sensor(config["sensor"])
    readout = _build_readout(config["readout"])
    norms = np.linspace(
        config["detuning_norm_min"], config["detuning_norm_max"], config["detuning_steps"]
    )
    offsets = norms * sensor.omega0_mhz
    res_rect, res_comp, enh = detuning_enhancement(
        sensor,
        model,
        readout,
        offsets,
        tau_half_us=config["tau_half_us"],
        n_pi=config["n_pi"],
        overhead_us=config["overhead_us"],
    )
    scale = config["eta_scale"]
    write_csv(
        out / "fig3e.csv",
        ["detuning_norm", "eta_rect", "eta_comp", "enhancement"],
        (
            (n, a.eta_nt_per_sqrt_hz * scale, b.eta_nt_per_sqrt_hz * scale, e)
            for n, a, b, e in zip(norms, res_rect, res_comp, enh)
        ),
    )
    write_csv(out / "fig3f.csv", ["detuning_norm", "enhancement"], zip(norms, enh))
    write_manifest(
        out / "manifest.json", "sensitivity", config, ["fig3e.csv", "fig3f.csv"], __version__
    )
    print(f"sensitivity: wrote {out}/fig3e.csv and fig3f.csv ({norms.size} points)")
    return 0


def cmd_cpmg_map(args: argparse.Namespace) -> int:
    defaults = {
        "error_model": dict(ERROR_MODEL_SENSING),
        "sensor": dict(SENSOR_BLOCK),
        "readout": dict(READOUT_BLOCK),
        "n_pi_values": [1, 2, 4, 8, 16],
        "time_min_us": 10.0,
        "time_max_us": 600.0,
        "time_steps": 16,
        "contour_level": 4.0,
        "eta_scale": 1.0,
        "enhancement_detuning_norm": 1.1,
        "enhancement_tau_half_us": 1.0,
        "overhead_us": 5.0,
        "phase_cycle_deg": [0.0, 90.0],
        "seed": 0,
        "output_dir": "out/cpmg_map",
    }
    config = _merge(defaults, _load_config_file(args.config, "cpmg-map") if args.config else {})
    _apply_overrides(
        config,
        args,
        {
            "time_steps": "time_steps",
            "contour_level": "contour_level",
            "out_dir": "output_dir",
            "seed": "seed",
        },
    )
    out = _out_dir(config)
    model = _build_error_model(config["error_model"])
    sensor = _build_sensor(config["sensor"])
    readout = _build_readout(config["readout"])
    cycle = tuple(math.radians(v) for v in config["phase_cycle_deg"])
    times = np.geomspace(config["time_min_us"], config["time_max_us"], config["time_steps"])
    cmap = cpmg_sensitivity_map(
        sensor,
        model,
        readout,
        config["n_pi_values"],
        times,
        contour_level=config["contour_level"],
        eta_scale=config["eta_scale"],
        overhead_us=config["overhead_us"],
        phase_cycle=cycle,
    )
    scale = config["eta_scale"]

    def map_rows(eta):
        for i, n in enumerate(cmap.n_pi_values):
            for j, t in enumerate(cmap.total_times_us):
                yield int(n), float(t), float(eta[i, j] * scale)

    write_csv(out / "fig5a.csv", ["n_pi", "total_time_us", "eta"], map_rows(cmap.eta_comp))
    write_csv(out / "fig5a_rect.csv", ["n_pi", "total_time_us", "eta"], map_rows(cmap.eta_rect))
    contour_rows = []
    for i, line in enumerate(cmap.contours):
        if i:
            contour_rows.append((float("nan"), float("nan")))
        contour_rows.extend((float(n), float(t)) for n, t in line)
    write_csv(out / "fig5a_contour.csv", ["n_pi", "total_time_us"], contour_rows)
    enh_sensor = SensorParams(
        **{
            **config["sensor"],
            "detuning_offset_mhz": config["enhancement_detuning_norm"]
            * config["sensor"]["omega0_mhz"],
        }
    )
    rows = cpmg_enhancement_vs_n(
        enh_sensor,
        model,
        readout,
        config["n_pi_values"],
        tau_half_us=config["enhancement_tau_half_us"],
        overhead_us=config["overhead_us"],
        phase_cycle=cycle,
    )
    write_csv(
        out / "fig5b.csv",
        ["n_pi", "eta_rect", "eta_comp", "enhancement"],
        ((n, a * scale, b * scale, e) for n, a, b, e in rows),
    )
    write_manifest(
        out / "manifest.json",
        "cpmg-map",
        config,
        ["fig5a.csv", "fig5a_rect.csv", "fig5a_contour.csv", "fig5b.csv"],
        __version__,
    )
    print(f"cpmg-map: wrote {out}/fig5a.csv, fig5a_rect.csv, fig5a_contour.csv, fig5b.csv")
    return 0


def cmd_self_test(args: argparse.Namespace) -> int:
    checks = []

    from .su2 import ErrorPoint, rotation_unitary, sequence_propagator

    u = sequence_propagator(build_rectangular_pi(0.0), ErrorPoint(0.0, 1.0))
    checks.append(("resonant pi pulse is -i sigma_x", np.allclose(u, -1j * np.array([[0, 1], [1, 0]]), atol=1e-12)))
    checks.append(
        ("2pi rotation is -identity", np.allclose(rotation_unitary(2 * math.pi, (1, 0, 0)), -np.eye(2), atol=1e-12))
    )

    from .sensing import simulate_run
    from .su2 import ErrorPoint as EP

    p = ProtocolSpec(
        kind=SPIN_ECHO,
        tau_half_us=2.0,
        pi_pulse=build_rectangular_pi(0.0),
        pi_half_pulse=build_rectangular(math.pi / 2, 0.0),
        ideal_pulses=True,
    )
    p0 = simulate_run(p, EP(0.0, 1.0), SensorParams())
    checks.append(("ideal echo closes to p0=1", abs(p0 - 1.0) < 1e-12))

    cfg = OptimizerConfig(learning_rate=0.1, momentum=0.9, max_iters=500, tol=1e-12)
    target = np.array([0.7, -1.3])
    run = ascend(lambda v: -float(np.sum((v - target) ** 2)), ParamVector((0.0, 0.0)), cfg)
    checks.append(
        ("toy quadratic ascent finds optimum", float(np.max(np.abs(np.array(run.best_params.values) - target))) < 1e-6)
    )

    ok = True
    for name, passed in checks:
        print(f"self-test: {name}: {'PASS' if passed else 'FAIL'}")
        ok = ok and passed
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compulse",
        description="Composite-pulse quantum control and spin-sensor magnetometry toolkit",
    )
    parser.add_argument("--version", action="version", version=f"compulse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config (a previous manifest is accepted)")
        p.add_argument("--out-dir", dest="out_dir", help="output directory")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("fidelity-map", help="fidelity over a detuning x amplitude grid")
    common(p)
    p.add_argument("--pulse", choices=["rectangular", "composite"])
    p.add_argument("--phase", type=float, help="rectangular pulse phase (degrees)")
    p.add_argument("--dphi21", type=float, help="composite phi2-phi1 (degrees)")
    p.add_argument("--dphi31", type=float, help="composite phi3-phi1 (degrees)")
    p.add_argument("--phi1", type=float, help="composite phi1 (degrees)")
    p.add_argument("--target", choices=["best_equatorial", "fixed_axis"])
    p.add_argument("--contour-level", dest="contour_level", type=float)
    p.set_defaults(func=cmd_fidelity_map)

    p = sub.add_parser("optimize", help="momentum gradient ascent over composite phases")
    common(p)
    p.add_argument("--self-test", dest="self_test", action="store_true", help="toy quadratic mode")
    p.add_argument("--sigma-delta", dest="sigma_delta", type=float)
    p.add_argument("--gamma-eps", dest="gamma_eps", type=float)
    p.add_argument("--n-starts", dest="n_starts", type=int)
    p.add_argument("--layout", choices=["phases_only", "phases_and_angles"])
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sense", help="ensemble signal traces (tau or field sweeps)")
    common(p)
    p.add_argument("--pulse", choices=["rectangular", "composite"])
    p.add_argument("--detuning-norm", dest="detuning_norm", type=float)
    p.add_argument("--axis", choices=["tau", "b_amp"])
    p.add_argument("--sweep-min", dest="sweep_min", type=float)
    p.add_argument("--sweep-max", dest="sweep_max", type=float)
    p.add_argument("--sweep-steps", dest="sweep_steps", type=int)
    p.add_argument("--tau-half", dest="tau_half", type=float)
    p.add_argument("--b-amp", dest="b_amp", type=float)
    p.set_defaults(func=cmd_sense)

    p = sub.add_parser("sensitivity", help="sensitivity vs detuning (echo)")
    common(p)
    p.add_argument("--tau-half", dest="tau_half", type=float)
    p.add_argument("--detuning-min", dest="detuning_min", type=float)
    p.add_argument("--detuning-max", dest="detuning_max", type=float)
    p.add_argument("--detuning-steps", dest="detuning_steps", type=int)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("cpmg-map", help="CPMG sensitivity map and enhancement vs N")
    common(p)
    p.add_argument("--time-steps", dest="time_steps", type=int)
    p.add_argument("--contour-level", dest="contour_level", type=float)
    p.set_defaults(func=cmd_cpmg_map)

    p = sub.add_parser("self-test", help="quick built-in sanity checks")
    p.set_defaults(func=cmd_self_test)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DegenerateWorkingPointError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
