import json
import math
from pathlib import Path

import numpy as np
import pytest

from compulse.cli import main
from compulse.output import config_hash


def run(args):
    return main([str(a) for a in args])


def read_all(out_dir: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(out_dir.iterdir())}


class TestFidelityMapCommand:
    def test_rectangular_map_symmetric(self, tmp_path):
        out = tmp_path / "fmap"
        code = run(["fidelity-map", "--pulse", "rectangular", "--out-dir", out])
        assert code == 0
        rows = (out / "map.csv").read_text().strip().splitlines()
        assert rows[0] == "delta_norm,omega_norm,fidelity"
        data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
        n = int(round(math.sqrt(len(data))))
        grid = data[:, 2].reshape(n, n)
        assert np.max(np.abs(grid - grid[::-1, :])) < 1e-10

    def test_composite_slice_meets_bound(self, tmp_path):
        out = tmp_path / "fmap"
        code = run(
            [
                "fidelity-map", "--pulse", "composite",
                "--dphi21", 97.08, "--dphi31", -47.88,
                "--out-dir", out,
            ]
        )
        assert code == 0
        rows = (out / "slice.csv").read_text().strip().splitlines()[1:]
        pts = [tuple(map(float, r.split(","))) for r in rows]
        inside = [f for d, f in pts if abs(d) <= 1.1 + 1e-9]
        assert min(inside) >= 0.9

    def test_missing_required_flag_value_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["fidelity-map", "--dphi21"])  # flag without value
        assert exc.value.code == 2

    def test_unknown_config_field_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"no_such_field": 1}))
        code = run(["fidelity-map", "--config", cfg, "--out-dir", tmp_path / "x"])
        assert code == 2
        assert "unknown config field" in capsys.readouterr().err

    def test_manifest_contains_all_defaults(self, tmp_path):
        out = tmp_path / "fmap"
        run(["fidelity-map", "--pulse", "rectangular", "--out-dir", out])
        doc = json.loads((out / "manifest.json").read_text())
        assert doc["command"] == "fidelity-map"
        assert doc["config"]["contour_level"] == 0.9
        assert doc["config"]["pulse"]["kind"] == "rectangular"
        assert doc["config_sha256"] == config_hash(doc["config"])


class TestDeterminismAndRoundtrip:
    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(
                ["sensitivity", "--detuning-steps", 3, "--tau-half", 4.0,
                 "--seed", 42, "--out-dir", out]
            ) == 0
        fa, fb = read_all(a), read_all(b)
        assert set(fa) == set(fb) == {"fig3e.csv", "fig3f.csv", "manifest.json"}
        for name in fa:
            if name == "manifest.json":
                da, db = json.loads(fa[name]), json.loads(fb[name])
                da["config"].pop("output_dir"), db["config"].pop("output_dir")
                assert da["config"] == db["config"]
            else:
                assert fa[name] == fb[name]

    def test_manifest_roundtrip_reproduces_outputs(self, tmp_path):
        first = tmp_path / "first"
        assert run(["sense", "--pulse", "composite", "--detuning-norm", 1.1,
                    "--sweep-steps", 11, "--out-dir", first]) == 0
        second = tmp_path / "second"
        assert run(["sense", "--config", first / "manifest.json", "--out-dir", second]) == 0
        assert (first / "trace.csv").read_bytes() == (second / "trace.csv").read_bytes()

    def test_manifest_for_wrong_command_rejected(self, tmp_path):
        out = tmp_path / "out"
        assert run(["sense", "--sweep-steps", 3, "--out-dir", out]) == 0
        code = run(["sensitivity", "--config", out / "manifest.json", "--out-dir", tmp_path / "x"])
        assert code == 2

    def test_optimize_fixed_seed_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            cfg = {"n_starts": 2, "max_iters": 8, "error_model": {"n_delta_nodes": 9, "n_eps_nodes": 3}}
            cfg_path = tmp_path / "cfg.json"
            cfg_path.write_text(json.dumps(cfg))
            assert run(["optimize", "--config", cfg_path, "--seed", 5, "--out-dir", out]) == 0
        assert (a / "optrun.json").read_bytes() == (b / "optrun.json").read_bytes()
        assert (a / "best_pulse.json").read_bytes() == (b / "best_pulse.json").read_bytes()

    def test_best_pulse_schema(self, tmp_path):
        out = tmp_path / "opt"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n_starts": 1, "max_iters": 5,
                                   "error_model": {"n_delta_nodes": 9, "n_eps_nodes": 1}}))
        assert run(["optimize", "--config", cfg, "--out-dir", out]) == 0
        doc = json.loads((out / "best_pulse.json").read_text())
        assert set(doc) == {"label", "segments"}
        assert len(doc["segments"]) == 10
        assert set(doc["segments"][0]) == {"angle_rad", "phase_rad", "amp"}


class TestSelfTests:
    def test_self_test_command(self):
        assert run(["self-test"]) == 0

    def test_optimize_self_test(self, tmp_path):
        out = tmp_path / "st"
        assert run(["optimize", "--self-test", "--out-dir", out]) == 0
        doc = json.loads((out / "optrun.json").read_text())
        assert doc["mode"] == "self_test"
        assert doc["max_abs_error"] < 1e-4


class TestCpmgMapCommand:
    def test_outputs_and_n1_matches_sensitivity(self, tmp_path):
        out = tmp_path / "cpmg"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {
                    "n_pi_values": [1, 2],
                    "time_min_us": 20.0,
                    "time_max_us": 40.0,
                    "time_steps": 2,
                    "phase_cycle_deg": [],
                }
            )
        )
        assert run(["cpmg-map", "--config", cfg, "--out-dir", out]) == 0
        rows = (out / "fig5a.csv").read_text().strip().splitlines()[1:]
        data = [tuple(map(float, r.split(","))) for r in rows]
        assert [(int(n), t) for n, t, _ in data] == [
            (1, 20.0), (1, 40.0), (2, 20.0), (2, 40.0)
        ]

        # the N=1 cell equals a spin-echo sensitivity run at the same time
        from compulse.pulses import ErrorModel, sigma_from_fwhm
        from compulse.sensing import (
            ProtocolSpec, ReadoutModel, SensorParams, SPIN_ECHO,
            default_pulse_pair, estimate_sensitivity,
        )

        comp = default_pulse_pair()[1]
        p = ProtocolSpec(kind=SPIN_ECHO, tau_half_us=10.0, pi_pulse=comp)
        m = ErrorModel(sigma_from_fwhm(2.0) / 10.0, 0.01, 33, 5, 0.05)
        eta = estimate_sensitivity(p, SensorParams(), m, ReadoutModel()).eta_nt_per_sqrt_hz
        assert data[0][2] == pytest.approx(eta, abs=1e-12)
