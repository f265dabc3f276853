"""Command-line surface: manifests, subcommands, exit codes, artifacts."""

import json
import subprocess
import sys

import pytest

from curvediffusion.cli import (
    REPORT_SECTIONS,
    RunManifest,
    main,
    read_manifest,
    write_manifest,
)
from curvediffusion.errors import RejectedInputError
from curvediffusion.flow import FlowConfig
from curvediffusion.geometry import (
    ShapeSpec,
    generate,
    resample_uniform,
    write_curve_csv,
)

CIRCLE_MANIFEST = """\
# short round run, all report sections
shape = circle
radius = 1.0
n = 128
dt = 1e-4
max_steps = 300
output_dir = {out}
snapshot_interval = 100
svg = true
reports = hypotheses, smallness, l1-energy, waiting, decay
"""

BLOWUP_MANIFEST = """\
# n = 64 is below the resolution envelope here: its discrete length cap
# undershoots the time integral by 6e-4 relative, an artifact that is gone
# from n = 128 up
shape = lemniscate
scale = 1.0
n = 128
dt = 1.25e-5
max_steps = 100000
curvature_energy_ceiling = 60.0
output_dir = {out}
reports = l1-energy
"""


class TestManifest:
    def test_round_trip_preserves_everything(self, tmp_path):
        manifest = RunManifest(
            shape=ShapeSpec("fourier-perturbed-circle", r0=1.2,
                            modes=((2, 0.01, 0.0), (5, 0.002, 1.25))),
            flow=FlowConfig(n=192, dt=5e-5, max_time=0.25,
                            stop_when_kosc_exceeds=0.5,
                            conserve_area=False),
            output_dir="somewhere",
            snapshot_interval=123,
            svg=True,
            reports=("hypotheses", "decay"),
        )
        path = tmp_path / "m.txt"
        write_manifest(manifest, path)
        back = read_manifest(path)
        assert back.shape == manifest.shape
        assert back.flow == manifest.flow
        assert back.output_dir == manifest.output_dir
        assert back.snapshot_interval == manifest.snapshot_interval
        assert back.svg == manifest.svg
        assert back.reports == manifest.reports

    def test_minimal_manifest_uses_defaults(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("shape = circle\nmax_steps = 10\n")
        manifest = read_manifest(path)
        assert manifest.shape == ShapeSpec("circle")
        assert manifest.flow.n == 256
        assert manifest.flow.max_steps == 10
        assert manifest.output_dir == "run-output"
        assert manifest.svg is False

    def test_comments_and_blanks_are_ignored(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text(
            "# header\n\nshape = circle  # inline note\n\nmax_steps = 5\n")
        assert read_manifest(path).flow.max_steps == 5

    @pytest.mark.parametrize("body", [
        "shape = circle\nmax_steps = 10\nwhatever = 3\n",
        "shape = circle\nmax_steps = 10\nshape = ellipse\n",
        "max_steps = 10\n",
        "shape = circle\nmax_steps\n",
        "shape = circle\nmax_steps = 10\ndt = fast\n",
        "shape = circle\nmax_steps = 10\nsvg = yes\n",
        "shape = circle\nmax_steps = 10\nmodes = 2:0.01\n",
        "shape = circle\nmax_steps = 10\nreports = hypotheses, bogus\n",
    ])
    def test_malformed_manifests_rejected(self, tmp_path, body):
        path = tmp_path / "m.txt"
        path.write_text(body)
        with pytest.raises(RejectedInputError):
            read_manifest(path)


@pytest.fixture(scope="module")
def circle_outputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("sim")
    out = root / "out"
    manifest = root / "m.txt"
    manifest.write_text(CIRCLE_MANIFEST.format(out=out))
    code = main(["simulate", str(manifest)])
    return code, out


class TestSimulate:
    def test_exit_zero_and_artifacts(self, circle_outputs):
        code, out = circle_outputs
        assert code == 0
        names = {p.name for p in out.iterdir()}
        assert "manifest.txt" in names
        assert "trajectory.jsonl" in names
        assert "run.json" in names
        for step in (0, 100, 200, 300):
            assert f"snapshot_{step:08d}.csv" in names
            assert f"snapshot_{step:08d}.svg" in names

    def test_report_schema(self, circle_outputs):
        _, out = circle_outputs
        payload = json.loads((out / "run.json").read_text())
        assert payload["run"]["reason"] == "max-steps"
        assert payload["run"]["records"] == 300
        sections = payload["sections"]
        assert set(sections) == {"summary"} | set(REPORT_SECTIONS)
        assert sections["hypotheses"]["verdicts"]["admissible"]
        assert sections["summary"]["verdicts"]["length_nonincreasing"]
        assert sections["waiting"]["values"]["measure"] == 0.0
        # nothing decays on a resolution-floor circle; the section must say
        # so rather than fit noise
        assert sections["decay"]["verdicts"] == {"applicable": False}
        assert "note" in sections["decay"]

    def test_trajectory_lines_match_record_count(self, circle_outputs):
        _, out = circle_outputs
        lines = (out / "trajectory.jsonl").read_text().splitlines()
        assert len(lines) == 300

    def test_repeat_runs_byte_identical(self, tmp_path):
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / name
            manifest = tmp_path / f"{name}.txt"
            body = ("shape = circle\nn = 128\ndt = 1e-4\nmax_steps = 50\n"
                    f"output_dir = {out}\n")
            manifest.write_text(body)
            assert main(["simulate", str(manifest)]) == 0
            outputs.append((out / "trajectory.jsonl").read_bytes())
        assert outputs[0] == outputs[1]

    def test_relative_output_honors_env_root(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CURVEDIFFUSION_OUTPUT_ROOT", str(tmp_path))
        manifest = tmp_path / "m.txt"
        manifest.write_text(
            "shape = circle\nn = 128\ndt = 1e-4\nmax_steps = 20\n"
            "output_dir = nested/run\n")
        assert main(["simulate", str(manifest)]) == 0
        assert (tmp_path / "nested" / "run" / "run.json").exists()

    def test_blow_up_exits_two_with_partial_outputs(self, tmp_path, capsys):
        out = tmp_path / "out"
        manifest = tmp_path / "m.txt"
        manifest.write_text(BLOWUP_MANIFEST.format(out=out))
        code = main(["simulate", str(manifest)])
        assert code == 2
        captured = capsys.readouterr()
        assert "blow-up" in captured.out
        payload = json.loads((out / "run.json").read_text())
        assert payload["run"]["reason"] == "blow-up"
        assert payload["run"]["detail"] != ""
        assert payload["run"]["records"] > 0
        assert payload["sections"]["l1-energy"]["verdicts"]["within_bound"]
        assert (out / "trajectory.jsonl").stat().st_size > 0

    def test_missing_manifest_is_usage_error(self, tmp_path, capsys):
        assert main(["simulate", str(tmp_path / "absent.txt")]) == 1
        assert capsys.readouterr().err != ""


class TestAnalyze:
    def test_report_and_table(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("CURVEDIFFUSION_OUTPUT_ROOT", str(tmp_path))
        curve = resample_uniform(generate(ShapeSpec("lemniscate", scale=1.0), 256))
        path = tmp_path / "eight.csv"
        write_curve_csv(curve, path)
        assert main(["analyze", str(path)]) == 0
        captured = capsys.readouterr()
        assert "multiplicity" in captured.out
        assert "certificate" in captured.out
        payload = json.loads((tmp_path / "eight_report.json").read_text())
        assert set(payload) == {"curve", "metrics", "hypotheses", "crossings",
                                "embeddedness", "multiplicity_bound"}
        assert payload["crossings"]["multiplicity"] == 2
        assert payload["metrics"]["winding_number"] == 0.0
        assert not payload["hypotheses"]["verdicts"]["admissible"]
        assert payload["multiplicity_bound"]["verdicts"]["osc_energy_at_least_bound"]

    def test_missing_curve_is_usage_error(self, tmp_path):
        assert main(["analyze", str(tmp_path / "absent.csv")]) == 1


class TestVerify:
    @pytest.mark.parametrize("args", [
        ["verify", "wirtinger"],
        ["verify", "newton"],
        ["verify", "density"],
        ["verify", "multiplicity-corpus", "--seed", "7"],
    ])
    def test_fast_suites_pass(self, args, capsys):
        assert main(args) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert "checks passed" in out

    def test_flow_identity_suite_passes(self, capsys):
        assert main(["verify", "flow-identities"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert out.count("PASS") == 12

    def test_unknown_suite_lists_options(self, capsys):
        assert main(["verify", "bogus"]) == 1
        err = capsys.readouterr().err
        assert "unknown suite" in err
        assert "wirtinger" in err

    def test_bare_verify_lists_options(self, capsys):
        assert main(["verify"]) == 1
        assert "available suites" in capsys.readouterr().out


class TestUsage:
    def test_no_command(self):
        assert main([]) == 1

    def test_unknown_command(self):
        assert main(["bogus"]) == 1

    def test_help_exits_zero(self):
        assert main(["-h"]) == 0

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "curvediffusion", "verify", "wirtinger"],
            capture_output=True, text=True, timeout=300)
        assert proc.returncode == 0
        assert "checks passed" in proc.stdout
