import json
import subprocess
import sys

import pytest

from emgmex.cli import run


def invoke(capsys, *argv):
    code = run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def invoke_json(capsys, *argv):
    code, out, err = invoke(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


@pytest.fixture
def fixture_dir(tmp_path, capsys):
    out_dir = tmp_path / "fixtures"
    invoke_json(
        capsys, "synth", "--out-dir", str(out_dir), "--count", "6", "--seed", "7"
    )
    return out_dir


class TestSynth:
    def test_writes_segments_truth_and_manifest(self, fixture_dir):
        assert (fixture_dir / "seg-000.csv").exists()
        assert (fixture_dir / "seg-000.json").exists()
        assert (fixture_dir / "seg-005.csv").exists()
        truth = json.loads((fixture_dir / "truth.json").read_text())
        assert len(truth) == 6
        manifest = json.loads((fixture_dir / "manifest.json").read_text())
        assert manifest["seed"] == 7
        assert len(manifest["segments"]) == 6

    def test_byte_stable_given_seed(self, tmp_path, capsys):
        for name in ("a", "b"):
            invoke_json(
                capsys, "synth", "--out-dir", str(tmp_path / name),
                "--count", "2", "--seed", "3",
            )
        for rel in ("seg-000.csv", "seg-001.csv", "truth.json", "manifest.json"):
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


class TestPreprocess:
    def test_envelope_output(self, fixture_dir, tmp_path, capsys):
        out = tmp_path / "env.csv"
        payload = invoke_json(
            capsys, "preprocess",
            "--recording", str(fixture_dir / "seg-000.csv"), "--out", str(out),
        )
        assert payload["domain"] == "envelope"
        sidecar = json.loads(out.with_suffix(".json").read_text())
        assert sidecar["domain"] == "envelope"

    def test_intermediate_stage(self, fixture_dir, tmp_path, capsys):
        out = tmp_path / "rect.csv"
        payload = invoke_json(
            capsys, "preprocess", "--recording", str(fixture_dir / "seg-000.csv"),
            "--out", str(out), "--stage", "rect",
        )
        assert payload["domain"] == "rect"


class TestSpot:
    def test_defaults_are_reference_optimum(self, fixture_dir, tmp_path, capsys):
        out = tmp_path / "det.json"
        invoke_json(
            capsys, "spot", "--recording", str(fixture_dir / "seg-000.csv"),
            "--out", str(out), "--no-figures",
        )
        detections = json.loads(out.read_text())
        assert detections["params"] == {
            "window_len": 60, "step": 30, "threshold_scale": 1.0,
            "min_run": 5, "back_windows": 2, "fwd_windows": 6,
        }
        assert detections["mode"] == "tightest"
        assert detections["segments"][0]["preprocessed"] is True
        assert len(detections["segments"][0]["intervals"]) == 1

    def test_batch_byte_stable(self, fixture_dir, tmp_path, capsys):
        outs = []
        for name in ("d1.json", "d2.json"):
            out = tmp_path / name
            invoke_json(
                capsys, "spot", "--recording-dir", str(fixture_dir),
                "--out", str(out), "--no-figures",
            )
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_single_recording_renders_figure(self, fixture_dir, tmp_path, capsys):
        out = tmp_path / "det.json"
        payload = invoke_json(
            capsys, "spot", "--recording", str(fixture_dir / "seg-001.csv"),
            "--out", str(out),
        )
        assert (tmp_path / "det_envelope.png").exists()
        assert str(tmp_path / "det_envelope.png") in payload["files"]


class TestGoldenPipeline:
    def test_synth_preprocess_spot_eval_chain(self, fixture_dir, tmp_path, capsys):
        env_dir = tmp_path / "env"
        for i in range(6):
            invoke_json(
                capsys, "preprocess",
                "--recording", str(fixture_dir / f"seg-{i:03d}.csv"),
                "--out", str(env_dir / f"seg-{i:03d}.csv"),
            )
        det = tmp_path / "det.json"
        invoke_json(
            capsys, "spot", "--recording-dir", str(env_dir),
            "--out", str(det), "--no-figures",
        )
        detections = json.loads(det.read_text())
        assert all(not s["preprocessed"] for s in detections["segments"])
        report_path = tmp_path / "report.json"
        summary = invoke_json(
            capsys, "eval", "--pred", str(det),
            "--truth", str(fixture_dir / "truth.json"),
            "--out", str(report_path), "--no-figures",
        )
        assert summary["mean_iou"] >= 0.8
        report = json.loads(report_path.read_text())
        assert report["n_total"] == 6
        assert report["mean_iou"] >= 0.8

    def test_spot_on_raw_matches_explicit_preprocess(self, fixture_dir, tmp_path, capsys):
        raw_det = tmp_path / "raw_det.json"
        invoke_json(
            capsys, "spot", "--recording-dir", str(fixture_dir),
            "--out", str(raw_det), "--no-figures",
        )
        segments = json.loads(raw_det.read_text())["segments"]
        assert all(s["preprocessed"] for s in segments)
        assert all(len(s["intervals"]) == 1 for s in segments)

    def test_eval_renders_figures(self, fixture_dir, tmp_path, capsys):
        det = tmp_path / "det.json"
        invoke_json(
            capsys, "spot", "--recording-dir", str(fixture_dir),
            "--out", str(det), "--no-figures",
        )
        report_path = tmp_path / "report.json"
        payload = invoke_json(
            capsys, "eval", "--pred", str(det),
            "--truth", str(fixture_dir / "truth.json"), "--out", str(report_path),
        )
        assert (tmp_path / "report_iou_hist.png").exists()
        assert (tmp_path / "report_moment_errors.png").exists()
        assert len(payload["files"]) == 3


class TestSweep:
    def test_grid_ranked_by_mean_iou(self, fixture_dir, tmp_path, capsys):
        out = tmp_path / "sweep.json"
        payload = invoke_json(
            capsys, "sweep", "--recording-dir", str(fixture_dir),
            "--truth", str(fixture_dir / "truth.json"), "--out", str(out),
            "--k", "1.0", "6.0", "--sn", "5",
        )
        assert payload["combinations"] == 2
        results = json.loads(out.read_text())["results"]
        assert results[0]["mean_iou_all"] >= results[1]["mean_iou_all"]
        assert results[0]["params"]["threshold_scale"] == 1.0


class TestStats:
    def test_ttest_summary_matches_reference_row(self, capsys):
        payload = invoke_json(
            capsys, "stats", "ttest", "--summary", "147,23.09,21.27,233,8.11,8.54"
        )
        assert payload["t"] == pytest.approx(9.60, abs=0.05)
        assert payload["df"] == 378
        assert payload["cohens_d"] == pytest.approx(1.01, abs=0.01)
        assert "t(378) = 9.60" in payload["summary"]
        assert "d = 1.01" in payload["summary"]

    def test_chisq_table(self, capsys):
        payload = invoke_json(capsys, "stats", "chisq", "--table", "17,39;216,108")
        assert payload["chi2"] == pytest.approx(26.54, abs=0.1)
        assert payload["cramers_v"] == pytest.approx(0.26, abs=0.01)
        assert payload["df"] == 1

    def test_ci_summary(self, capsys):
        payload = invoke_json(
            capsys, "stats", "ci", "--summary", "0.317,0.0775,233", "--level", "0.95"
        )
        assert payload["lower"] < 0.317 < payload["upper"]

    def test_regress_and_kmeans_on_indicators(self, tmp_path, capsys):
        rows = ["expr_id,channel,peak,mvc_percent,iemg,duration_ms,type"]
        import numpy as np

        rng = np.random.default_rng(5)
        for i in range(40):
            rows.append(f"me-{i},c5,0.1,{rng.normal(8.1, 1.0):.4f},0.02,{rng.normal(317, 15):.1f},ME")
        for i in range(30):
            rows.append(f"mae-{i},c5,0.3,{rng.normal(23.1, 2.0):.4f},0.2,{rng.normal(1160, 40):.1f},MaE")
        csv_path = tmp_path / "indicators.csv"
        csv_path.write_text("\n".join(rows) + "\n")

        regress = invoke_json(capsys, "stats", "regress", "--indicators", str(csv_path))
        assert regress["slope"] > 0
        assert regress["p"] < 0.05

        out = tmp_path / "clusters.json"
        kmeans = invoke_json(
            capsys, "stats", "kmeans", "--indicators", str(csv_path),
            "--k", "2", "--seed", "1", "--out", str(out),
        )
        clusters = json.loads(out.read_text())
        labels = clusters["assignments"]
        assert len(set(labels[:40])) == 1
        assert len(set(labels[40:])) == 1
        assert (tmp_path / "clusters_clusters.png").exists()

    def test_ttest_from_indicator_groups(self, tmp_path, capsys):
        rows = ["expr_id,channel,peak,mvc_percent,iemg,duration_ms,type"]
        for i in range(20):
            rows.append(f"a{i},c1,0.1,{8 + i * 0.1},0.02,300,ME")
            rows.append(f"b{i},c1,0.3,{20 + i * 0.2},0.2,900,MaE")
        csv_path = tmp_path / "ind.csv"
        csv_path.write_text("\n".join(rows) + "\n")
        payload = invoke_json(
            capsys, "stats", "ttest", "--indicators", str(csv_path), "--value", "mvc_percent"
        )
        assert payload["df"] == 38
        assert payload["t"] > 0


class TestIndicatorsCommand:
    def test_csv_and_figures(self, fixture_dir, tmp_path, capsys):
        mvc_path = tmp_path / "mvc.json"
        mvc_path.write_text(json.dumps({"mvc": {"c1": 0.5}}))
        out = tmp_path / "indicators.csv"
        payload = invoke_json(
            capsys, "indicators",
            "--recording", str(fixture_dir / "seg-000.csv"),
            "--annotations", str(fixture_dir / "truth.json"),
            "--mvc", str(mvc_path), "--out", str(out),
        )
        assert payload["rows"] == 1
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "expr_id,channel,peak,mvc_percent,iemg,duration_ms,type"
        assert len(lines) == 2
        assert (tmp_path / "indicators_duration_hist.png").exists()
        assert (tmp_path / "indicators_intensity_hist.png").exists()


class TestCalibrate:
    def test_mvc_from_trials(self, tmp_path, capsys):
        from emgmex import synth
        from emgmex.model import save_recording

        for i in range(3):
            seg = synth.single_burst_segment(
                0.8, snr_db=30.0, seed=50 + i, peak_amplitude=1.0 + 0.2 * i,
                recording_id=f"trial-{i}",
            )
            save_recording(seg.recording, tmp_path / f"trial-{i}.csv")
        out = tmp_path / "mvc.json"
        invoke_json(
            capsys, "calibrate",
            "--trial", str(tmp_path / "trial-0.csv"),
            "--trial", str(tmp_path / "trial-1.csv"),
            "--trial", str(tmp_path / "trial-2.csv"),
            "--out", str(out),
        )
        payload = json.loads(out.read_text())
        assert set(payload["mvc"]) == {"c1"}
        assert len(payload["trials"]["c1"]) == 3
        assert payload["mvc"]["c1"] == max(payload["trials"]["c1"])


class TestErrors:
    def test_missing_file_yields_json_error(self, capsys):
        code, out, err = invoke(
            capsys, "preprocess", "--recording", "missing.csv", "--out", "x.csv"
        )
        assert code == 1
        error = json.loads(err)
        assert error["error"]["type"] == "FormatError"
        assert "missing.csv" in error["error"]["message"]

    def test_unknown_flag_yields_json_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            run(["spot", "--bogus"])
        assert exc_info.value.code == 2
        error = json.loads(capsys.readouterr().err)
        assert error["error"]["type"] == "UsageError"

    def test_bad_summary_shape(self, capsys):
        code, out, err = invoke(capsys, "stats", "ttest", "--summary", "1,2,3")
        assert code == 1
        assert json.loads(err)["error"]["type"] == "DomainError"


def test_console_entry_point_version():
    result = subprocess.run(
        [sys.executable, "-m", "emgmex.cli", "--version"],
        capture_output=True, text=True,
    )
    assert result.returncode == 0
    assert "emgmex 0.1.0" in result.stdout


def test_subcommand_help_and_version():
    commands = ("synth", "preprocess", "calibrate", "indicators", "spot",
                "sweep", "eval", "stats", "serve")
    for command in commands:
        result = subprocess.run(
            [sys.executable, "-m", "emgmex.cli", command, "--help"],
            capture_output=True, text=True,
        )
        assert result.returncode == 0, command
        assert "usage" in result.stdout.lower()
        result = subprocess.run(
            [sys.executable, "-m", "emgmex.cli", command, "--version"],
            capture_output=True, text=True,
        )
        assert result.returncode == 0, command
        assert "emgmex 0.1.0" in result.stdout


def test_stats_subcommand_version():
    result = subprocess.run(
        [sys.executable, "-m", "emgmex.cli", "stats", "ttest", "--version"],
        capture_output=True, text=True,
    )
    assert result.returncode == 0
    assert "emgmex 0.1.0" in result.stdout
