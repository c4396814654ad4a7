import csv
import json

import numpy as np
import pytest

from coughtriage.cli import main
from coughtriage.config import RunConfig, load_config
from coughtriage.demo import make_demo_dataset, write_wav_pcm16
from coughtriage.errors import (BadLabel, ConfigError, DuplicateEntry,
                                LabelConflict, ManifestEmpty, MissingAudio)
from coughtriage.manifest import MANIFEST_HEADER, load_manifest
from coughtriage.pipeline import extract_feature_table
from coughtriage.features import DEFAULT_PARAMS


def write_manifest(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        writer.writerows(rows)


def touch_wav(path):
    path.parent.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(0)
    write_wav_pcm16(path, 0.2 * rng.standard_normal(8000), rate_hz=16000)


class TestLoadManifest:
    def test_well_formed(self, tmp_path):
        rows = []
        for p in ("alpha", "beta"):
            for c in range(5):
                rel = f"{p}/c{c}.wav"
                touch_wav(tmp_path / rel)
                rows.append((p, rel, "abnormal" if p == "alpha" else "normal"))
        write_manifest(tmp_path / "m.csv", rows)
        manifest = load_manifest(tmp_path / "m.csv")
        assert len(manifest) == 10
        assert manifest.label_of_patient() == {"alpha": 1, "beta": 0}

    def test_label_conflict(self, tmp_path):
        touch_wav(tmp_path / "a1.wav")
        touch_wav(tmp_path / "a2.wav")
        write_manifest(tmp_path / "m.csv", [("a", "a1.wav", "normal"),
                                            ("a", "a2.wav", "abnormal")])
        with pytest.raises(LabelConflict):
            load_manifest(tmp_path / "m.csv")

    def test_missing_audio(self, tmp_path):
        write_manifest(tmp_path / "m.csv", [("a", "nope.wav", "normal")])
        with pytest.raises(MissingAudio):
            load_manifest(tmp_path / "m.csv")

    def test_bad_label(self, tmp_path):
        touch_wav(tmp_path / "a.wav")
        write_manifest(tmp_path / "m.csv", [("a", "a.wav", "positive")])
        with pytest.raises(BadLabel):
            load_manifest(tmp_path / "m.csv")

    def test_duplicate_row(self, tmp_path):
        touch_wav(tmp_path / "a.wav")
        write_manifest(tmp_path / "m.csv", [("a", "a.wav", "normal"),
                                            ("a", "a.wav", "normal")])
        with pytest.raises(DuplicateEntry):
            load_manifest(tmp_path / "m.csv")

    def test_empty_manifest(self, tmp_path):
        write_manifest(tmp_path / "m.csv", [])
        with pytest.raises(ManifestEmpty):
            load_manifest(tmp_path / "m.csv")

    def test_study_scale_manifest(self, tmp_path):
        # 137 patients / 967 coughs, key sizes of the intended deployment
        counts = [8] if True else None
        rows = []
        n_rows = 0
        for i in range(137):
            pid = f"pt{i:03d}"
            label = "abnormal" if i < 49 else "normal"
            per = 7 + (i % 2) if n_rows + 8 <= 967 else 967 - n_rows
            per = min(per, 967 - n_rows)
            for c in range(per):
                rel = f"{pid}/c{c}.wav"
                touch_wav(tmp_path / rel)
                rows.append((pid, rel, label))
            n_rows += per
        # pad the tail patient so the total is exactly 967
        while n_rows < 967:
            rel = f"pt136/extra{n_rows}.wav"
            touch_wav(tmp_path / rel)
            rows.append(("pt136", rel, "normal"))
            n_rows += 1
        write_manifest(tmp_path / "m.csv", rows)
        manifest = load_manifest(tmp_path / "m.csv")
        assert len(manifest) == 967
        assert len(manifest.label_of_patient()) == 137


class TestConfig:
    def test_defaults_are_production_parameters(self):
        config = RunConfig()
        params = config.feature_params()
        assert params.frame_samples == 800
        assert params.hop_samples == 400
        assert params.n_fft == 1024
        assert params.n_filters == 40
        assert params.n_mfcc == 13
        assert config.k_outer == 4 and config.k_inner == 5
        assert config.duration_ms == 500 and config.sample_rate_hz == 16000

    def test_parse_file(self, tmp_path):
        text = "\n".join([
            "# comment",
            "models = lr, svm",
            "seed = 42",
            "threshold = 0.4",
            "jobs = 2",
            "abort_on_decode_error = true",
        ])
        (tmp_path / "run.cfg").write_text(text)
        config = load_config(tmp_path / "run.cfg")
        assert config.models == ("lr", "svm")
        assert config.seed == 42
        assert config.threshold == 0.4
        assert config.jobs == 2
        assert config.abort_on_decode_error is True

    def test_unknown_key_rejected(self, tmp_path):
        (tmp_path / "run.cfg").write_text("frame_msx = 50\n")
        with pytest.raises(ConfigError):
            load_config(tmp_path / "run.cfg")

    def test_bad_value_rejected(self, tmp_path):
        (tmp_path / "run.cfg").write_text("seed = soon\n")
        with pytest.raises(ConfigError):
            load_config(tmp_path / "run.cfg")

    def test_unknown_model_family_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig(models=("lr", "boost")).validate()


class TestExtractCommand:
    def test_extract_writes_features(self, demo_dir, tmp_path):
        out = tmp_path / "out"
        code = main(["extract", "--manifest", str(demo_dir / "manifest.csv"),
                     "--output-dir", str(out)])
        assert code == 0
        lines = (out / "features.csv").read_text().splitlines()
        assert len(lines) == 41  # header + 40 coughs
        assert len(lines[0].split(",")) == 3 + 496
        summary = json.loads((out / "run_summary.json").read_text())
        assert summary["status"] == "ok"
        assert summary["n_coughs"] == 40
        assert summary["n_decode_failures"] == 0

    def test_extract_rerun_is_byte_identical(self, demo_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["extract", "--manifest",
                         str(demo_dir / "manifest.csv"),
                         "--output-dir", str(out)]) == 0
        assert (a / "features.csv").read_bytes() == (b / "features.csv").read_bytes()

    def test_decode_failures_skipped_and_counted(self, tmp_path):
        rows = []
        for p, lab in (("a", "normal"), ("b", "abnormal")):
            for c in range(2):
                rel = f"{p}{c}.wav"
                touch_wav(tmp_path / rel)
                rows.append((p, rel, lab))
        (tmp_path / "a0.wav").write_bytes(b"RIFXgarbage-not-a-wav-file!!")
        write_manifest(tmp_path / "m.csv", rows)
        out = tmp_path / "out"
        code = main(["extract", "--manifest", str(tmp_path / "m.csv"),
                     "--output-dir", str(out)])
        assert code == 0
        summary = json.loads((out / "run_summary.json").read_text())
        assert summary["n_decode_failures"] == 1
        assert summary["n_coughs"] == 3
        lines = (out / "features.csv").read_text().splitlines()
        assert len(lines) == 4  # failures never silently dropped: 3 rows + header

    def test_abort_on_decode_error_flag(self, tmp_path):
        touch_wav(tmp_path / "ok.wav")
        (tmp_path / "bad.wav").write_bytes(b"not a wav")
        write_manifest(tmp_path / "m.csv", [("a", "ok.wav", "normal"),
                                            ("b", "bad.wav", "abnormal")])
        (tmp_path / "cfg").write_text("abort_on_decode_error = true\n")
        out = tmp_path / "out"
        code = main(["extract", "--manifest", str(tmp_path / "m.csv"),
                     "--config", str(tmp_path / "cfg"),
                     "--output-dir", str(out)])
        assert code == 1
        summary = json.loads((out / "run_summary.json").read_text())
        assert summary["status"] == "failed"

    def test_empty_manifest_fails(self, tmp_path):
        write_manifest(tmp_path / "m.csv", [])
        code = main(["extract", "--manifest", str(tmp_path / "m.csv"),
                     "--output-dir", str(tmp_path / "out")])
        assert code == 1


class TestCvCommand:
    @pytest.fixture(scope="class")
    def cv_run(self, demo_dir, tmp_path_factory):
        out = tmp_path_factory.mktemp("cvout")
        code = main(["cv", "--manifest", str(demo_dir / "manifest.csv"),
                     "--models", "lr", "--seed", "0",
                     "--output-dir", str(out)])
        return code, out

    def test_artifacts_present(self, cv_run):
        code, out = cv_run
        assert code == 0
        assert (out / "features.csv").is_file()
        for name in ("cv_report.json", "roc_points.csv", "patient_probs.csv"):
            assert (out / "lr" / name).is_file()
        summary = json.loads((out / "run_summary.json").read_text())
        assert summary["status"] == "ok"
        assert "cv_lr" in summary["timings_s"]

    def test_report_content(self, cv_run):
        _, out = cv_run
        doc = json.loads((out / "lr" / "cv_report.json").read_text())
        assert doc["model_family"] == "lr"
        assert len(doc["folds"]) == 4
        assert doc["mean"]["roc_auc"] >= 0.95  # planted separation
        probs = (out / "lr" / "patient_probs.csv").read_text().splitlines()
        assert probs[0] == "patient_id,label,mean_prob,fold"
        assert len(probs) == 9  # 8 patients
        roc = (out / "lr" / "roc_points.csv").read_text().splitlines()
        assert roc[0] == "fold,fpr,tpr,threshold"

    def test_report_command_prints_table(self, cv_run, capsys):
        _, out = cv_run
        assert main(["report", "--output-dir", str(out)]) == 0
        printed = capsys.readouterr().out
        assert "roc_auc" in printed and "lr" in printed

    def test_unknown_model_family_is_usage_error(self, demo_dir, tmp_path):
        code = main(["cv", "--manifest", str(demo_dir / "manifest.csv"),
                     "--models", "boost",
                     "--output-dir", str(tmp_path / "o")])
        assert code == 2

    def test_missing_subcommand_is_usage_error(self):
        assert main([]) == 2

    def test_env_var_overrides_output_dir(self, demo_dir, tmp_path,
                                          monkeypatch):
        env_out = tmp_path / "from_env"
        monkeypatch.setenv("COUGHTRIAGE_OUTPUT_DIR", str(env_out))
        code = main(["extract", "--manifest", str(demo_dir / "manifest.csv"),
                     "--output-dir", str(tmp_path / "ignored")])
        assert code == 0
        assert (env_out / "features.csv").is_file()
        assert not (tmp_path / "ignored").exists()

    def test_features_csv_reuse(self, cv_run, tmp_path):
        _, out = cv_run
        cfg = tmp_path / "cfg"
        cfg.write_text(f"features_csv = {out / 'features.csv'}\nmodels = lr\n")
        out2 = tmp_path / "reused"
        code = main(["cv", "--config", str(cfg), "--output-dir", str(out2)])
        assert code == 0
        assert (out2 / "lr" / "cv_report.json").read_bytes() == \
            (out / "lr" / "cv_report.json").read_bytes()


class TestParallelDeterminism:
    def test_jobs_do_not_change_features(self, demo_dir):
        manifest = load_manifest(demo_dir / "manifest.csv")
        serial, _ = extract_feature_table(manifest, DEFAULT_PARAMS, jobs=1)
        parallel, _ = extract_feature_table(manifest, DEFAULT_PARAMS, jobs=3)
        np.testing.assert_array_equal(serial.X, parallel.X)
        assert serial.cough_ids == parallel.cough_ids
