import json

import numpy as np
import pytest

from humorkit import fileio
from humorkit.cli import main
from humorkit.preprocess import AnnotationSignal


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    code = main(
        [
            "synth", "--out", str(out), "--coaches", "3", "--annotators", "6",
            "--minutes", "1.5", "--videos-per-coach", "2", "--noise", "0.4", "--seed", "21",
        ]
    )
    assert code == 0
    return out


@pytest.fixture(scope="module")
def staged(corpus_dir, tmp_path_factory):
    root = tmp_path_factory.mktemp("staged")
    prep, fused, seg = root / "prep", root / "fused", root / "seg"
    assert main(["preprocess", "--annotations", str(corpus_dir / "annotations.csv"),
                 "--out", str(prep)]) == 0
    assert main(["fuse", "--annotations", str(prep / "annotations.csv"),
                 "--out", str(fused)]) == 0
    assert main(["segment", "--annotations", str(prep / "annotations.csv"),
                 "--gold", str(fused / "gold.csv"), "--drop-k", "2", "--quorum", "2",
                 "--out", str(seg)]) == 0
    return {"prep": prep, "fused": fused, "seg": seg}


class TestSynthCommand:
    def test_outputs_and_manifest(self, corpus_dir):
        for name in ("videos.csv", "annotations.csv", "ground_truth.csv", "features"):
            assert (corpus_dir / name).exists()
        manifest = json.loads((corpus_dir / "manifest-synth.json").read_text())
        assert manifest["tool"] == "humorkit" and manifest["seed"] == 21
        assert manifest["subcommand"] == "synth"

    def test_annotation_roundtrip(self, corpus_dir):
        signals = fileio.read_annotations_csv(
            corpus_dir / "annotations.csv", corpus_dir / "videos.csv"
        )
        assert signals and all(isinstance(s, AnnotationSignal) for s in signals)
        # dense length equals the declared video duration
        _, frames = fileio.read_videos_csv(corpus_dir / "videos.csv")
        for s in signals:
            assert len(s.values) == frames[s.video_id]


class TestStages:
    def test_preprocess_outputs_bounded(self, staged):
        signals = fileio.read_annotations_csv(
            staged["prep"] / "annotations.csv", staged["prep"] / "videos.csv"
        )
        for s in signals:
            assert np.all(np.abs(s.values) <= 1.0)

    def test_weights_rows_sum_to_one(self, staged):
        import csv

        sums: dict = {}
        with open(staged["fused"] / "weights.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                key = (row["coach_id"], row["dimension"])
                sums[key] = sums.get(key, 0.0) + float(row["w"])
        assert sums and all(abs(total - 1.0) < 1e-9 for total in sums.values())

    def test_segments_pass_invariants(self, staged):
        table = fileio.read_segments_csv(staged["seg"] / "segments.csv")
        table.validate()
        assert len(table) > 0

    def test_agree_and_stats_run(self, corpus_dir, staged, tmp_path):
        assert main(["agree", "--annotations", str(staged["prep"] / "annotations.csv"),
                     "--out", str(tmp_path / "agree")]) == 0
        assert (tmp_path / "agree" / "agreement_matrix.png").exists()
        assert main(["stats", "--segments", str(staged["seg"] / "segments.csv"),
                     "--out", str(tmp_path / "stats")]) == 0
        assert (tmp_path / "stats" / "humor_by_coach.png").exists()

    def test_train_eval_latefuse_chain(self, corpus_dir, staged, tmp_path):
        seg = staged["seg"] / "segments.csv"
        features = corpus_dir / "features"
        t1, t2 = tmp_path / "gru", tmp_path / "vfmm"
        assert main(["train", "--model", "gru", "--modality", "video", "--held-out", "c01",
                     "--features", str(features), "--segments", str(seg),
                     "--seed", "11", "--epochs", "3", "--patience", "2", "--hidden", "8",
                     "--out", str(t1)]) == 0
        assert main(["train", "--model", "vfmm", "--held-out", "c01",
                     "--features", str(features), "--segments", str(seg),
                     "--seed", "11", "--epochs", "3", "--patience", "2",
                     "--d", "8", "--batch-size", "2", "--out", str(t2)]) == 0
        for d in (t1, t2):
            assert (d / "checkpoint.ckpt").exists()
            assert (d / "history.csv").exists()
            assert (d / "history.png").exists()

        ev = tmp_path / "eval"
        assert main(["eval", "--predictions", str(t1 / "predictions.csv"),
                     str(t2 / "predictions.csv"), "--segments", str(seg),
                     "--out", str(ev)]) == 0
        for name in ("results.csv", "per_coach.csv", "results.txt", "individual.txt",
                     "auc_by_coach.png"):
            assert (ev / name).exists()

        lf = tmp_path / "latefuse"
        assert main(["latefuse", "--predictions", str(t1 / "predictions.csv"),
                     str(t2 / "predictions.csv"), "--out", str(lf)]) == 0
        fused_sets = fileio.read_predictions_csv(lf / "predictions.csv")
        assert len(fused_sets) == 1 and fused_sets[0].source.startswith("latefuse(")


class TestErrors:
    def test_unknown_flag_usage_exit(self, corpus_dir):
        with pytest.raises(SystemExit) as err:
            main(["synth", "--out", "/tmp/x", "--not-a-flag"])
        assert err.value.code == 2

    def test_malformed_csv_exit_2(self, tmp_path):
        bad = tmp_path / "annotations.csv"
        bad.write_text("wrong,header\n1,2\n")
        videos = tmp_path / "videos.csv"
        videos.write_text("coach_id,video_id,duration_ms\nc1,v1,2000\n")
        code = main(["preprocess", "--annotations", str(bad), "--videos", str(videos),
                     "--out", str(tmp_path / "out")])
        assert code == 2

    def test_unknown_coach_exit_2(self, corpus_dir, staged, tmp_path):
        code = main(["train", "--model", "gru", "--held-out", "nope",
                     "--features", str(corpus_dir / "features"),
                     "--segments", str(staged["seg"] / "segments.csv"),
                     "--out", str(tmp_path / "t")])
        assert code == 2

    def test_missing_subcommand_usage(self):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == 2


class TestConfigFile:
    def test_config_sections_used_and_flags_override(self, corpus_dir, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"synth": {"coaches": 2, "minutes": 1.0, "seed": 5}}))
        out = tmp_path / "from_config"
        assert main(["synth", "--out", str(out), "--config", str(config),
                     "--coaches", "1"]) == 0
        video_coach, _ = fileio.read_videos_csv(out / "videos.csv")
        assert {c for c in video_coach.values()} == {"c01"}  # flag beat config
        manifest = json.loads((out / "manifest-synth.json").read_text())
        assert manifest["config"]["minutes"] == 1.0  # config beat default
