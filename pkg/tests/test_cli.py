from __future__ import annotations

import json

from scopetrack.cli import run
from scopetrack import io
from scopetrack.synth import generate, scenario_config


def synth_files(tmp_path, scenario="occlusion", seed=5):
    gt, pred = generate(scenario_config(scenario, seed))
    gt_path = tmp_path / "gt.jsonl"
    pred_path = tmp_path / "pred.jsonl"
    io.write_ground_truth(gt, gt_path)
    io.write_stream(pred, pred_path)
    return gt_path, pred_path


class TestTrack:
    def test_writes_tracks_and_exits_zero(self, tmp_path, capsys):
        _, pred_path = synth_files(tmp_path)
        out_path = tmp_path / "tracks.jsonl"
        code = run(["track", "--in", str(pred_path), "--out", str(out_path)])
        assert code == 0
        assert out_path.exists()
        summary = json.loads(capsys.readouterr().out)
        assert summary["config"]["algorithm"] == "query"
        assert summary["tracks"] == 3

    def test_missing_input_exits_two(self, tmp_path, capsys):
        code = run(["track", "--in", str(tmp_path / "none.jsonl"),
                    "--out", str(tmp_path / "t.jsonl")])
        assert code == 2
        assert "none.jsonl" in capsys.readouterr().err

    def test_baseline_flag(self, tmp_path, capsys):
        _, pred_path = synth_files(tmp_path)
        out_path = tmp_path / "tracks.jsonl"
        code = run(["track", "--in", str(pred_path), "--out", str(out_path),
                    "--baseline-iou"])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["config"]["algorithm"] == "iou_baseline"

    def test_deterministic_output_bytes(self, tmp_path, capsys):
        _, pred_path = synth_files(tmp_path)
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert run(["track", "--in", str(pred_path), "--out", str(a)]) == 0
        assert run(["track", "--in", str(pred_path), "--out", str(b)]) == 0
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()


class TestEval:
    def test_eval_track_pipeline(self, tmp_path, capsys):
        gt_path, pred_path = synth_files(tmp_path, scenario="static")
        tracks = tmp_path / "tracks.jsonl"
        assert run(["track", "--in", str(pred_path), "--out", str(tracks)]) == 0
        capsys.readouterr()
        code = run(["eval-track", "--pred", str(tracks), "--gt", str(gt_path)])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert result["metrics"]["HOTA"] == 100.0
        assert result["metrics"]["MOTA"] == 100.0
        assert "config" in result

    def test_eval_track_missing_pred(self, tmp_path, capsys):
        gt_path, _ = synth_files(tmp_path)
        code = run(["eval-track", "--pred", str(tmp_path / "missing.jsonl"),
                    "--gt", str(gt_path)])
        assert code == 2
        assert "missing.jsonl" in capsys.readouterr().err

    def test_eval_det(self, tmp_path, capsys):
        from scopetrack.synth import SynthConfig
        gt, pred = generate(SynthConfig(n_objects=2, n_frames=4, with_masks=True,
                                        frame_height=32, frame_width=32, seed=9))
        gt_path, pred_path = tmp_path / "gt.jsonl", tmp_path / "pred.jsonl"
        io.write_ground_truth(gt, gt_path)
        io.write_stream(pred, pred_path)
        code = run(["eval-det", "--pred", str(pred_path), "--gt", str(gt_path)])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert result["metrics"]["Dice"] == 100.0
        assert result["metrics"]["F1"] == 100.0


class TestReportCli:
    def test_text_report(self, tmp_path, capsys):
        _, pred_path = synth_files(tmp_path, scenario="static")
        tracks = tmp_path / "tracks.jsonl"
        run(["track", "--in", str(pred_path), "--out", str(tracks)])
        capsys.readouterr()
        code = run(["report", "--tracks", str(tracks), "--stream", str(pred_path),
                    "--format", "text"])
        assert code == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0].startswith("ID")
        assert len(out.strip().splitlines()) == 4  # header + 3 tracks

    def test_json_report_embeds_config(self, tmp_path, capsys):
        _, pred_path = synth_files(tmp_path, scenario="static")
        tracks = tmp_path / "tracks.jsonl"
        run(["track", "--in", str(pred_path), "--out", str(tracks)])
        capsys.readouterr()
        code = run(["report", "--tracks", str(tracks), "--stream", str(pred_path),
                    "--format", "json", "--min-frames", "2"])
        assert code == 0
        obj = json.loads(capsys.readouterr().out)
        assert obj["config"]["min_frames"] == 2
        assert len(obj["entries"]) == 3


class TestSynthCli:
    def test_writes_both_files(self, tmp_path, capsys):
        code = run(["synth", "--scenario", "swap", "--seed", "7",
                    "--out-gt", str(tmp_path / "g.jsonl"),
                    "--out-pred", str(tmp_path / "p.jsonl")])
        assert code == 0
        assert (tmp_path / "g.jsonl").exists()
        assert (tmp_path / "p.jsonl").exists()
        summary = json.loads(capsys.readouterr().out)
        assert summary["config"]["seed"] == 7

    def test_unknown_scenario_is_usage_error(self, tmp_path, capsys):
        code = run(["synth", "--scenario", "tornado", "--seed", "1",
                    "--out-gt", str(tmp_path / "g.jsonl"),
                    "--out-pred", str(tmp_path / "p.jsonl")])
        assert code == 1


class TestLossCheck:
    def test_per_frame_breakdowns(self, tmp_path, capsys):
        gt_path, pred_path = synth_files(tmp_path, scenario="static")
        code = run(["loss-check", "--pred", str(pred_path), "--gt", str(gt_path)])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        head = json.loads(lines[0])
        assert "weights" in head["config"]
        body = [json.loads(line) for line in lines[1:]]
        assert len(body) == 60
        assert all("total" in rec for rec in body)

    def test_custom_weights_file(self, tmp_path, capsys):
        gt_path, pred_path = synth_files(tmp_path, scenario="static")
        wpath = tmp_path / "w.json"
        wpath.write_text(json.dumps({"w_cls": 1.0}))
        code = run(["loss-check", "--pred", str(pred_path), "--gt", str(gt_path),
                    "--weights", str(wpath)])
        assert code == 0
        head = json.loads(capsys.readouterr().out.splitlines()[0])
        assert head["config"]["weights"]["w_cls"] == 1.0
        assert head["config"]["weights"]["w_l1"] == 5.0


class TestGlobalFlags:
    def test_no_subcommand_is_usage_error(self, capsys):
        assert run([]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_unknown_subcommand_is_usage_error(self, capsys):
        assert run(["frobnicate"]) == 1

    def test_config_file_provides_defaults_flag_wins(self, tmp_path, capsys):
        _, pred_path = synth_files(tmp_path)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"tau": 0.7, "patience": 2}))
        out = tmp_path / "t.jsonl"
        code = run(["--config", str(cfg_path), "track", "--in", str(pred_path),
                    "--out", str(out), "--tau", "0.25"])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["config"]["empty_threshold"] == 0.25  # flag beats file
        assert summary["config"]["death_patience"] == 2      # file beats default

    def test_selfcheck_passes(self, capsys):
        assert run(["selfcheck"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 3


class TestErrorPaths:
    def test_missing_config_file(self, tmp_path, capsys):
        _, pred_path = synth_files(tmp_path)
        code = run(["--config", str(tmp_path / "absent.json"), "track",
                    "--in", str(pred_path), "--out", str(tmp_path / "t.jsonl")])
        assert code == 2
        assert "absent.json" in capsys.readouterr().err

    def test_unknown_weight_keys(self, tmp_path, capsys):
        gt_path, pred_path = synth_files(tmp_path, scenario="static")
        wpath = tmp_path / "w.json"
        wpath.write_text(json.dumps({"w_frobnicate": 3.0}))
        code = run(["loss-check", "--pred", str(pred_path), "--gt", str(gt_path),
                    "--weights", str(wpath)])
        assert code == 2
        assert "w_frobnicate" in capsys.readouterr().err

    def test_loss_check_missing_pred_mask(self, tmp_path, capsys):
        from scopetrack.synth import SynthConfig, generate
        from scopetrack.model import FramePrediction, QuerySlot, VideoStream
        gt, pred = generate(SynthConfig(n_objects=1, n_frames=2, with_masks=True,
                                        frame_height=16, frame_width=16, seed=8))
        stripped = VideoStream(header=pred.header, frames=tuple(
            FramePrediction(f.frame_index, tuple(
                QuerySlot(s.embedding, s.box, s.classes, None) for s in f.slots
            )) for f in pred.frames
        ))
        gt_path, pred_path = tmp_path / "gt.jsonl", tmp_path / "pred.jsonl"
        io.write_ground_truth(gt, gt_path)
        io.write_stream(stripped, pred_path)
        code = run(["loss-check", "--pred", str(pred_path), "--gt", str(gt_path)])
        assert code == 2
        assert "mask" in capsys.readouterr().err

    def test_misaligned_frames_exit_two(self, tmp_path, capsys):
        gt_path, pred_path = synth_files(tmp_path, scenario="static")
        gt = io.read_ground_truth(gt_path)
        from scopetrack.model import GroundTruthStream
        shorter = GroundTruthStream(header=gt.header, frames=gt.frames[:-1])
        io.write_ground_truth(shorter, gt_path)
        code = run(["loss-check", "--pred", str(pred_path), "--gt", str(gt_path)])
        assert code == 2
        assert "align" in capsys.readouterr().err
