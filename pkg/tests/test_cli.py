"""End-to-end CLI wiring: every subcommand, config echo, reproducibility."""

import json
import subprocess
import sys

import numpy as np
import pytest

from motiflab.cli import main
from motiflab.numcore.checkpoint import load_checkpoint
from motiflab.synthvid.clipio import read_clip


TRAIN_CFG = {
    "frames": 4, "height": 16, "width": 16, "pool": 2, "n_clips": 4,
    "verbs": ["right", "static"], "speeds": ["fast"], "model_width": 8,
    "time_dim": 4, "frame_dim": 2, "prompt_dim": 4, "steps": 4,
    "batch_size": 2, "timesteps": 50,
}


@pytest.fixture()
def train_cfg_file(tmp_path):
    p = tmp_path / "train.json"
    p.write_text(json.dumps(TRAIN_CFG))
    return p


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["data", "--bogus-flag"])
    assert e.value.code == 2


def test_data_command(tmp_path):
    cfg = tmp_path / "data.json"
    cfg.write_text(json.dumps({"frames": 3, "height": 16, "width": 16,
                               "n_clips": 3}))
    out = tmp_path / "data"
    assert main(["data", "--config", str(cfg), "--seed", "4",
                 "--out", str(out)]) == 0
    assert (out / "index.tsv").is_file()
    assert (out / "config_echo.json").is_file()
    video, _ = read_clip(out / "clip_00000.bin")
    assert video.shape == (3, 16, 16, 3)


def test_unknown_config_key_is_error(tmp_path, capsys):
    cfg = tmp_path / "data.json"
    cfg.write_text(json.dumps({"n_clips": 1, "frmes": 4}))
    assert main(["data", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "frmes" in capsys.readouterr().err


def test_bench_flow_heatmap(tmp_path, capsys):
    bench_cfg = tmp_path / "bench.json"
    bench_cfg.write_text(json.dumps({
        "height": 16, "width": 16, "images_per_scenario": 3,
        "scenario_ids": ["s00_red_square"]}))
    assert main(["bench", "--config", str(bench_cfg), "--out",
                 str(tmp_path / "bench")]) == 0
    assert (tmp_path / "bench" / "manifest.tsv").is_file()

    data_cfg = tmp_path / "data.json"
    data_cfg.write_text(json.dumps({"frames": 4, "height": 16, "width": 16,
                                    "n_clips": 1, "verbs": ["right"]}))
    main(["data", "--config", str(data_cfg), "--out", str(tmp_path / "d")])
    clip = tmp_path / "d" / "clip_00000.bin"

    assert main(["flow", "--in", str(clip), "--out",
                 str(tmp_path / "flow.npz")]) == 0
    uv = np.load(tmp_path / "flow.npz")["uv"]
    assert uv.shape == (3, 16, 16, 2)

    assert main(["heatmap", "--in", str(clip), "--out",
                 str(tmp_path / "hm.bin")]) == 0
    hm, _ = read_clip(tmp_path / "hm.bin")
    assert hm.shape == (4, 16, 16, 1)
    stats_line = capsys.readouterr().out.splitlines()[-1]
    assert "moving=" in stats_line and "static=" in stats_line


def test_train_deterministic_checkpoints(tmp_path, train_cfg_file):
    for name in ("a", "b"):
        assert main(["train", "--config", str(train_cfg_file), "--seed", "7",
                     "--out", str(tmp_path / name)]) == 0
    pa, sa, _ = load_checkpoint(tmp_path / "a" / "checkpoint.npz")
    pb, sb, _ = load_checkpoint(tmp_path / "b" / "checkpoint.npz")
    assert sa == sb
    for k in pa.groups:
        assert np.array_equal(pa.groups[k], pb.groups[k])


def test_gen_and_eval(tmp_path, train_cfg_file):
    main(["train", "--config", str(train_cfg_file), "--seed", "1",
          "--out", str(tmp_path / "run")])
    ckpt = tmp_path / "run" / "checkpoint.npz"

    bench_cfg = tmp_path / "bench.json"
    bench_cfg.write_text(json.dumps({
        "height": 16, "width": 16, "images_per_scenario": 3,
        "scenario_ids": ["s00_red_square"], "verbs": ["left", "right", "up", "down"]}))
    main(["bench", "--config", str(bench_cfg), "--out", str(tmp_path / "bench")])

    img = next((tmp_path / "bench" / "images").glob("*.png"))
    assert main(["gen", "--ckpt", str(ckpt), "--image", str(img),
                 "--prompt", "red,right,fast", "--steps", "4",
                 "--out", str(tmp_path / "gen.bin"),
                 "--png-dir", str(tmp_path / "gen_png")]) == 0
    video, _ = read_clip(tmp_path / "gen.bin")
    assert video.shape == (4, 16, 16, 3)
    assert video.min() >= 0.0 and video.max() <= 1.0
    assert len(list((tmp_path / "gen_png").glob("*.png"))) == 4

    assert main(["eval", "--ckpt", f"toy={ckpt}", "--static-baseline",
                 "--bench", str(tmp_path / "bench"), "--steps", "4",
                 "--out", str(tmp_path / "report")]) == 0
    tsv = (tmp_path / "report" / "report.tsv").read_text().splitlines()
    assert len(tsv) == 3  # header + toy + static
    assert (tmp_path / "report" / "report.json").is_file()
    assert (tmp_path / "report" / "metrics.png").is_file()
    assert (tmp_path / "report" / "config_echo.json").is_file()


def test_gen_bench_layout(tmp_path, train_cfg_file):
    main(["train", "--config", str(train_cfg_file), "--seed", "2",
          "--out", str(tmp_path / "run")])
    bench_cfg = tmp_path / "bench.json"
    bench_cfg.write_text(json.dumps({
        "height": 16, "width": 16, "images_per_scenario": 3,
        "scenario_ids": ["s00_red_square"], "verbs": ["left", "right", "up", "down"]}))
    main(["bench", "--config", str(bench_cfg), "--out", str(tmp_path / "bench")])
    assert main(["gen", "--ckpt", str(tmp_path / "run" / "checkpoint.npz"),
                 "--bench", str(tmp_path / "bench"), "--steps", "4",
                 "--out", str(tmp_path / "videos")]) == 0
    dirs = [d for d in (tmp_path / "videos").iterdir() if d.is_dir()]
    assert dirs
    meta = json.loads((dirs[0] / "meta.json").read_text())
    assert meta["frames"] == 4
    assert (dirs[0] / "frame_0000.png").is_file()


def test_tally_matches_live_aggregate(tmp_path, capsys):
    from motiflab.annoservice import AnnotationService, SessionConfig, VoteRecord, VoteLog

    log_path = tmp_path / "votes.log"
    clock = [1000.0]
    svc = AnnotationService(log=VoteLog(log_path), clock=lambda: clock[0])
    pairs = [{"pair_id": f"p{i}", "prompt_text": "t", "image_ref": "i.png",
              "video_x": f"vx:{i}", "video_y": f"vy:{i}"} for i in range(4)]
    svc.create_session(SessionConfig("demo", "m1", "m2", required_votes=1,
                                     min_watch_seconds=10.0), pairs)
    rng = np.random.default_rng(0)
    for _ in range(4):
        task = svc.next_task("demo", "ann")
        clock[0] += 60.0
        ok, reason = svc.submit_vote("demo", VoteRecord(
            task.task_id, "ann", "left" if rng.random() < 0.5 else "right",
            ("object_motion",), 60.0))
        assert ok, reason
    live = svc.aggregate("demo").to_dict()

    assert main(["tally", "--log", str(log_path)]) == 0
    out = capsys.readouterr().out
    payload = json.loads(out[out.index("{"):])
    assert payload["demo"] == json.loads(json.dumps(live))


def test_console_script_smoke():
    proc = subprocess.run([sys.executable, "-m", "motiflab.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "tally" in proc.stdout
