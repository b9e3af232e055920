import csv
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from curdrive.checkpoint import load_policy
from curdrive.config import desk_profile
from curdrive.curriculum import AgentVariant
from curdrive.harness import (
    EVAL,
    RECORD_FIELDS,
    TRAIN,
    Agent,
    collect_frames,
    random_policy_checkpoint,
    read_records,
    run_batch,
    run_eval,
    run_training,
    smooth,
    write_records,
)
from curdrive.ppo import PpoHyper
from curdrive.sim import EnvConfig
from curdrive.track import TrackSpec


def tiny(tmp_path, kind="CuRLA", episodes=6, seed=0, name="run", **variant):
    base = desk_profile(kind)
    v = dict(switch_episode=3, total_episodes=episodes, traffic_max=2, traffic_ramp_episodes=2)
    v.update(variant)
    return replace(
        base,
        variant=AgentVariant(kind, **v),
        env=EnvConfig(laps_to_finish=1, low_speed_timeout=1.0),
        track=TrackSpec(shape="circle", radius=30.0),
        ppo=PpoHyper(horizon=32, hidden_sizes=(8, 8)),
        eval_every=2,
        checkpoint_every=3,
        seed=seed,
        output_dir=str(tmp_path / name),
    )


def test_smooth_examples():
    assert smooth([1.0, 1.0, 1.0], 0.999).tolist() == [1.0, 1.0, 1.0]
    assert smooth([0.0, 1.0], 0.5).tolist() == [0.0, 0.5]
    assert smooth([2.0, 4.0, 8.0], 0.0).tolist() == [2.0, 4.0, 8.0]
    step = smooth([0.0] * 5 + [1.0] * 300, 0.999)
    k = np.arange(1, 301)
    assert np.allclose(step[5:], 1.0 - 0.999 ** k, atol=1e-12)
    with pytest.raises(ValueError):
        smooth([1.0], 1.0)
    with pytest.raises(ValueError):
        smooth([], 0.5)


def test_one_episode_run(tmp_path):
    cfg = tiny(tmp_path, episodes=1)
    res = run_training(cfg)
    phases = [r.phase for r in res.records]
    assert phases == [TRAIN, EVAL]
    assert res.final_checkpoint.is_file()
    for name in ("records.csv", "updates.csv", "config.json", "summary.json"):
        assert (res.out_dir / name).is_file()


def test_training_outputs(tmp_path):
    cfg = tiny(tmp_path, episodes=6)
    res = run_training(cfg)
    train = [r for r in res.records if r.phase == TRAIN]
    evals = [r for r in res.records if r.phase == EVAL]
    assert [r.episode for r in train] == list(range(6))
    assert [r.episode for r in evals] == [0, 2, 4]
    # curriculum: no traffic before the switch, ramp afterwards
    assert [r.traffic_count for r in train] == [0, 0, 0, 1, 2, 2]
    circumference = 2 * math.pi * 30.0
    for r in res.records:
        # distance_pct / 100 * L equals the driven distance; average speed is distance over sim time
        driven = r.distance_pct / 100 * circumference
        assert r.avg_speed_kmh == pytest.approx(driven / (r.steps * cfg.env.dt) * 3.6, rel=2e-3)
        assert -r.steps <= r.episodic_reward <= r.steps
        assert r.distance_pct >= 0 and r.avg_speed_kmh >= 0 and r.collision_count >= 0
        assert r.termination_reason in ("laps_done", "off_center", "stalled")
    assert sorted(p.name for p in (res.out_dir / "checkpoints").iterdir()) == ["ep00003.bin", "ep00006.bin"]
    assert read_records(res.records_csv) == res.records
    summary = json.loads((res.out_dir / "summary.json").read_text())
    assert summary["episodes"] == 6 and summary["variant"] == "CuRLA"


def test_training_is_deterministic(tmp_path):
    a = run_training(tiny(tmp_path, name="a", episodes=5, seed=3))
    b = run_training(tiny(tmp_path, name="b", episodes=5, seed=3))
    for name in ("records.csv", "updates.csv", "final.bin"):
        assert (a.out_dir / name).read_bytes() == (b.out_dir / name).read_bytes()
    c = run_training(tiny(tmp_path, name="c", episodes=5, seed=4))
    assert (a.out_dir / "final.bin").read_bytes() != (c.out_dir / "final.bin").read_bytes()


def test_eval_from_checkpoint(tmp_path):
    cfg = tiny(tmp_path, episodes=2)
    res = run_training(cfg)
    e1 = run_eval(res.final_checkpoint, cfg, 2, traffic_count=1)
    e2 = run_eval(res.final_checkpoint, cfg, 2, traffic_count=1)
    assert e1 == e2 and len(e1) == 2
    assert all(r.phase == EVAL and r.traffic_count == 1 for r in e1)


def test_random_checkpoint_matches_initial_weights(tmp_path):
    cfg = tiny(tmp_path, episodes=1)
    path = random_policy_checkpoint(cfg, tmp_path / "rand.bin")
    policy, _ = load_policy(path)
    fresh = Agent.fresh(cfg, np.random.default_rng(np.random.SeedSequence(0).spawn(2)[0]))
    assert all(np.array_equal(a, b) for a, b in zip(policy.params, fresh.policy.params))


def test_checkpoint_shape_mismatch(tmp_path):
    cfg = tiny(tmp_path, episodes=1)
    path = random_policy_checkpoint(cfg, tmp_path / "rand.bin")
    with pytest.raises(FileNotFoundError):
        run_eval(path, replace(cfg, observation_mode="vae", vae_checkpoint=str(tmp_path / "none.bin")), 1)


def test_csv_rejects_bad_input(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("episode,phase\n1,train\n")
    with pytest.raises(ValueError):
        read_records(bad)
    bad.write_text(",".join(RECORD_FIELDS) + "\nx,train,1,1,1,0,none,0,1\n")
    with pytest.raises(ValueError):
        read_records(bad)


def test_csv_round_trip_is_exact(tmp_path):
    cfg = tiny(tmp_path, episodes=2)
    recs = run_training(cfg).records
    write_records(tmp_path / "r.csv", recs)
    assert read_records(tmp_path / "r.csv") == recs
    with open(tmp_path / "r.csv") as fh:
        assert next(csv.reader(fh)) == RECORD_FIELDS


def test_sca_reward_non_negative(tmp_path):
    res = run_training(tiny(tmp_path, kind="SCA", episodes=4))
    assert all(r.episodic_reward >= 0 for r in res.records)


def test_batch_mode(tmp_path):
    cfgs = [tiny(tmp_path, kind=k, episodes=2, name=k) for k in ("SCA", "OneFoldCL")]
    paths = run_batch(cfgs, max_workers=1, combined_csv=tmp_path / "all.csv")
    assert len(paths) == 2
    with open(tmp_path / "all.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["variant"] for r in rows} == {"SCA", "OneFoldCL"}
    assert len(rows) == 2 * 3


def test_collect_frames(tmp_path):
    cfg = tiny(tmp_path)
    frames = collect_frames(cfg, 12, seed=1)
    assert frames.shape == (12, 80, 40)
    assert np.array_equal(frames, collect_frames(cfg, 12, seed=1))
    assert frames.min() >= 0.0 and frames.max() <= 1.0
    with pytest.raises(ValueError):
        collect_frames(cfg, 0)


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        run_training(replace(tiny(tmp_path), output_dir=str(blocker / "sub")))


def test_random_checkpoint_eval_terminates(tmp_path):
    cfg = tiny(tmp_path, episodes=1)
    path = random_policy_checkpoint(cfg, tmp_path / "rand.bin")
    recs = run_eval(path, cfg, 3, traffic_count=0)
    assert all(r.avg_speed_kmh >= 0 and r.termination_reason != "none" for r in recs)


def test_several_eval_episodes_per_point(tmp_path):
    cfg = replace(tiny(tmp_path, episodes=3), eval_episodes_per_point=3)
    evals = [r for r in run_training(cfg).records if r.phase == EVAL]
    assert [r.episode for r in evals] == [0, 2]
