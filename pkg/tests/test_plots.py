import json
import xml.etree.ElementTree as ET

import pytest

from curdrive.harness import EVAL, TRAIN, EpisodeRecord, write_records
from curdrive.plots import emit_plots, line_chart, reward_curve_svgs

NS = "{http://www.w3.org/2000/svg}"


def polylines(text):
    root = ET.fromstring(text)
    return root.findall(f".//{NS}polyline")


def points(poly):
    return [tuple(float(v) for v in p.split(",")) for p in poly.get("points").split()]


def fake_records(n=30, speed=20.0):
    recs = []
    for ep in range(n):
        recs.append(EpisodeRecord(ep, TRAIN, 10.0 + ep, speed, 5.0, 0, "stalled", 0, 100))
        if ep % 10 == 0:
            recs.append(EpisodeRecord(ep, EVAL, 12.0 + ep, speed + 1, 6.0, 0, "stalled", 0, 100))
    return recs


def test_reward_curves_hit_anchor_points():
    svgs = reward_curve_svgs()
    (orig,) = polylines(svgs["reward_original.svg"])
    (rev,) = polylines(svgs["reward_revised.svg"])
    rp = dict(points(rev))
    assert rp[15.0] == pytest.approx(0.5, abs=1e-12)
    assert rp[60.0] == pytest.approx(1.0, abs=1e-12)
    assert rp[105.0] == pytest.approx(0.0, abs=1e-12)
    op = points(orig)
    plateau = [y for x, y in op if 15.0 <= x <= 60.0]
    assert len(plateau) == 91 and all(y == 1.0 for y in plateau)
    assert dict(op)[105.0] == 0.0


def test_one_polyline_per_variant(tmp_path):
    csv_path = tmp_path / "SCA.csv"
    write_records(csv_path, fake_records())
    written = emit_plots([csv_path], tmp_path / "plots")
    assert sorted(p.name for p in written) == sorted([
        "train_distance.svg", "train_speed.svg", "eval_distance.svg", "eval_speed.svg",
        "reward_original.svg", "reward_revised.svg"])
    for path in written:
        assert len(polylines(path.read_text())) == 1


def test_variants_and_seeds_grouped(tmp_path):
    runs = []
    for kind, speeds in (("SCA", (10.0, 14.0)), ("CuRLA", (20.0, 30.0))):
        for seed, speed in enumerate(speeds):
            d = tmp_path / f"{kind}_{seed}"
            d.mkdir()
            write_records(d / "records.csv", fake_records(speed=speed))
            cfg = {"variant": {"kind": kind}}
            (d / "config.json").write_text(json.dumps(cfg))
            runs.append(d)
    emit_plots(runs, tmp_path / "out", smoothing=0.0)
    lines = polylines((tmp_path / "out" / "train_speed.svg").read_text())
    by_label = {p.get("data-label"): points(p) for p in lines}
    assert set(by_label) == {"SCA", "CuRLA"}
    assert all(y == 12.0 for _, y in by_label["SCA"])
    assert all(y == 25.0 for _, y in by_label["CuRLA"])
    evals = polylines((tmp_path / "out" / "eval_speed.svg").read_text())
    assert [x for x, _ in points(evals[0])] == [0.0, 10.0, 20.0]


def test_chart_is_well_formed_with_labels():
    text = line_chart([("a", [0, 1, 2], [1, 2, 3])], "T & title", "Episode", "Distance")
    root = ET.fromstring(text)
    labels = [t.text for t in root.iter(f"{NS}text")]
    assert "T &amp; title" not in labels and "T & title" in labels
    assert "Episode" in labels and "Distance" in labels and "a" in labels


def test_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_plots([], tmp_path)
    bad = tmp_path / "bad.csv"
    bad.write_text("nonsense\n1\n")
    with pytest.raises(ValueError):
        emit_plots([bad], tmp_path / "o")
