"""End-to-end runs of the `snapslam` command through main()."""
import json

import pytest

from snapslam.io_utils import file_sha256, manifest_path
from snapslam.io_utils.scenario_file import BUNDLED_SCENARIO
from snapslam.main import join_option_values, main

COARSE_ROOM = "-5,5,-10,16,-1.4,0.25"


def _synth(tmp_path, name="y.csv", *extra):
    out = tmp_path / name
    assert main(["synth", "--quiet", "--seed", "5", "--out", str(out), *extra]) == 0
    return out


def test_synth_writes_snapshot_and_manifest(tmp_path):
    out = _synth(tmp_path)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "ap_id,re,im"
    assert len(lines) == 51

    manifest = json.loads(manifest_path(out).read_text(encoding="utf-8"))
    assert manifest["master_seed"] == 5
    assert manifest["scenario_file_sha256"] == file_sha256(BUNDLED_SCENARIO)
    assert manifest["command_line"][0] == "synth"
    assert len(manifest["extra"]["phases"]) == 3
    assert manifest["extra"]["noisy"] is True


def test_synth_is_byte_identical_across_runs(tmp_path):
    a = _synth(tmp_path, "a.csv")
    b = _synth(tmp_path, "b.csv")
    c = _synth(tmp_path, "c.csv", "--no-noise")
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_image_and_heatmap(tmp_path):
    y = _synth(tmp_path)
    out = tmp_path / "img.csv"
    pgm = tmp_path / "img.pgm"
    code = main(["image", "--quiet", "--snapshot", str(y), "--grid", "-1,1,-1,1,-1.4,0.5",
                 "--out", str(out), "--heatmap", str(pgm)])
    assert code == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,y,value"
    assert len(lines) == 1 + 25
    assert pgm.read_bytes().startswith(b"P5")
    assert manifest_path(out).exists()
    heatmap_manifest = json.loads(manifest_path(pgm).read_text(encoding="utf-8"))
    assert heatmap_manifest["extra"]["image"] == str(out)
    assert heatmap_manifest["extra"]["grid"] == "-1,1,-1,1,-1.4,0.5"


def test_inverted_grid_fails_cleanly(tmp_path, capsys):
    y = _synth(tmp_path)
    capsys.readouterr()
    out = tmp_path / "img.csv"
    code = main(["image", "--quiet", "--snapshot", str(y), "--grid", "1,-1,-1,1,-1.4,0.5", "--out", str(out)])
    assert code == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    assert err[0].startswith("snapslam: GridError")
    assert not out.exists()
    assert not manifest_path(out).exists()


def test_missing_scenario_is_a_parse_error(tmp_path, capsys):
    code = main(["synth", "--quiet", "--scenario", str(tmp_path / "nope.json"), "--out", str(tmp_path / "y.csv")])
    assert code == 2
    assert capsys.readouterr().err.startswith("snapslam: ScenarioParseError")


def test_bad_thread_count(tmp_path, capsys):
    code = main(["synth", "--quiet", "--threads", "0", "--out", str(tmp_path / "y.csv")])
    assert code == 2
    assert "--threads" in capsys.readouterr().err


def test_slam_finds_the_ue_first_on_a_noiseless_snapshot(tmp_path):
    y = _synth(tmp_path, "clean.csv", "--no-noise")
    out = tmp_path / "det.csv"
    assert main(["slam", "--quiet", "--snapshot", str(y), "--grid", COARSE_ROOM,
                 "--max-targets", "3", "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "iteration,x,y,z,phase,peak_value,residual_energy"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == "1"
    assert (float(first[1]), float(first[2])) == pytest.approx((-3.0, 5.0))
    residuals = [float(line.split(",")[6]) for line in lines[1:]]
    assert residuals == sorted(residuals, reverse=True)


def test_slam_with_residual_rule(tmp_path):
    y = _synth(tmp_path, "clean.csv", "--no-noise")
    out = tmp_path / "det.csv"
    assert main(["slam", "--quiet", "--snapshot", str(y), "--grid", COARSE_ROOM,
                 "--residual-eps", "0.5", "--out", str(out)]) == 0
    # the direct path alone carries well over half the energy
    assert len(out.read_text(encoding="utf-8").splitlines()) == 2


def test_ambiguity_map_peaks_at_the_reference(tmp_path):
    out = tmp_path / "amb.csv"
    assert main(["ambiguity", "--quiet", "--ref", "0,0,-1.4", "--grid", "-1,1,-1,1,-1.4,0.5",
                 "--out", str(out)]) == 0
    rows = [line.split(",") for line in out.read_text(encoding="utf-8").splitlines()[1:]]
    best = max(rows, key=lambda r: float(r[2]))
    assert (float(best[0]), float(best[1])) == (0.0, 0.0)
    assert float(best[2]) == pytest.approx(1.0)


def test_bad_reference_point(tmp_path, capsys):
    out = tmp_path / "amb.csv"
    code = main(["ambiguity", "--quiet", "--ref", "0,0", "--grid", "-1,1,-1,1,-1.4,0.5", "--out", str(out)])
    assert code == 2
    assert capsys.readouterr().err.startswith("snapslam: ValueError")


def test_sweep_is_reproducible(tmp_path):
    def run(name):
        out = tmp_path / name
        diag = tmp_path / f"diag-{name}"
        code = main(["sweep", "--quiet", "--resolutions", "0.5", "--trials", "2", "--seed", "9",
                     "--variant", "estimated", "--out", str(out), "--diagnostics", str(diag)])
        assert code == 0
        return out, diag

    out_a, diag_a = run("a.csv")
    out_b, diag_b = run("b.csv")
    assert out_a.read_bytes() == out_b.read_bytes()
    assert diag_a.read_bytes() == diag_b.read_bytes()

    lines = out_a.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "resolution_m,variant,object,trials,successes,p_detect,std_err"
    assert [line.split(",")[2] for line in lines[1:]] == ["UE", "VUE", "SP"]
    assert all(line.split(",")[1] == "estimated" and line.split(",")[3] == "2" for line in lines[1:])
    assert len(diag_a.read_text(encoding="utf-8").splitlines()) == 3
    assert manifest_path(diag_a).exists()
    assert json.loads(manifest_path(diag_a).read_text(encoding="utf-8"))["master_seed"] == 9


def test_sweep_output_does_not_depend_on_thread_count(tmp_path):
    def run(threads):
        out = tmp_path / f"sweep-{threads}.csv"
        diag = tmp_path / f"diag-{threads}.csv"
        code = main(["sweep", "--quiet", "--threads", str(threads), "--resolutions", "0.5", "--trials", "3",
                     "--seed", "4", "--variant", "estimated", "--out", str(out), "--diagnostics", str(diag)])
        assert code == 0
        return out.read_bytes(), diag.read_bytes()

    assert run(1) == run(8)


def test_negative_grid_values_are_not_read_as_flags(tmp_path):
    y = _synth(tmp_path, "clean.csv", "--no-noise")
    out = tmp_path / "det.csv"
    assert main(["slam", "--quiet", "--snapshot", str(y), "--grid", "-5,5,-10,16,-1.4,0.5",
                 "--max-targets", "1", "--out", str(out)]) == 0
    first = out.read_text(encoding="utf-8").splitlines()[1].split(",")
    assert (float(first[1]), float(first[2])) == pytest.approx((-3.0, 5.0))


def test_negative_reference_point(tmp_path):
    out = tmp_path / "amb.csv"
    assert main(["ambiguity", "--quiet", "--ref", "-3,5,-1.4", "--grid", "-4,-2,4,6,-1.4,0.5",
                 "--out", str(out)]) == 0
    rows = [line.split(",") for line in out.read_text(encoding="utf-8").splitlines()[1:]]
    best = max(rows, key=lambda r: float(r[2]))
    assert (float(best[0]), float(best[1])) == (-3.0, 5.0)


def test_join_option_values():
    assert join_option_values(["image", "--grid", "-1,1,-1,1,-1.4,0.5", "--out", "x"]) == [
        "image", "--grid=-1,1,-1,1,-1.4,0.5", "--out", "x"]
    assert join_option_values(["ambiguity", "--ref=-3,5,-1.4"]) == ["ambiguity", "--ref=-3,5,-1.4"]
    assert join_option_values(["image", "--grid"]) == ["image", "--grid"]


@pytest.mark.parametrize("argv", [
    ["image"],
    ["teleport", "--out", "x.csv"],
    ["synth", "--out", "x.csv", "--seed", "abc"],
    [],
])
def test_usage_errors_are_one_line(argv, capsys):
    assert main(argv) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    assert err[0].startswith("snapslam: UsageError")


def test_status_lines_lead_with_emoji_then_tag(tmp_path, capsys):
    out = tmp_path / "y.csv"
    assert main(["synth", "--seed", "1", "--out", str(out)]) == 0
    lines = [line for line in capsys.readouterr().err.splitlines() if "[Synth]" in line]
    assert len(lines) == 1
    assert lines[0].startswith("✅ [Synth] 50 samples")
