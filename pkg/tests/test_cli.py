import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import GIANT_U0
from pme_lab.cli import main


def run(tmp_path, command, cfg, name="out"):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / name
    return main([command, "--config", str(path), "--out", str(out)]), out


def rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_barenblatt_outputs(tmp_path):
    code, out = run(tmp_path, "barenblatt", {"m": 2, "n": 1, "C": 1, "times": [0.5, 1, 2, 4]})
    assert code == 0
    mass = np.array([float(r[1]) for r in rows(out / "mass.csv")[1:]])
    assert np.ptp(mass) <= 1e-8 * mass.max()
    assert rows(out / "slices.csv")[0] == ["t", "r", "u"]
    support = rows(out / "support.csv")
    assert float(support[2][1]) == pytest.approx(np.sqrt(12), rel=1e-14)
    report = json.loads((out / "report.json").read_text())
    assert report["schema"] == 1


def test_barenblatt_q_sweep(tmp_path):
    code, out = run(tmp_path, "barenblatt", {"m": 2, "n": 1, "q_values": [3.8, 4.2]})
    assert code == 0
    trends = json.loads((out / "report.json").read_text())["trends"]
    assert trends["3.8"]["verdict"] == "FINITE"
    assert trends["4.2"]["verdict"] == "DIVERGENT"


def test_missing_key_leaves_no_output(tmp_path):
    code, out = run(tmp_path, "barenblatt", {"n": 1})
    assert code == 2
    assert not out.exists()
    assert not any(p.name.startswith(".pme-lab-") for p in tmp_path.iterdir())


def test_unknown_key_rejected(tmp_path):
    code, _ = run(tmp_path, "giant", {"m": 2, "n": 1, "colour": "blue"})
    assert code == 2


def test_unreadable_config(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 2


def test_giant_profile_and_class(tmp_path):
    code, out = run(tmp_path, "giant", {"m": 2, "n": 1, "R": 1})
    assert code == 0
    data = rows(out / "profile.csv")
    assert data[0] == ["r", "U"]
    assert float(data[1][1]) == pytest.approx(GIANT_U0[(2.0, 1)], rel=1e-8)
    assert (out / "class.txt").read_text().startswith("CLASS_M,")


def test_giant_rescaling_report(tmp_path):
    code, out = run(tmp_path, "giant", {"m": 2, "n": 1, "R": 2, "classify": False})
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["rescaling_max_rel_diff"] <= 1e-6
    assert not (out / "class.txt").exists()


def test_solve_convergence_and_comparison(tmp_path):
    cfg = {
        "m": 2,
        "n": 1,
        "R": 6,
        "N": 100,
        "t_start": 0.5,
        "t_end": 1.5,
        "snapshot_times": [1.0, 1.5],
        "initial": {"kind": "barenblatt"},
        "convergence": {"N_values": [100, 200, 400]},
        "comparison": {"lower_factor": 0.5},
    }
    code, out = run(tmp_path, "solve", cfg)
    assert code == 0
    conv = json.loads((out / "convergence.json").read_text())
    assert conv["min_order"] >= 0.8
    comp = json.loads((out / "comparison.json").read_text())
    assert comp["passed"] and comp["details"]["violations"] == 0
    meta = json.loads((out / "trajectory.json").read_text())
    assert meta["total_steps"] > 0 and meta["mass_drift"] < 1e-6


def test_solve_zero_data(tmp_path):
    cfg = {"m": 2, "n": 1, "R": 1, "N": 32, "t_end": 0.5, "initial": {"kind": "constant", "value": 0}}
    code, out = run(tmp_path, "solve", cfg)
    assert code == 0
    meta = json.loads((out / "trajectory.json").read_text())
    assert meta["mass_drift"] == 0.0
    assert all(float(r[2]) == 0.0 for r in rows(out / "trajectory.csv")[1:])


def test_solve_numerical_abort(tmp_path):
    cfg = {"m": 3, "n": 1, "R": 1, "N": 16, "geometry": "slab", "t_end": 1.0, "initial": {"kind": "constant", "value": 1e300}}
    code, out = run(tmp_path, "solve", cfg)
    assert code == 3 and not out.exists()


def test_solve_is_deterministic(tmp_path):
    cfg = {"m": 2, "n": 2, "R": 1, "N": 64, "t_end": 0.05, "snapshot_times": [0.01, 0.05], "initial": {"kind": "indicator", "radius": 0.3, "amplitude": 3}}
    _, a = run(tmp_path, "solve", cfg, "a")
    _, b = run(tmp_path, "solve", cfg, "b")
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_solve_from_csv(tmp_path):
    cfg = {"m": 2, "n": 1, "R": 1, "N": 32, "t_end": 0.01, "initial": {"kind": "indicator", "radius": 0.5}}
    _, first = run(tmp_path, "solve", cfg, "first")
    cfg2 = dict(cfg, t_start=0.01, t_end=0.02, initial={"kind": "csv", "path": str(first / "trajectory.csv")})
    code, second = run(tmp_path, "solve", cfg2, "second")
    assert code == 0


@pytest.mark.parametrize(
    "source,region,label",
    [
        ({"kind": "barenblatt"}, {"radius": 1, "t_start": -1, "t_end": 1}, "CLASS_B"),
        ({"kind": "giant"}, {"radius": 0.5, "t_start": -0.5, "t_end": 0.5}, "CLASS_M"),
        ({"kind": "constant", "value": 5, "R": 1}, {"radius": 0.5, "t_start": -0.5, "t_end": 0.5}, "BOUNDED"),
    ],
)
def test_classify(tmp_path, source, region, label):
    code, out = run(tmp_path, "classify", {"m": 2, "n": 1, "source": source, "region": region})
    assert code == 0
    assert (out / "class.txt").read_text().split(",")[0] == label
    assert json.loads((out / "class.json").read_text())["label"] == label


def test_classify_trajectory_csv(tmp_path):
    cfg = {"m": 2, "n": 1, "R": 1, "N": 64, "t_end": 0.5, "snapshot_times": list(np.linspace(0.0, 0.5, 11)), "initial": {"kind": "constant", "value": 2}}
    _, traj = run(tmp_path, "solve", cfg, "traj")
    src = {"kind": "trajectory_csv", "path": str(traj / "trajectory.csv"), "R": 1, "N": 64}
    code, out = run(tmp_path, "classify", {"m": 2, "n": 1, "source": src, "region": {"radius": 0.5, "t_start": 0.0, "t_end": 0.5}}, "cls")
    assert code == 0
    assert (out / "class.txt").read_text().startswith("BOUNDED")


@pytest.mark.parametrize("power,label,direction", [(2, "CLASS_M", "BLOWUP"), (1, "CLASS_B", "MEASURE")])
def test_dichotomy_directions(tmp_path, power, label, direction):
    cfg = {"m": 2, "n": 1, "k_values": [4, 8, 16, 32], "a_rule": {"power": power}, "N": 128, "refine": False}
    code, out = run(tmp_path, "dichotomy", cfg)
    assert code == 0
    assert (out / "class.txt").read_text().startswith(label + ",")
    table = rows(out / "dichotomy.csv")
    assert table[0] == ["k", "a_k", "direction", "slice_integral", "T_k", "rate_bound_ok", "label"]
    assert [r[2] for r in table[1:]] == [direction] * 4
    slices = [float(r[3]) for r in table[1:]]
    if direction == "BLOWUP":
        assert all(b > a for a, b in zip(slices, slices[1:]))
    manifest = json.loads((out / "manifest.json").read_text())
    text = json.dumps(manifest)
    for key in ("beta", "theta", "t0", "C0"):
        assert f'"{key}"' in text


def test_dichotomy_single_member_is_inconclusive(tmp_path, capsys):
    code, out = run(tmp_path, "dichotomy", {"m": 2, "n": 1, "k_values": [4], "a_rule": {"power": 2}, "N": 64, "refine": False})
    assert code == 4 and not out.exists()
    trend = json.loads(capsys.readouterr().out)
    assert trend["verdict"] == "INCONCLUSIVE"


def test_dichotomy_direction_precondition(tmp_path):
    cfg = {"m": 2, "n": 1, "k_values": [4, 8, 16], "a_rule": {"power": 1}, "direction": "BLOWUP", "N": 64, "refine": False}
    code, _ = run(tmp_path, "dichotomy", cfg)
    assert code == 2


HARNACK = {
    "kind": "harnack",
    "source": {"kind": "barenblatt"},
    "samples": [[0, 1], [0.3, 1], [0.5, 2], [0.2, 0.5], [-0.4, 1.5]],
    "r": 0.2,
    "C2_grid": [0.01, 0.05, 0.1, 0.3],
}
ZETA = {"r_in": 0.1, "r_out": 0.2, "t_in": [2e-3, 0.5], "t_out": [5e-4, 1.0]}


def test_checks_full_suite(tmp_path):
    checks = [
        HARNACK,
        {"kind": "weak_harnack", "source": {"kind": "barenblatt"}, "x0": 0, "r": 0.2, "t0": 1, "T": 3},
        {"kind": "caccioppoli", "source": {"kind": "barenblatt"}, "eps": 0.5, "truncate": {"upper": 10}, "cutoff": ZETA},
        {"kind": "log_caccioppoli", "source": {"kind": "barenblatt"}, "truncate": {"upper": 10, "lower": 0.01}, "cutoff": ZETA},
        {
            "kind": "sobolev",
            "source": {"kind": "barenblatt"},
            "power": 0.5,
            "p": 2,
            "r": 1,
            "cutoff": {"r_in": 0.5, "r_out": 1.0, "t_in": [0.5, 1.5], "t_out": [0.25, 2.0]},
        },
    ]
    code, out = run(tmp_path, "checks", {"m": 2, "n": 1, "checks": checks})
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["00_harnack.json", "01_weak_harnack.json", "02_caccioppoli.json", "03_log_caccioppoli.json", "04_sobolev.json"]
    assert all(json.loads((out / n).read_text())["passed"] for n in names)


def test_checks_nonpositive_field(tmp_path):
    bad = dict(HARNACK, samples=[[4.0, 1.0]])
    code, out = run(tmp_path, "checks", {"m": 2, "n": 1, "checks": [bad]})
    assert code == 2 and not out.exists()


def test_checks_empty_list(tmp_path, capsys):
    code, _ = run(tmp_path, "checks", {"m": 2, "n": 1, "checks": []})
    assert code == 2
    assert "nothing to do" in capsys.readouterr().err


def test_schema_rejects_tiny_resolution(tmp_path):
    entry = {"kind": "log_caccioppoli", "source": {"kind": "barenblatt"}, "cutoff": ZETA, "resolution": 4}
    code, _ = run(tmp_path, "checks", {"m": 2, "n": 1, "checks": [entry]})
    assert code == 2


def test_comparison_violation_exits_one(tmp_path, capsys):
    # C0 well above the normalising value puts the shifted Barenblatt above v at t = 0
    cfg = {"m": 2, "n": 1, "k_values": [4, 8, 16], "a_rule": {"power": 2}, "C0": 20, "N": 64, "refine": False}
    code, out = run(tmp_path, "dichotomy", cfg)
    assert code == 1 and not out.exists()
    assert "falls below" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"m": 2, "n": 1}))
    res = subprocess.run([sys.executable, "-m", "pme_lab", "barenblatt", "--config", str(cfg), "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "o" / "mass.csv").exists()
