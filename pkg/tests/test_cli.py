import numpy as np
import yaml

from menf.cli import main
from menf.scenario_io import bundled_chua_text, dump_document, parse_document

SMALL = """
plant: {A: [[-1.0, 0.3], [0.0, -2.0]], B: [[0.5, 0.0], [0.0, 0.5]]}
nodes:
  - {C: [[1.0, 0.0]], D: [[0.5]], xi: [0.0, 0.0], Xcal: [[2.0, 0.0], [0.0, 2.0]]}
  - {C: [[0.0, 1.0]], D: [[0.5]], xi: [0.1, -0.1], Xcal: [[2.0, 0.0], [0.0, 2.0]]}
edges: [[1, 2], [2, 1]]
links:
  defaults:
    W: [[1.0, 0.0], [0.0, 1.0]]
    F: [[0.5, 0.0], [0.0, 0.5]]
    Z: [[0.2, 0.0], [0.0, 0.2]]
sim:
  T: 2.0
  dt: 0.001
  seed: 3
  x0_law: {kind: gaussian, mean: 0.1, std: 0.2}
disturbances:
  - {kind: pulse, target: w, amplitude: 1.0, start: 0.0, duration: 0.5}
tuning: {P0: [[1.0, 0.0], [0.0, 1.0]], ridge: 0.01}
"""


def write_small(tmp_path):
    path = tmp_path / "small.scenario"
    path.write_text(SMALL, encoding="utf-8")
    return path


def test_tune_simulate_verify_roundtrip(tmp_path, capsys):
    scen = write_small(tmp_path)
    tuned = tmp_path / "tuned.yaml"
    assert main(["tune", str(scen), "--out", str(tuned)]) == 0
    assert tuned.exists()
    out = tmp_path / "run"
    assert main([
        "simulate", str(scen), "--out", str(out), "--tuned", str(tuned)
    ]) == 0
    assert (out / "manifest.yaml").exists()
    assert (out / "state.csv").exists()
    assert main(["verify", str(out)]) == 0
    report = yaml.safe_load((out / "hinf_report.json").read_text())
    assert report["slack"] >= 0
    assert (out / "hinf_report.txt").exists()


def test_simulate_deterministic_bytes(tmp_path):
    scen = write_small(tmp_path)
    tuned = tmp_path / "tuned.yaml"
    assert main(["tune", str(scen), "--out", str(tuned)]) == 0
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main([
            "simulate", str(scen), "--out", str(out), "--seed", "11",
            "--tuned", str(tuned),
        ]) == 0
    for name in ("state.csv", "estimates_node1.csv", "gains_node2.csv", "disturbance_w.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_dt_override_changes_hash(tmp_path):
    scen = write_small(tmp_path)
    tuned = tmp_path / "tuned.yaml"
    main(["tune", str(scen), "--out", str(tuned)])
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    main(["simulate", str(scen), "--out", str(out1), "--tuned", str(tuned)])
    main([
        "simulate", str(scen), "--out", str(out2), "--dt", "0.002", "--tuned", str(tuned)
    ])
    h1 = yaml.safe_load((out1 / "manifest.yaml").read_text())["scenario_sha256"]
    h2 = yaml.safe_load((out2 / "manifest.yaml").read_text())["scenario_sha256"]
    assert h1 != h2


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.scenario"
    bad.write_text("plant: {A: [[1.0], [2.0, 3.0]]}\n", encoding="utf-8")
    assert main(["tune", str(bad)]) == 1
    assert main(["simulate", str(bad), "--out", str(tmp_path / "x")]) == 1


def test_usage_error_exit_code():
    assert main(["simulate"]) == 1  # missing required arguments
    assert main(["no-such-command"]) == 1


def test_infeasible_exit_code(tmp_path):
    doc = parse_document(bundled_chua_text())
    doc["tuning"] = {"P0": (1e6 * np.eye(3)).tolist(), "ridge": 0.01}
    scen = tmp_path / "hard.scenario"
    scen.write_text(dump_document(doc), encoding="utf-8")
    assert main(["tune", str(scen), "--out", str(tmp_path / "t.yaml")]) == 2


def test_missing_tuning_exit_code(tmp_path):
    scen = write_small(tmp_path)
    assert main(["simulate", str(scen), "--out", str(tmp_path / "y")]) == 1


def test_corrupted_estimates_fail_verification(tmp_path):
    scen = write_small(tmp_path)
    tuned = tmp_path / "tuned.yaml"
    main(["tune", str(scen), "--out", str(tuned)])
    out = tmp_path / "run"
    main(["simulate", str(scen), "--out", str(out), "--tuned", str(tuned)])
    # blow up one estimate column (x100): the recomputed error explodes
    path = out / "estimates_node1.csv"
    lines = path.read_text().splitlines()
    fixed = [lines[0]]
    for line in lines[1:]:
        cols = line.split(",")
        cols[1] = format(float(cols[1]) * 100.0 + 50.0, ".17g")
        fixed.append(",".join(cols))
    path.write_text("\n".join(fixed) + "\n", encoding="utf-8")
    assert main(["verify", str(out)]) == 4


def test_corrupt_csv_rejected(tmp_path):
    scen = write_small(tmp_path)
    tuned = tmp_path / "tuned.yaml"
    main(["tune", str(scen), "--out", str(tuned)])
    out = tmp_path / "run"
    main(["simulate", str(scen), "--out", str(out), "--tuned", str(tuned)])
    path = out / "state.csv"
    lines = path.read_text().splitlines()
    lines[5] = lines[5].rsplit(",", 1)[0] + ",not_a_number"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert main(["verify", str(out)]) == 1


def test_verify_p_file_and_dimension_check(tmp_path):
    scen = write_small(tmp_path)
    tuned = tmp_path / "tuned.yaml"
    main(["tune", str(scen), "--out", str(tuned)])
    out = tmp_path / "run"
    main(["simulate", str(scen), "--out", str(out), "--tuned", str(tuned)])
    good = tmp_path / "P_good.yaml"
    good.write_text(yaml.safe_dump({"P": np.eye(4).tolist()}), encoding="utf-8")
    assert main(["verify", str(out), "--P", str(good)]) == 0
    bad = tmp_path / "P_bad.yaml"
    bad.write_text(yaml.safe_dump({"P": np.eye(3).tolist()}), encoding="utf-8")
    assert main(["verify", str(out), "--P", str(bad)]) == 1


def test_reproduce_chua_single_seed(tmp_path):
    out = tmp_path / "repro"
    assert main(["reproduce-chua", "--out", str(out), "--seeds", "1"]) == 0
    summary = (out / "summary.csv").read_text().splitlines()
    assert len(summary) == 2  # header + one row
    assert (out / "chua.scenario").exists()
    assert (out / "tuned.yaml").exists()
    assert (out / "seed_0" / "errors_first_coord.csv").exists()
    row = summary[1].split(",")
    header = summary[0].split(",")
    converged = row[header.index("converged")]
    assert converged == "1"
    ratio = float(row[header.index("isolation_ratio")])
    assert ratio >= 10.0


def test_output_dir_not_writable(tmp_path):
    scen = write_small(tmp_path)
    tuned = tmp_path / "tuned.yaml"
    main(["tune", str(scen), "--out", str(tuned)])
    blocked = tmp_path / "blocked"
    blocked.write_text("a file, not a directory", encoding="utf-8")
    code = main([
        "simulate", str(scen), "--out", str(blocked), "--tuned", str(tuned)
    ])
    assert code == 1
