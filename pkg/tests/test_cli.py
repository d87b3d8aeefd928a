import json
import subprocess
import sys

import numpy as np
import pytest

from emlocal.cli import main
from emlocal.io import read_csv, read_raw

SCENARIO = """
grid: {n: 16, box_length: 1.0}
seed: 3
sources:
  - {id: w, kind: plane_wave, k: [0, 0, 1]}
  - {id: l, kind: localized_random, seed: 0, width: 0.1, spread: 0.02, max_carrier: 1}
tasks:
  - {type: observables_sweep, sources: [w, l]}
  - {type: helicity_ratio_probe, ensemble: {size: 3}}
"""


@pytest.fixture
def scenario(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text(SCENARIO)
    return p


def test_validate_accepts_a_good_file(scenario, capsys):
    assert main(["validate", str(scenario)]) == 0
    assert "2 source(s), 2 task(s)" in capsys.readouterr().out


def test_validate_lists_every_error(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("grid: {n: 9}\ntasks: [{type: nope}]\n")
    assert main(["validate", str(p)]) == 2
    err = capsys.readouterr().err
    assert err.count("error:") >= 2


def test_run_writes_outputs_and_manifest(scenario, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(scenario), "--out", str(out), "--threads", "1"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["passed"] and manifest["seed"] == 3
    assert set(manifest["verdicts"]) == {"00_observables_sweep", "01_helicity_ratio_probe"}
    rows = read_csv(out / "01_helicity_ratio.csv")
    assert len(rows) == 3
    assert "[pass] 00 observables_sweep" in capsys.readouterr().out


def test_seed_override_changes_the_run_hash(scenario, tmp_path):
    main(["run", str(scenario), "--out", str(tmp_path / "a")])
    main(["run", str(scenario), "--out", str(tmp_path / "b"), "--seed", "4"])
    a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert b["seed"] == 4 and a["config_hash"] != b["config_hash"]


def test_run_is_reproducible(scenario, tmp_path):
    for d in ("a", "b"):
        main(["run", str(scenario), "--out", str(tmp_path / d)])
    for name in ("00_observables.csv", "01_helicity_ratio.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_failed_acceptance_check_sets_exit_status(tmp_path, capsys):
    p = tmp_path / "strict.yaml"
    p.write_text(SCENARIO.replace("sources: [w, l]}", "sources: [w, l], tolerance: 1.0e-300}"))
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 1
    assert "[FAIL]" in capsys.readouterr().out


def test_informational_failures_do_not_fail_the_run(tmp_path):
    p = tmp_path / "info.yaml"
    p.write_text(SCENARIO.replace("sources: [w, l]}", "sources: [w, l], tolerance: 1.0e-300, acceptance: false}"))
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 0


def test_bad_arguments_exit_with_usage_errors(scenario, tmp_path):
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2
    assert main(["run", str(scenario), "--seed", "-1"]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", str(scenario), "--out", str(blocker / "sub")]) == 2
    with pytest.raises(SystemExit):
        main(["run", str(scenario), "--threads", "0", "--out", str(tmp_path / "t")])


def test_kernels_dump_eighteen_component_files(tmp_path, capsys):
    out = tmp_path / "k"
    assert main(["kernels", "--grid", "8", "--box", "2.0", "--out", str(out)]) == 0
    files = sorted(out.glob("*.emlf"))
    assert len(files) == 18
    K, g = read_raw(out / "B_D_xy.emlf")
    assert g.n == (8, 8, 8) and g.box == (2.0, 2.0, 2.0)
    Kyx, _ = read_raw(out / "B_D_yx.emlf")
    assert np.array_equal(K, -Kyx)


def test_kernels_reject_odd_grids(tmp_path):
    assert main(["kernels", "--grid", "9", "--box", "1", "--out", str(tmp_path)]) == 2


def test_console_script_is_installed(scenario):
    r = subprocess.run([sys.executable, "-m", "emlocal.cli", "validate", str(scenario)], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("ok:")
