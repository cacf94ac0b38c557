import json

import pytest

from iisscert.cli import main
from iisscert.examples import builtin_config


def write_config(tmp_path, name="ex1a", **changes):
    data = builtin_config(name)
    data.update(changes)
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(data))
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_certify_positive(tmp_path, capsys):
    code, out, _ = run(["certify", write_config(tmp_path)], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["verdict"] == "iISS_over_inf_dwell"
    assert report["delta_bound"] == pytest.approx(0.8032897092894683, abs=1e-12)


def test_certify_inconclusive_exit_2(tmp_path, capsys):
    path = write_config(tmp_path, "ex2", D=[[0.0, 0.0], [0.0, 0.0]])
    code, out, _ = run(["certify", path], capsys)
    assert code == 2
    assert "jump_not_contractive" in json.loads(out)["notes"]


def test_certify_builtin_prefix(capsys):
    code, out, _ = run(["certify", "builtin:ex2"], capsys)
    assert code == 0
    assert json.loads(out)["intermediates"]["norm_I_plus_D"] == pytest.approx(0.35)


def test_malformed_json_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"A": [[-0.5]],\n  "r": }')
    code, _, err = run(["certify", str(bad)], capsys)
    assert code == 1
    assert "line 2" in err and "column" in err


def test_missing_file_is_error(tmp_path, capsys):
    code, _, err = run(["certify", str(tmp_path / "nope.json")], capsys)
    assert code == 1 and err.startswith("error:")


def test_simulate_zero_initial_zero_input(tmp_path, capsys):
    path = write_config(tmp_path, initial={"kind": "constant", "values": [0.0]}, T=3.0)
    out_csv = tmp_path / "traj.csv"
    code, out, _ = run(["simulate", path, "--out", str(out_csv), "--zero-input"], capsys)
    assert code == 0
    rows = out_csv.read_text().splitlines()[1:]
    assert rows and all(float(row.split(",")[1]) == 0.0 for row in rows)
    assert json.loads(out)["max_norm"] == 0.0


def test_simulate_blow_up_exit_3(tmp_path, capsys):
    path = write_config(tmp_path, A=[[30.0]], D=[[0.0]], E=[[0.0]], T=5.0)
    code, out, _ = run(["simulate", path, "--out", str(tmp_path / "t.csv")], capsys)
    assert code == 3 and json.loads(out)["blow_up"] is True


def test_trace_ok_and_negative_control(tmp_path, capsys):
    path = write_config(tmp_path)
    code, out, _ = run(["trace", path, "--out", str(tmp_path / "env.csv")], capsys)
    assert code == 0
    verdict = json.loads(out)
    assert verdict["violated"] is False and verdict["jump_inequality_holds"] is True
    lam_cap = verdict["params_echo"]["lam_cap"]
    code, out, _ = run(["trace", path, "--out", str(tmp_path / "neg.csv"), "--zero-input",
                        "--override-lambda", repr(2 * lam_cap)], capsys)
    assert code == 4
    assert json.loads(out)["first_violation_t"] is not None


def test_trace_rejects_schedule_outside_class(tmp_path, capsys):
    path = write_config(tmp_path, schedule={"kind": "uniform", "delta": 0.5}, T=5.0)
    code, _, err = run(["trace", path, "--out", str(tmp_path / "e.csv")], capsys)
    assert code == 1 and "outside the certified class" in err


def test_trace_inconclusive_exit_2(tmp_path, capsys):
    path = write_config(tmp_path, "ex2", D=[[0.0, 0.0], [0.0, 0.0]])
    code, _, _ = run(["trace", path, "--out", str(tmp_path / "e.csv")], capsys)
    assert code == 2


def test_incompatible_step_exit_1(tmp_path, capsys):
    code, _, err = run(["simulate", write_config(tmp_path), "--out", str(tmp_path / "t.csv"), "--h", "0.003"],
                       capsys)
    assert code == 1 and "try h=" in err


def test_example_unknown_name(capsys):
    code, _, err = run(["example", "bogus"], capsys)
    assert code == 1 and "ex1a" in err


@pytest.mark.parametrize("name", ["ex1a", "ex2"])
def test_example_writes_artifacts(tmp_path, capsys, name):
    outdir = tmp_path / name
    code, out, _ = run(["example", name, "--outdir", str(outdir)], capsys)
    assert code == 0
    for f in ("config.json", "report.json", "traj.csv", "envelope.csv", "envelope.json", "summary.json"):
        assert (outdir / f).is_file()
    summary = json.loads(out)
    assert summary["exit_codes"] == {"certify": 0, "simulate": 0, "trace": 0}
    report = json.loads((outdir / "report.json").read_text())
    if name == "ex1a":
        assert round(report["delta_bound"], 4) == 0.8033
    else:
        assert report["intermediates"]["norm_I_plus_D"] == pytest.approx(0.35, abs=1e-14)
        assert report["intermediates"]["norm_E"] == pytest.approx(0.2, abs=1e-14)


def test_example_rerun_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["example", "ex1c", "--outdir", str(a), "--T", "4"], capsys)[0] == 0
    assert run(["example", "ex1c", "--outdir", str(b), "--T", "4"], capsys)[0] == 0
    for f in ("traj.csv", "envelope.csv", "report.json", "envelope.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_random_schedule_seed_override(tmp_path, capsys):
    path = write_config(tmp_path, schedule={"kind": "random", "delta_min": 1.0, "delta_max": 1.5}, T=10.0)
    outs = []
    for seed in ("1", "1", "2"):
        code, _, _ = run(["simulate", path, "--out", str(tmp_path / f"s{seed}.csv"), "--seed", seed], capsys)
        assert code == 0
        outs.append((tmp_path / f"s{seed}.csv").read_text())
    assert outs[0] == outs[1] != outs[2]


def test_order_check(capsys):
    code, out, _ = run(["order-check"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert all(payload["passed"].values())
    assert payload["studies"][0]["observed_order"] >= 3.5


def test_order_check_bad_step(capsys):
    code, _, err = run(["order-check", "--h", "0.003"], capsys)
    assert code == 1 and "try h=" in err
