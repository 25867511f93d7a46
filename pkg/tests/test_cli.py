import json

import pytest

from supercurrents import cli


def write(tmp_path, data, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return str(p)


def run(tmp_path, data, *extra):
    out = tmp_path / "out"
    return cli.main(["run", write(tmp_path, data), "--out", str(out), *extra]), out


def test_check_eq1_scenario_passes(tmp_path):
    code, out = run(tmp_path, {"n": 3, "seed": 1, "tasks": [{"op": "check_eq1", "args": {"samples": 100}}]})
    assert code == 0
    rep = json.loads((out / "00_check_eq1.json").read_text())
    assert rep["status"] == "pass" and len(rep["result"]["samples"]) == 100


def test_unnormalised_constant_is_a_failed_check(tmp_path):
    task = {"op": "check_eq1", "args": {"samples": 3, "k": [2], "constant": [1, 6]}}
    code, _ = run(tmp_path, {"n": 3, "seed": 1, "tasks": [task]})
    assert code == 1


def test_empty_task_list(tmp_path):
    code, out = run(tmp_path, {"n": 2, "tasks": []})
    assert code == 0
    assert json.loads((out / "summary.json").read_text())["tasks"] == []


def test_declared_convex_concave_current_exits_3(tmp_path):
    data = {"n": 2, "seed": 0,
            "objects": {"T": {"current": {"form": "2 - x2^2 * dx[1] ^ dxi[1]\n1 * dx[2] ^ dxi[2]"}}},
            "tasks": [{"op": "lelong", "args": {"current": "T", "r_grid": [1, 0.5, 0.25],
                                                 "hypotheses": {"convex": True},
                                                 "sample": {"count": 16, "radius": 0.5}}}]}
    code, out = run(tmp_path, data)
    assert code == 3
    rep = json.loads((out / "00_lelong.json").read_text())
    assert rep["status"] == "hypothesis_failed"
    assert rep["result"]["witness"]


@pytest.mark.parametrize("text", ["{not json", json.dumps({"tasks": []}),
                                  json.dumps({"n": 2, "tasks": [{"op": "nope"}]}),
                                  json.dumps({"n": 2, "tasks": [{"op": "lelong", "args": {"current": "missing"}}]})])
def test_parse_errors_exit_2(tmp_path, text):
    code, _ = run(tmp_path, text)
    assert code == 2


def test_stochastic_task_needs_seed(tmp_path):
    code, _ = run(tmp_path, {"n": 2, "tasks": [{"op": "check_eq1", "args": {"samples": 2}}]})
    assert code == 2
    code, _ = run(tmp_path, {"n": 2, "tasks": [{"op": "check_eq1", "args": {"samples": 2}}]}, "--seed-override", "5")
    assert code == 0


def test_reports_deterministic_apart_from_header(tmp_path):
    data = {"n": 2, "seed": 3,
            "objects": {"L": {"current": {"builtin": "plane"}}},
            "tasks": [{"op": "check_eq1", "args": {"samples": 5}},
                      {"op": "lelong", "args": {"current": "L", "r_grid": [1, 0.5]}}]}
    path = write(tmp_path, data)
    reps = []
    for d in ("a", "b"):
        assert cli.main(["run", path, "--out", str(tmp_path / d), "--jobs", "2"]) == 0
        r = [json.loads((tmp_path / d / f).read_text()) for f in ("00_check_eq1.json", "01_lelong.json")]
        for x in r:
            x.pop("header")
        reps.append(r)
    assert reps[0] == reps[1]
    assert reps[0][0]["scenario_hash"] == reps[0][1]["scenario_hash"]
    assert (tmp_path / "a" / "01_lelong.csv").exists()


def test_degree_nonconvergence_exits_4(tmp_path):
    data = {"n": 2, "objects": {"B": {"current": {"builtin": "beta_current"}}},
            "tasks": [{"op": "degree", "args": {"current": "B", "R_grid": [4, 16, 64]}}]}
    code, _ = run(tmp_path, data)
    assert code == 4


def test_list_builtins(capsys):
    assert cli.main(["list-builtins"]) == 0
    text = capsys.readouterr().out
    for name in ("phi_m", "paper_strip_counterexample", "paper_sin_singularity"):
        assert name in text


def test_tour_scenario(tmp_path):
    import pathlib

    tour = pathlib.Path(__file__).resolve().parents[1] / "demos" / "scenarios" / "tour.json"
    assert cli.main(["run", str(tour), "--out", str(tmp_path / "tour")]) == 0
