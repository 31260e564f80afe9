import json

import pytest

from conftest import e1_instance
from posecg.cli import EXIT_CAPPED, EXIT_INVALID, EXIT_MISMATCH, EXIT_OK, EXIT_REFUSED, main
from posecg.instance import save_instance


@pytest.fixture
def e1_file(tmp_path):
    path = tmp_path / "e1.json"
    save_instance(e1_instance(positions=True), path)
    return path


def test_solve_writes_solution(e1_file, tmp_path, capsys):
    assert main(["solve", str(e1_file)]) == EXIT_OK
    data = json.loads((tmp_path / "e1.solution.json").read_text())
    assert data["objective"] == pytest.approx(-16.5)
    assert data["poses"] == [{"global": {"neck": 0, "head": 1}, "locals": [{"anchor": 1, "locals": [2]}]}]
    assert "wall_time" not in data["report"]
    assert "objective=-16.5" in capsys.readouterr().out


def test_solve_omega_override_and_cap(e1_file, tmp_path):
    out = tmp_path / "s.json"
    assert main(["solve", str(e1_file), "--omega", "100", "-o", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["poses"] == []
    assert main(["solve", str(e1_file), "--max-iters", "1", "-o", str(out)]) == EXIT_CAPPED


def test_invalid_instance_lists_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"parts": ["a", "a"], "major_parts": [], "edges": [], "detections": [],
                               "pairwise": []}))
    assert main(["solve", str(bad)]) == EXIT_INVALID
    err = capsys.readouterr().err
    assert "DuplicatePart" in err and "NoMajorPart" in err
    bad.write_text("{not json")
    assert main(["check", str(bad)]) == EXIT_INVALID
    bad.write_text(json.dumps({"parts": ["a"]}))
    assert main(["solve", str(bad)]) == EXIT_INVALID


def test_gen_then_check(tmp_path, capsys):
    inst = tmp_path / "g.json"
    assert main(["gen", "--seed", "3", "--people", "1", "--graph", "upper", "--max-detections", "6",
                 "--stats", "-o", str(inst)]) == EXIT_OK
    out = capsys.readouterr().out
    assert int(out.split()[0]) <= 6 and "neck" in out
    assert main(["check", str(inst)]) == EXIT_OK
    assert capsys.readouterr().out.startswith("PASS")


def test_check_detects_a_wrong_solver(e1_file, capsys):
    assert main(["check", str(e1_file), "--wrong-omega", "50"]) == EXIT_MISMATCH
    assert "objective mismatch" in capsys.readouterr().out


def test_check_refuses_large_instances(tmp_path):
    inst = tmp_path / "big.json"
    main(["gen", "--seed", "1", "--people", "3", "-o", str(inst)])
    assert main(["check", str(inst)]) == EXIT_REFUSED


def test_render(e1_file, tmp_path):
    main(["solve", str(e1_file)])
    svg = tmp_path / "e1.svg"
    assert main(["render", str(e1_file), str(tmp_path / "e1.solution.json"), str(svg)]) == EXIT_OK
    assert svg.read_text().startswith("<svg")
    assert main(["render", str(e1_file), str(tmp_path / "missing.json"), str(svg)]) == EXIT_INVALID
