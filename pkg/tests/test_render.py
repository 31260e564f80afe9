import xml.etree.ElementTree as ET

import pytest

from conftest import e1_instance
from posecg.render import MissingPositions, pose_color, render_svg
from posecg.solver import solve
from posecg.synthetic import generate_synthetic

NS = "{http://www.w3.org/2000/svg}"


def tags(svg, name):
    return ET.fromstring(svg).iter(NS + name)


def test_e1_drawing():
    inst = e1_instance(positions=True)
    sol, _ = solve(inst)
    svg = render_svg(inst, sol)
    assert len(list(tags(svg, "circle"))) == 2
    squares = [r for r in tags(svg, "rect") if r.get("class") != "background"]
    assert len(squares) == 1
    assert len(list(tags(svg, "line"))) == 1
    assert not [p for p in tags(svg, "path") if p.get("class") == "false-positive"]


def test_false_positives_are_crossed():
    inst = generate_synthetic(4, 1, 0.2, 0.6)
    sol, _ = solve(inst)
    crosses = [p for p in tags(render_svg(inst, sol), "path") if p.get("class") == "false-positive"]
    assert len(crosses) == len(sol.false_positives) > 0


def test_missing_positions(e1):
    sol, _ = solve(e1)
    with pytest.raises(MissingPositions):
        render_svg(e1, sol)


def test_pose_colors_distinct():
    assert len({pose_color(k) for k in range(12)}) == 12
