"""SVG rendering of run reports.

The drawing shows the domain, every obstacle before displacement (gray), each
displaced obstacle at its new place (cyan), the robot footprint at every
executed state, the path, and the start (green) and goal (red) markers.

Output is plain text built from the report alone, so identical reports give
byte-identical files.

Example:
    >>> report = run_pipeline(get_scenario("corridor"))
    >>> SvgExporter.export(report, "corridor.svg")
"""

from pathlib import Path
from typing import List, Union

from cdplan.core.geometry import Circle
from cdplan.core.ir import DomainBounds, RunReport, Shape
from cdplan.engine import dynamics

__all__ = ["SvgExporter"]

BEFORE_COLOR = "gray"
AFTER_COLOR = "cyan"
START_COLOR = "green"
GOAL_COLOR = "red"
FOOTPRINT_COLOR = "#3465a4"
PATH_COLOR = "#204a87"


def _num(value: float) -> str:
    text = f"{value:.4f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


class _Canvas:
    """World-to-pixel mapping with y pointing up."""

    def __init__(self, domain: DomainBounds, scale: float, margin: float):
        self.domain = domain
        self.scale = scale
        self.margin = margin
        self.width = (domain.xmax - domain.xmin) * scale + 2 * margin
        self.height = (domain.ymax - domain.ymin) * scale + 2 * margin

    def x(self, value: float) -> str:
        return _num((value - self.domain.xmin) * self.scale + self.margin)

    def y(self, value: float) -> str:
        return _num((self.domain.ymax - value) * self.scale + self.margin)

    def length(self, value: float) -> str:
        return _num(value * self.scale)

    def shape(self, shape: Shape, stroke: str, css: str, width: float = 1.5) -> str:
        style = f'class="{css}" fill="none" stroke="{stroke}" stroke-width="{_num(width)}"'
        if isinstance(shape, Circle):
            return (
                f'<circle cx="{self.x(shape.center.x)}" cy="{self.y(shape.center.y)}" '
                f'r="{self.length(shape.radius)}" {style}/>'
            )
        points = " ".join(f"{self.x(v.x)},{self.y(v.y)}" for v in shape.vertices)
        return f'<polygon points="{points}" {style}/>'


class SvgExporter:
    """Exports a RunReport to SVG."""

    @staticmethod
    def to_svg(report: RunReport, scale: float = 80.0, margin: float = 20.0) -> str:
        scenario = report.scenario
        canvas = _Canvas(scenario.domain, scale, margin)
        d = scenario.domain
        lines: List[str] = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(canvas.width)}" '
            f'height="{_num(canvas.height)}" viewBox="0 0 {_num(canvas.width)} {_num(canvas.height)}">',
            f"<title>{scenario.name}</title>",
            f'<rect class="domain" x="{canvas.x(d.xmin)}" y="{canvas.y(d.ymax)}" '
            f'width="{canvas.length(d.xmax - d.xmin)}" height="{canvas.length(d.ymax - d.ymin)}" '
            'fill="white" stroke="black" stroke-width="2"/>',
        ]

        for ob in scenario.obstacles:
            lines.append(canvas.shape(ob.shape, BEFORE_COLOR, "obstacle"))
        for s in report.solutions:
            if s.feasible and (s.centroid_shift > 0 or s.rotation != 0):
                lines.append(canvas.shape(s.new_shape, AFTER_COLOR, "displaced", 2.0))

        states = report.trajectory.states
        if report.trajectory.controls:
            for state in states:
                for shape in dynamics.robot_shapes_at(state, scenario.robot):
                    lines.append(canvas.shape(shape, FOOTPRINT_COLOR, "footprint", 0.5))
            path = " ".join(f"{canvas.x(s.x)},{canvas.y(s.y)}" for s in states)
            lines.append(
                f'<polyline class="path" points="{path}" fill="none" '
                f'stroke="{PATH_COLOR}" stroke-width="1.5"/>'
            )

        robot = scenario.robot
        for css, state, color in (("start", robot.start, START_COLOR), ("goal", robot.goal, GOAL_COLOR)):
            lines.append(
                f'<circle class="{css}" cx="{canvas.x(state.x)}" cy="{canvas.y(state.y)}" '
                f'r="6" fill="{color}"/>'
            )
        lines.append("</svg>")
        return "\n".join(lines) + "\n"

    @staticmethod
    def export(report: RunReport, path: Union[str, Path], **kwargs) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(SvgExporter.to_svg(report, **kwargs))
        return path
