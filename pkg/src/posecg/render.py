"""SVG drawing of a solved instance."""

from __future__ import annotations

import colorsys
from xml.sax.saxutils import quoteattr

from .instance import Instance

MARGIN = 20.0
RADIUS = 5.0
SQUARE = 6.0
CROSS = 5.0


class MissingPositions(ValueError):
    pass


def pose_color(k: int) -> str:
    # golden-angle hue steps keep neighbouring poses apart
    h = (k * 0.381966) % 1.0
    r, g, b = colorsys.hls_to_rgb(h, 0.45, 0.75)
    return f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}"


def render_svg(instance: Instance, solution) -> str:
    """SVG text: circles at global detections, squares at locals, limb
    segments between detections of a pose whose parts share an edge, grey
    crosses at false positives."""
    if not instance.has_positions:
        raise MissingPositions("every detection needs a position to be drawn")
    pos = [d.position for d in instance.detections]
    xs = [p[0] for p in pos] or [0.0]
    ys = [p[1] for p in pos] or [0.0]
    x0, y0 = min(xs) - MARGIN, min(ys) - MARGIN
    w = max(xs) - min(xs) + 2 * MARGIN
    h = max(ys) - min(ys) + 2 * MARGIN

    def xy(d):
        return pos[d][0] - x0, pos[d][1] - y0

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1f}" height="{h:.1f}" '
           f'viewBox="0 0 {w:.1f} {h:.1f}">',
           f'<rect class="background" x="0" y="0" width="{w:.1f}" height="{h:.1f}" fill="white"/>']
    graph = instance.part_graph
    part_of = instance.part_of
    for k, pose in enumerate(solution.poses):
        color = quoteattr(pose_color(k))
        ids = list(pose.column.detections)
        out.append(f'<g class="pose" id="pose-{k}">')
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                if graph.has_edge(part_of[a], part_of[b]):
                    (ax, ay), (bx, by) = xy(a), xy(b)
                    out.append(f'<line x1="{ax:.2f}" y1="{ay:.2f}" x2="{bx:.2f}" y2="{by:.2f}" '
                               f'stroke={color} stroke-width="2"/>')
        for d in ids:
            cx, cy = xy(d)
            out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{RADIUS}" fill={color}>'
                       f'<title>{d} {part_of[d]}</title></circle>')
        for loc in pose.locals:
            for d in loc.locals:
                cx, cy = xy(d)
                s = SQUARE
                out.append(f'<rect x="{cx - s / 2:.2f}" y="{cy - s / 2:.2f}" width="{s}" height="{s}" '
                           f'fill={color}><title>{d} {part_of[d]} local of {loc.anchor}</title></rect>')
        out.append("</g>")
    for d in solution.false_positives:
        cx, cy = xy(d)
        c = CROSS
        out.append(f'<path class="false-positive" d="M{cx - c:.2f},{cy - c:.2f}L{cx + c:.2f},{cy + c:.2f}'
                   f'M{cx - c:.2f},{cy + c:.2f}L{cx + c:.2f},{cy - c:.2f}" stroke="#999999" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
