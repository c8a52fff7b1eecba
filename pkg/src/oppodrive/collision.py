"""Oriented-rectangle intersection via the separating axis test."""

from __future__ import annotations

import math


def rectangle_corners(x: float, y: float, heading: float, length: float, width: float):
    """Corners of a length x width rectangle centered at (x, y), rotated by heading."""
    hl, hw = length / 2.0, width / 2.0
    c, s = math.cos(heading), math.sin(heading)
    local = ((hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw))
    return [(x + dx * c - dy * s, y + dx * s + dy * c) for dx, dy in local]


def _project(corners, axis):
    dots = [cx * axis[0] + cy * axis[1] for cx, cy in corners]
    return min(dots), max(dots)


def rectangles_intersect(corners_a, corners_b) -> bool:
    # Two unique edge directions per rectangle -> four candidate axes.
    for corners in (corners_a, corners_b):
        for i in (0, 1):
            x1, y1 = corners[i]
            x2, y2 = corners[i + 1]
            axis = (y1 - y2, x2 - x1)
            lo_a, hi_a = _project(corners_a, axis)
            lo_b, hi_b = _project(corners_b, axis)
            if hi_a < lo_b or hi_b < lo_a:
                return False
    return True


def check_collision(a, b, length: float = 5.0, width: float = 2.0) -> bool:
    """True iff the two vehicles' oriented rectangles intersect."""
    # Cheap circumscribed-circle rejection before the axis test.
    radius = math.hypot(length, width)  # 2 * circumradius
    if math.hypot(b.x - a.x, b.y - a.y) > radius:
        return False
    ca = rectangle_corners(a.x, a.y, a.heading, length, width)
    cb = rectangle_corners(b.x, b.y, b.heading, length, width)
    return rectangles_intersect(ca, cb)
