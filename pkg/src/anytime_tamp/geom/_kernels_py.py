"""Pure-Python collision and nearest-neighbour kernels.

Mirrors ``_ckernels.pyx`` operation for operation so both backends return
identical results on identical inputs (no fused multiply-adds, same
evaluation order).
"""

from __future__ import annotations

import math

BACKEND = "python"


class Obstacles:
    """Flattened polygon soup with per-polygon bounding boxes."""

    def __init__(self, polygons):
        self.xs = []
        self.ys = []
        self.offsets = [0]
        self.bbox = []
        for poly in polygons:
            px = [float(p[0]) for p in poly]
            py = [float(p[1]) for p in poly]
            self.xs.extend(px)
            self.ys.extend(py)
            self.offsets.append(len(self.xs))
            self.bbox.append((min(px), min(py), max(px), max(py)))
        self.n_polygons = len(self.bbox)


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_segment(ax, ay, bx, by, cx, cy):
    return (min(ax, bx) <= cx <= max(ax, bx)) and (min(ay, by) <= cy <= max(ay, by))


def _segments_intersect(ax, ay, bx, by, cx, cy, dx, dy):
    o1 = _orient(ax, ay, bx, by, cx, cy)
    o2 = _orient(ax, ay, bx, by, dx, dy)
    o3 = _orient(cx, cy, dx, dy, ax, ay)
    o4 = _orient(cx, cy, dx, dy, bx, by)
    if ((o1 > 0.0 and o2 < 0.0) or (o1 < 0.0 and o2 > 0.0)) and (
        (o3 > 0.0 and o4 < 0.0) or (o3 < 0.0 and o4 > 0.0)
    ):
        return True
    if o1 == 0.0 and _on_segment(ax, ay, bx, by, cx, cy):
        return True
    if o2 == 0.0 and _on_segment(ax, ay, bx, by, dx, dy):
        return True
    if o3 == 0.0 and _on_segment(cx, cy, dx, dy, ax, ay):
        return True
    if o4 == 0.0 and _on_segment(cx, cy, dx, dy, bx, by):
        return True
    return False


def _inside_polygon(obs, k, x, y):
    xs = obs.xs
    ys = obs.ys
    start = obs.offsets[k]
    end = obs.offsets[k + 1]
    inside = False
    j = end - 1
    for i in range(start, end):
        xi = xs[i]
        yi = ys[i]
        xj = xs[j]
        yj = ys[j]
        if (yi > y) != (yj > y):
            if x < (xj - xi) * (y - yi) / (yj - yi) + xi:
                inside = not inside
        j = i
    return inside


def point_in_obstacles(obs, x, y):
    """True if (x, y) lies inside any obstacle polygon."""
    for k in range(obs.n_polygons):
        x0, y0, x1, y1 = obs.bbox[k]
        if x < x0 or x > x1 or y < y0 or y > y1:
            continue
        if _inside_polygon(obs, k, x, y):
            return True
    return False


def segment_hits_obstacles(obs, ax, ay, bx, by):
    """Exact test: does the closed segment touch any obstacle?"""
    sx0 = min(ax, bx)
    sx1 = max(ax, bx)
    sy0 = min(ay, by)
    sy1 = max(ay, by)
    xs = obs.xs
    ys = obs.ys
    for k in range(obs.n_polygons):
        x0, y0, x1, y1 = obs.bbox[k]
        if sx1 < x0 or sx0 > x1 or sy1 < y0 or sy0 > y1:
            continue
        start = obs.offsets[k]
        end = obs.offsets[k + 1]
        j = end - 1
        for i in range(start, end):
            if _segments_intersect(ax, ay, bx, by, xs[j], ys[j], xs[i], ys[i]):
                return True
            j = i
        if _inside_polygon(obs, k, ax, ay):
            return True
    return False


def polyline_sampled_free(obs, px, py, eps):
    """Sampled check: every point at spacing <= eps along the polyline is free.

    Returns ``(free, n_samples)``.
    """
    n_pts = len(px)
    count = 0
    if n_pts == 0:
        return True, 0
    if point_in_obstacles(obs, px[0], py[0]):
        return False, 1
    count = 1
    for s in range(n_pts - 1):
        ax = px[s]
        ay = py[s]
        dx = px[s + 1] - ax
        dy = py[s + 1] - ay
        length = math.sqrt(dx * dx + dy * dy)
        n = int(math.ceil(length / eps))
        for k in range(1, n + 1):
            t = k / n
            count += 1
            if point_in_obstacles(obs, ax + t * dx, ay + t * dy):
                return False, count
    return True, count


class NearestIndex:
    """Append-only point set with linear-scan nearest neighbour."""

    def __init__(self, capacity=1024):
        self.xs = []
        self.ys = []

    def add(self, x, y):
        self.xs.append(float(x))
        self.ys.append(float(y))
        return len(self.xs) - 1

    def __len__(self):
        return len(self.xs)

    def nearest(self, qx, qy):
        xs = self.xs
        ys = self.ys
        best = -1
        best_d = math.inf
        for i in range(len(xs)):
            dx = xs[i] - qx
            dy = ys[i] - qy
            d = dx * dx + dy * dy
            if d < best_d:
                best_d = d
                best = i
        return best


def rrt_grow(obs, bx0, by0, bx1, by1, sx, sy, gx, gy, step, goal_bias, samples):
    """Grow a single RRT from (sx, sy) towards (gx, gy).

    Row ``k`` of ``samples`` holds the three uniforms used by iteration ``k``
    (goal-bias coin, x, y).  Returns ``(xs, ys, iterations, queries)`` where
    ``xs``/``ys`` is the start-to-goal node path, or ``None`` on failure.
    """
    rows = samples.tolist()
    xs = [float(sx)]
    ys = [float(sy)]
    parents = [-1]
    queries = 0
    sqrt = math.sqrt
    for k, (coin, ux, uy) in enumerate(rows):
        if coin < goal_bias:
            qx, qy = gx, gy
        else:
            qx = bx0 + ux * (bx1 - bx0)
            qy = by0 + uy * (by1 - by0)
        best = -1
        best_d = math.inf
        for i in range(len(xs)):
            dx = xs[i] - qx
            dy = ys[i] - qy
            d = dx * dx + dy * dy
            if d < best_d:
                best_d = d
                best = i
        nx = xs[best]
        ny = ys[best]
        dx = qx - nx
        dy = qy - ny
        d = sqrt(dx * dx + dy * dy)
        if d == 0.0:
            continue
        if d <= step:
            newx, newy = qx, qy
        else:
            newx = nx + step * dx / d
            newy = ny + step * dy / d
        queries += 1
        if segment_hits_obstacles(obs, nx, ny, newx, newy):
            continue
        xs.append(newx)
        ys.append(newy)
        parents.append(best)
        dx = gx - newx
        dy = gy - newy
        if sqrt(dx * dx + dy * dy) <= step:
            at_goal = newx == gx and newy == gy
            if not at_goal:
                queries += 1
                if segment_hits_obstacles(obs, newx, newy, gx, gy):
                    continue
            px = [] if at_goal else [gx]
            py = [] if at_goal else [gy]
            i = len(xs) - 1
            while i >= 0:
                px.append(xs[i])
                py.append(ys[i])
                i = parents[i]
            px.reverse()
            py.reverse()
            return px, py, k + 1, queries
    return None, None, len(rows), queries
