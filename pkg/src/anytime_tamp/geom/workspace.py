"""2D polygonal workspace: bounds, obstacles, named regions and components.

File format (``.wspc``), one statement per line, ``#`` starts a comment::

    bounds XMIN YMIN XMAX YMAX
    obstacle NAME polygon X1 Y1 X2 Y2 ...
    obstacle NAME rect XMIN YMIN XMAX YMAX
    obstacle NAME circle CX CY R SEGMENTS
    region NAME rect XMIN YMIN XMAX YMAX
    region NAME polygon X1 Y1 ...
    component NAME AX AY BX BY HALF_WIDTH
    dock REGION_NAME
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from . import kernels


class WorkspaceError(ValueError):
    pass


class Pose(NamedTuple):
    x: float
    y: float

    def distance(self, other: "Pose") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


def polygon_area(poly) -> float:
    s = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2.0


def _is_convex(poly) -> bool:
    n = len(poly)
    sign = 0
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        cx, cy = poly[(i + 2) % n]
        cross = (bx - ax) * (cy - by) - (by - ay) * (cx - bx)
        if cross != 0:
            if sign == 0:
                sign = 1 if cross > 0 else -1
            elif (cross > 0) != (sign > 0):
                return False
    return True


def _rect(x0, y0, x1, y1):
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


@dataclass(frozen=True)
class Region:
    name: str
    polygon: tuple[tuple[float, float], ...]

    @property
    def area(self) -> float:
        return polygon_area(self.polygon)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        xs = [p[0] for p in self.polygon]
        ys = [p[1] for p in self.polygon]
        return min(xs), min(ys), max(xs), max(ys)

    def contains(self, pose) -> bool:
        # convex polygon: same side of every edge (boundary counts as inside)
        x, y = pose
        n = len(self.polygon)
        sign = 0
        for i in range(n):
            ax, ay = self.polygon[i]
            bx, by = self.polygon[(i + 1) % n]
            cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
            if cross != 0:
                s = 1 if cross > 0 else -1
                if sign == 0:
                    sign = s
                elif s != sign:
                    return False
        return True

    def distance(self, pose) -> float:
        """Euclidean distance from ``pose`` to the region (0 inside)."""
        if self.contains(pose):
            return 0.0
        x, y = pose
        best = math.inf
        n = len(self.polygon)
        for i in range(n):
            ax, ay = self.polygon[i]
            bx, by = self.polygon[(i + 1) % n]
            dx, dy = bx - ax, by - ay
            L2 = dx * dx + dy * dy
            t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((x - ax) * dx + (y - ay) * dy) / L2))
            best = min(best, math.hypot(x - (ax + t * dx), y - (ay + t * dy)))
        return best


@dataclass(frozen=True)
class Component:
    """An inspectable part: a major-axis segment plus an envelope half-width."""

    name: str
    a: Pose
    b: Pose
    half_width: float

    @property
    def length(self) -> float:
        return self.a.distance(self.b)

    @property
    def envelope(self) -> tuple[tuple[float, float], ...]:
        ux, uy = (self.b.x - self.a.x) / self.length, (self.b.y - self.a.y) / self.length
        nx, ny = -uy * self.half_width, ux * self.half_width
        return (
            (self.a.x + nx, self.a.y + ny),
            (self.b.x + nx, self.b.y + ny),
            (self.b.x - nx, self.b.y - ny),
            (self.a.x - nx, self.a.y - ny),
        )

    @property
    def envelope_area(self) -> float:
        return 2.0 * self.half_width * self.length

    def axis_projection(self, pose) -> float:
        dx, dy = self.b.x - self.a.x, self.b.y - self.a.y
        return ((pose[0] - self.a.x) * dx + (pose[1] - self.a.y) * dy) / (dx * dx + dy * dy)


@dataclass
class Workspace:
    bounds: tuple[float, float, float, float]
    obstacles: dict[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)
    regions: dict[str, Region] = field(default_factory=dict)
    components: dict[str, Component] = field(default_factory=dict)
    docks: tuple[str, ...] = ()

    def __post_init__(self):
        self._kernel = kernels.Obstacles(list(self.obstacles.values()))

    @property
    def kernel(self):
        return self._kernel

    @property
    def width(self) -> float:
        return self.bounds[2] - self.bounds[0]

    @property
    def height(self) -> float:
        return self.bounds[3] - self.bounds[1]

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def area(self) -> float:
        return self.width * self.height

    def in_bounds(self, pose) -> bool:
        x0, y0, x1, y1 = self.bounds
        return x0 <= pose[0] <= x1 and y0 <= pose[1] <= y1

    def pose_free(self, pose) -> bool:
        return self.in_bounds(pose) and not kernels.point_in_obstacles(self._kernel, float(pose[0]), float(pose[1]))

    def segment_free(self, p, q) -> bool:
        return not kernels.segment_hits_obstacles(self._kernel, float(p[0]), float(p[1]), float(q[0]), float(q[1]))

    def region_of(self, pose) -> str | None:
        for name, r in self.regions.items():
            if r.contains(pose):
                return name
        return None

    def dock_distance(self, pose) -> float:
        if not self.docks:
            return 0.0
        return min(self.regions[d].distance(pose) for d in self.docks)

    def validate(self) -> None:
        x0, y0, x1, y1 = self.bounds
        if not (x1 > x0 and y1 > y0):
            raise WorkspaceError("empty bounds")
        for r in self.regions.values():
            if not _is_convex(r.polygon):
                raise WorkspaceError(f"region {r.name!r} is not convex")
            if not all(self.in_bounds(p) for p in r.polygon):
                raise WorkspaceError(f"region {r.name!r} leaves the workspace bounds")
            n = len(r.polygon)
            for i in range(n):
                if not self.segment_free(r.polygon[i], r.polygon[(i + 1) % n]):
                    raise WorkspaceError(f"region {r.name!r} overlaps an obstacle")
            for oname, poly in self.obstacles.items():
                if any(r.contains(v) for v in poly):
                    raise WorkspaceError(f"obstacle {oname!r} lies inside region {r.name!r}")
        for d in self.docks:
            if d not in self.regions:
                raise WorkspaceError(f"dock {d!r} is not a region")


def _floats(tokens, lineno) -> list[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise WorkspaceError(f"line {lineno}: expected numbers") from None


def _shape(kind: str, nums: list[float], lineno: int):
    if kind == "rect":
        if len(nums) != 4:
            raise WorkspaceError(f"line {lineno}: rect needs 4 numbers")
        return _rect(*nums)
    if kind == "polygon":
        if len(nums) < 6 or len(nums) % 2:
            raise WorkspaceError(f"line {lineno}: polygon needs >= 3 vertices")
        return tuple((nums[i], nums[i + 1]) for i in range(0, len(nums), 2))
    if kind == "circle":
        if len(nums) != 4:
            raise WorkspaceError(f"line {lineno}: circle needs CX CY R SEGMENTS")
        cx, cy, r, seg = nums
        n = int(seg)
        return tuple(
            (round(cx + r * math.cos(2 * math.pi * k / n), 9), round(cy + r * math.sin(2 * math.pi * k / n), 9))
            for k in range(n)
        )
    raise WorkspaceError(f"line {lineno}: unknown shape {kind!r}")


def parse_workspace(text: str) -> Workspace:
    bounds = None
    obstacles: dict[str, tuple] = {}
    regions: dict[str, Region] = {}
    components: dict[str, Component] = {}
    docks: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kw = tok[0]
        if kw == "bounds":
            b = _floats(tok[1:], lineno)
            if len(b) != 4:
                raise WorkspaceError(f"line {lineno}: bounds needs 4 numbers")
            bounds = tuple(b)
        elif kw in ("obstacle", "region"):
            if len(tok) < 3:
                raise WorkspaceError(f"line {lineno}: {kw} NAME SHAPE ...")
            name = tok[1]
            if name in obstacles or name in regions:
                raise WorkspaceError(f"line {lineno}: duplicate name {name!r}")
            poly = _shape(tok[2], _floats(tok[3:], lineno), lineno)
            if kw == "obstacle":
                obstacles[name] = poly
            else:
                regions[name] = Region(name, poly)
        elif kw == "component":
            nums = _floats(tok[2:], lineno)
            if len(nums) != 5:
                raise WorkspaceError(f"line {lineno}: component NAME AX AY BX BY HALF_WIDTH")
            components[tok[1]] = Component(tok[1], Pose(nums[0], nums[1]), Pose(nums[2], nums[3]), nums[4])
        elif kw == "dock":
            docks.extend(tok[1:])
        else:
            raise WorkspaceError(f"line {lineno}: unknown statement {kw!r}")
    if bounds is None:
        raise WorkspaceError("missing bounds")
    ws = Workspace(bounds, obstacles, regions, components, tuple(docks))
    ws.validate()
    return ws


def load_workspace(path) -> Workspace:
    return parse_workspace(Path(path).read_text(encoding="utf-8"))
