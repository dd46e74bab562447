# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled collision and nearest-neighbour kernels.

Operation-for-operation twin of ``_kernels_py``; build with
``-ffp-contract=off`` so results match the fallback bit for bit.
"""

from libc.math cimport sqrt, ceil, INFINITY
from libc.stdlib cimport malloc, realloc, free

BACKEND = "cython"


cdef class Obstacles:
    cdef double* xs
    cdef double* ys
    cdef Py_ssize_t* offsets
    cdef double* bbox
    cdef public Py_ssize_t n_polygons

    def __cinit__(self, polygons):
        cdef Py_ssize_t n_vert = 0, k = 0, i = 0, pos = 0
        polys = [list(p) for p in polygons]
        for p in polys:
            n_vert += len(p)
        self.n_polygons = len(polys)
        self.xs = <double*> malloc(max(n_vert, 1) * sizeof(double))
        self.ys = <double*> malloc(max(n_vert, 1) * sizeof(double))
        self.offsets = <Py_ssize_t*> malloc((self.n_polygons + 1) * sizeof(Py_ssize_t))
        self.bbox = <double*> malloc(max(self.n_polygons, 1) * 4 * sizeof(double))
        if not self.xs or not self.ys or not self.offsets or not self.bbox:
            raise MemoryError()
        self.offsets[0] = 0
        for k in range(self.n_polygons):
            p = polys[k]
            x0 = INFINITY
            y0 = INFINITY
            x1 = -INFINITY
            y1 = -INFINITY
            for i in range(len(p)):
                vx = float(p[i][0])
                vy = float(p[i][1])
                self.xs[pos] = vx
                self.ys[pos] = vy
                pos += 1
                x0 = min(x0, vx)
                y0 = min(y0, vy)
                x1 = max(x1, vx)
                y1 = max(y1, vy)
            self.offsets[k + 1] = pos
            self.bbox[4 * k] = x0
            self.bbox[4 * k + 1] = y0
            self.bbox[4 * k + 2] = x1
            self.bbox[4 * k + 3] = y1

    def __dealloc__(self):
        free(self.xs)
        free(self.ys)
        free(self.offsets)
        free(self.bbox)


cdef inline double _orient(double ax, double ay, double bx, double by,
                           double cx, double cy) nogil:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


cdef inline bint _on_segment(double ax, double ay, double bx, double by,
                             double cx, double cy) nogil:
    cdef double lox = ax if ax < bx else bx
    cdef double hix = bx if ax < bx else ax
    cdef double loy = ay if ay < by else by
    cdef double hiy = by if ay < by else ay
    return lox <= cx <= hix and loy <= cy <= hiy


cdef bint _segments_intersect(double ax, double ay, double bx, double by,
                              double cx, double cy, double dx, double dy) nogil:
    cdef double o1 = _orient(ax, ay, bx, by, cx, cy)
    cdef double o2 = _orient(ax, ay, bx, by, dx, dy)
    cdef double o3 = _orient(cx, cy, dx, dy, ax, ay)
    cdef double o4 = _orient(cx, cy, dx, dy, bx, by)
    if ((o1 > 0.0 and o2 < 0.0) or (o1 < 0.0 and o2 > 0.0)) and \
       ((o3 > 0.0 and o4 < 0.0) or (o3 < 0.0 and o4 > 0.0)):
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


cdef bint _inside_polygon(Obstacles obs, Py_ssize_t k, double x, double y) nogil:
    cdef Py_ssize_t start = obs.offsets[k]
    cdef Py_ssize_t end = obs.offsets[k + 1]
    cdef Py_ssize_t i, j = end - 1
    cdef bint inside = False
    cdef double xi, yi, xj, yj
    for i in range(start, end):
        xi = obs.xs[i]
        yi = obs.ys[i]
        xj = obs.xs[j]
        yj = obs.ys[j]
        if (yi > y) != (yj > y):
            if x < (xj - xi) * (y - yi) / (yj - yi) + xi:
                inside = not inside
        j = i
    return inside


cdef bint _point_in(Obstacles obs, double x, double y) nogil:
    cdef Py_ssize_t k
    for k in range(obs.n_polygons):
        if x < obs.bbox[4 * k] or x > obs.bbox[4 * k + 2] or \
           y < obs.bbox[4 * k + 1] or y > obs.bbox[4 * k + 3]:
            continue
        if _inside_polygon(obs, k, x, y):
            return True
    return False


def point_in_obstacles(Obstacles obs, double x, double y):
    """True if (x, y) lies inside any obstacle polygon."""
    return _point_in(obs, x, y)


def segment_hits_obstacles(Obstacles obs, double ax, double ay, double bx, double by):
    """Exact test: does the closed segment touch any obstacle?"""
    cdef double sx0 = ax if ax < bx else bx
    cdef double sx1 = bx if ax < bx else ax
    cdef double sy0 = ay if ay < by else by
    cdef double sy1 = by if ay < by else ay
    cdef Py_ssize_t k, i, j, start, end
    for k in range(obs.n_polygons):
        if sx1 < obs.bbox[4 * k] or sx0 > obs.bbox[4 * k + 2] or \
           sy1 < obs.bbox[4 * k + 1] or sy0 > obs.bbox[4 * k + 3]:
            continue
        start = obs.offsets[k]
        end = obs.offsets[k + 1]
        j = end - 1
        for i in range(start, end):
            if _segments_intersect(ax, ay, bx, by, obs.xs[j], obs.ys[j],
                                   obs.xs[i], obs.ys[i]):
                return True
            j = i
        if _inside_polygon(obs, k, ax, ay):
            return True
    return False


def polyline_sampled_free(Obstacles obs, px, py, double eps):
    """Sampled check: every point at spacing <= eps along the polyline is free.

    Returns ``(free, n_samples)``.
    """
    cdef Py_ssize_t n_pts = len(px)
    cdef Py_ssize_t s, k, n
    cdef long count = 0
    cdef double ax, ay, dx, dy, length, t
    if n_pts == 0:
        return True, 0
    if _point_in(obs, px[0], py[0]):
        return False, 1
    count = 1
    for s in range(n_pts - 1):
        ax = px[s]
        ay = py[s]
        dx = <double> px[s + 1] - ax
        dy = <double> py[s + 1] - ay
        length = sqrt(dx * dx + dy * dy)
        n = <Py_ssize_t> ceil(length / eps)
        for k in range(1, n + 1):
            t = <double> k / <double> n
            count += 1
            if _point_in(obs, ax + t * dx, ay + t * dy):
                return False, count
    return True, count


cdef class NearestIndex:
    """Append-only point set with linear-scan nearest neighbour."""
    cdef double* xs
    cdef double* ys
    cdef Py_ssize_t n
    cdef Py_ssize_t cap

    def __cinit__(self, Py_ssize_t capacity=1024):
        self.cap = capacity if capacity > 0 else 1
        self.n = 0
        self.xs = <double*> malloc(self.cap * sizeof(double))
        self.ys = <double*> malloc(self.cap * sizeof(double))
        if not self.xs or not self.ys:
            raise MemoryError()

    def __dealloc__(self):
        free(self.xs)
        free(self.ys)

    def add(self, double x, double y):
        cdef double* nx
        cdef double* ny
        if self.n == self.cap:
            nx = <double*> realloc(self.xs, 2 * self.cap * sizeof(double))
            if not nx:
                raise MemoryError()
            self.xs = nx
            ny = <double*> realloc(self.ys, 2 * self.cap * sizeof(double))
            if not ny:
                raise MemoryError()
            self.ys = ny
            self.cap *= 2
        self.xs[self.n] = x
        self.ys[self.n] = y
        self.n += 1
        return self.n - 1

    def __len__(self):
        return self.n

    def nearest(self, double qx, double qy):
        cdef Py_ssize_t i, best = -1
        cdef double dx, dy, d, best_d = INFINITY
        for i in range(self.n):
            dx = self.xs[i] - qx
            dy = self.ys[i] - qy
            d = dx * dx + dy * dy
            if d < best_d:
                best_d = d
                best = i
        return best


def rrt_grow(Obstacles obs, double bx0, double by0, double bx1, double by1,
             double sx, double sy, double gx, double gy,
             double step, double goal_bias, const double[:, ::1] samples):
    """Grow a single RRT from (sx, sy) towards (gx, gy).

    Row ``k`` of ``samples`` holds the three uniforms used by iteration ``k``
    (goal-bias coin, x, y).  Returns ``(xs, ys, iterations, queries)`` where
    ``xs``/``ys`` is the start-to-goal node path, or ``None`` on failure.
    """
    cdef Py_ssize_t cap = samples.shape[0]
    cdef double* xs = <double*> malloc((cap + 1) * sizeof(double))
    cdef double* ys = <double*> malloc((cap + 1) * sizeof(double))
    cdef Py_ssize_t* parents = <Py_ssize_t*> malloc((cap + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t n = 1, k, i, best
    cdef long queries = 0
    cdef double qx, qy, dx, dy, d, best_d, nx, ny, newx, newy
    if not xs or not ys or not parents:
        free(xs)
        free(ys)
        free(parents)
        raise MemoryError()
    xs[0] = sx
    ys[0] = sy
    parents[0] = -1
    try:
        for k in range(cap):
            if samples[k, 0] < goal_bias:
                qx = gx
                qy = gy
            else:
                qx = bx0 + samples[k, 1] * (bx1 - bx0)
                qy = by0 + samples[k, 2] * (by1 - by0)
            best = -1
            best_d = INFINITY
            for i in range(n):
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
                newx = qx
                newy = qy
            else:
                newx = nx + step * dx / d
                newy = ny + step * dy / d
            queries += 1
            if segment_hits_obstacles(obs, nx, ny, newx, newy):
                continue
            xs[n] = newx
            ys[n] = newy
            parents[n] = best
            n += 1
            dx = gx - newx
            dy = gy - newy
            if sqrt(dx * dx + dy * dy) <= step:
                if not (newx == gx and newy == gy):
                    queries += 1
                    if segment_hits_obstacles(obs, newx, newy, gx, gy):
                        continue
                px = []
                py = []
                if not (newx == gx and newy == gy):
                    px.append(gx)
                    py.append(gy)
                i = n - 1
                while i >= 0:
                    px.append(xs[i])
                    py.append(ys[i])
                    i = parents[i]
                px.reverse()
                py.reverse()
                return px, py, k + 1, queries
        return None, None, cap, queries
    finally:
        free(xs)
        free(ys)
        free(parents)
