import math
from typing import NamedTuple

import numpy as np
import shapely.geometry

# Angular offset for the rays cast on either side of a critical vertex:
ANGLE_EPSILON = 1e-6
# Length tolerance used by every point-on-edge and degeneracy test:
TOLERANCE = 1e-9


class GeometryError(ValueError):
    """Raised when a geometric operation is called outside of its domain.
    """


##############################################################
# Primitive Types
##############################################################

class Vec2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):
        return Vec2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Vec2(self.x - other[0], self.y - other[1])

    def __mul__(self, k):
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return Vec2(self.x / k, self.y / k)

    def __neg__(self):
        return Vec2(-self.x, -self.y)

    def dot(self, other):
        return self.x * other[0] + self.y * other[1]

    def cross(self, other):
        return self.x * other[1] - self.y * other[0]

    def norm(self):
        return math.hypot(self.x, self.y)

    def normalized(self):
        """Get the unit vector pointing the same way.

        Raises GeometryError for (near) zero vectors.
        """
        n = self.norm()
        if n <= TOLERANCE:
            raise GeometryError('Cannot normalize the zero vector %s!' % (self,))
        return Vec2(self.x / n, self.y / n)

    def angle(self):
        return math.atan2(self.y, self.x)

    def distance_to(self, other):
        return math.hypot(self.x - other[0], self.y - other[1])

    def is_finite(self):
        return math.isfinite(self.x) and math.isfinite(self.y)

    @classmethod
    def from_angle(cls, angle, length=1.0):
        return cls(length * math.cos(angle), length * math.sin(angle))


ZERO = Vec2(0.0, 0.0)


class Segment(NamedTuple):
    a: Vec2
    b: Vec2

    def length(self):
        return self.a.distance_to(self.b)

    def direction(self):
        return (self.b - self.a).normalized()

    def midpoint(self):
        return (self.a + self.b) * 0.5

    def point_at(self, u):
        return self.a + (self.b - self.a) * u

    def closest_param(self, p):
        """Parameter in [0, 1] of the point on the segment nearest to p.
        """
        e = self.b - self.a
        ee = e.dot(e)
        if ee <= TOLERANCE * TOLERANCE:
            return 0.0
        return min(1.0, max(0.0, (Vec2(*p) - self.a).dot(e) / ee))

    def closest_point(self, p):
        return self.point_at(self.closest_param(p))

    def distance_to(self, p):
        return self.closest_point(p).distance_to(p)


class Polygon(object):
    def __init__(self, vertices):
        """Simple polygon stored counter-clockwise.

        Parameters
        ----------
        vertices : sequence of (x, y)
            The vertices, in either orientation. Clockwise input is reversed.

        Raises GeometryError if there are fewer than three vertices, the
        signed area vanishes, or the boundary self-intersects.
        """
        vertices = [Vec2(float(x), float(y)) for x, y in vertices]
        if len(vertices) < 3:
            raise GeometryError(
                'A polygon needs at least 3 vertices, got %d!' % len(vertices)
            )
        if not shapely.geometry.LinearRing(vertices).is_ccw:
            vertices.reverse()
        self.vertices = tuple(vertices)
        self.shape = shapely.geometry.Polygon(self.vertices)
        if self.shape.area <= TOLERANCE:
            raise GeometryError('Polygon has no area: %s' % (self.vertices,))
        if not self.shape.is_valid:
            raise GeometryError(
                'Polygon is not simple: %s' % (self.vertices,)
            )

    def __repr__(self):
        return 'Polygon(%r)' % (list(self.vertices),)

    def __len__(self):
        return len(self.vertices)

    @property
    def area(self):
        return self.shape.area

    def edges(self):
        n = len(self.vertices)
        return [
            Segment(self.vertices[i], self.vertices[(i + 1) % n])
            for i in range(n)
        ]

    def distance_to_boundary(self, p):
        return self.shape.exterior.distance(shapely.geometry.Point(p))

    def covers(self, p, tol=TOLERANCE):
        """Whether p lies inside or on the boundary (within tol).
        """
        return self.shape.distance(shapely.geometry.Point(p)) <= tol

    def contains(self, p, tol=TOLERANCE):
        """Whether p lies strictly inside, farther than tol from the boundary.
        """
        point = shapely.geometry.Point(p)
        return (
            self.shape.contains(point) and
            self.shape.exterior.distance(point) > tol
        )

    def covers_segment(self, s, tol=TOLERANCE):
        line = shapely.geometry.LineString([s.a, s.b])
        return self.shape.buffer(tol).covers(line)

    def translated(self, offset):
        return Polygon([v + offset for v in self.vertices])


class RayHit(NamedTuple):
    point: Vec2
    kind: str  # 'obstacle_edge' or 'window_edge'
    obstacle_id: int  # -1 for window hits
    distance: float


##############################################################
# Vector Operations
##############################################################

def rotate(v, angle):
    """Rotate a vector counter-clockwise.

    Parameters
    ----------
    v : Vec2
        The vector to rotate.
    angle : float
        The rotation angle in radians.

    Returns
    -------
    rotated : Vec2
        The rotated vector.
    """
    c = math.cos(angle)
    s = math.sin(angle)
    return Vec2(c * v[0] - s * v[1], s * v[0] + c * v[1])


def project(v, onto):
    """Orthogonal projection of v onto the line spanned by onto.

    Raises GeometryError if onto is the zero vector.
    """
    onto = Vec2(*onto)
    denom = onto.dot(onto)
    if denom <= TOLERANCE * TOLERANCE:
        raise GeometryError('Cannot project onto the zero vector!')
    return onto * (onto.dot(v) / denom)


def wrap_angle(angle):
    """Map an angle to [0, 2*pi).
    """
    wrapped = math.fmod(angle, 2 * math.pi)
    if wrapped < 0:
        wrapped += 2 * math.pi
    if wrapped >= 2 * math.pi:
        wrapped = 0.0
    return wrapped


def turning_angle(incoming, outgoing):
    """Deviation from straight continuation, in [0, pi]. Zero vectors give 0.
    """
    incoming = Vec2(*incoming)
    outgoing = Vec2(*outgoing)
    if incoming.norm() <= TOLERANCE or outgoing.norm() <= TOLERANCE:
        return 0.0
    return abs(math.atan2(incoming.cross(outgoing), incoming.dot(outgoing)))


def ray_ray_intersection(o1, d1, o2, d2):
    """Intersect the rays o1 + s*d1 and o2 + t*d2 (s, t >= 0).

    Returns
    -------
    params : (float, float) or None
        (s, t) at the intersection, or None for parallel or non-meeting rays.
    """
    d1 = Vec2(*d1)
    denom = d1.cross(d2)
    if abs(denom) <= TOLERANCE:
        return None
    w = Vec2(*o2) - o1
    s = w.cross(d2) / denom
    t = w.cross(d1) / denom
    if s < -TOLERANCE or t < -TOLERANCE:
        return None
    return max(s, 0.0), max(t, 0.0)


def point_ray_distance(p, anchor, direction):
    """Distance from p to the ray anchor + t*direction, t >= 0.
    """
    direction = Vec2(*direction).normalized()
    t = max(0.0, (Vec2(*p) - anchor).dot(direction))
    return (Vec2(*anchor) + direction * t).distance_to(p)


def segment_intersection(s1, s2):
    """Proper or touching intersection point of two non-parallel segments.

    Returns None for parallel segments or segments that do not meet.
    """
    e1 = s1.b - s1.a
    e2 = s2.b - s2.a
    denom = e1.cross(e2)
    if abs(denom) <= TOLERANCE * max(1.0, e1.norm() * e2.norm()):
        return None
    w = s2.a - s1.a
    u = w.cross(e2) / denom
    v = w.cross(e1) / denom
    if -TOLERANCE <= u <= 1 + TOLERANCE and -TOLERANCE <= v <= 1 + TOLERANCE:
        return s1.point_at(u)
    return None


def polyline_length(points):
    return sum(
        Vec2(*points[i]).distance_to(points[i + 1])
        for i in range(len(points) - 1)
    )


def closest_point_on_polyline(p, points):
    """Closest point to p on a polyline.

    Parameters
    ----------
    p : Vec2
        The query point.
    points : list of Vec2
        The polyline vertices (at least one).

    Returns
    -------
    closest : Vec2
        The closest point.
    segment_index : int
        Index of the polyline segment holding the closest point.
    """
    if len(points) == 1:
        return Vec2(*points[0]), 0
    best = None
    for i in range(len(points) - 1):
        seg = Segment(Vec2(*points[i]), Vec2(*points[i + 1]))
        q = seg.closest_point(p)
        d = q.distance_to(p)
        if best is None or d < best[0] - TOLERANCE:
            best = (d, q, i)
    return best[1], best[2]


##############################################################
# Polygon Construction
##############################################################

def rectangle(xmin, ymin, xmax, ymax):
    return Polygon([(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)])


def square_window(center, size):
    """Axis-aligned square of side `size` centered at `center`.
    """
    h = 0.5 * size
    return rectangle(center[0] - h, center[1] - h, center[0] + h, center[1] + h)


def inflate(polygon, radius):
    """Grow a convex polygon outward by `radius` with mitred corners.

    The result stays a convex polygon, so the disc robot can be treated as a
    point against it.
    """
    if radius <= 0:
        return polygon
    grown = polygon.shape.buffer(
        radius, join_style=shapely.geometry.JOIN_STYLE.mitre
    )
    return Polygon(list(grown.exterior.coords)[:-1])


def wall_obstacles(bounds, thickness):
    """Turn the arena bounds into convex wall slabs lying just outside it.

    Each bounds edge becomes a quadrilateral extruded outward by `thickness`
    and stretched by `thickness` at both ends so that corners are closed.
    """
    walls = []
    for seg in bounds.edges():
        e = seg.direction()
        outward = Vec2(e.y, -e.x)
        a = seg.a - e * thickness
        b = seg.b + e * thickness
        walls.append(Polygon([
            a, b, b + outward * thickness, a + outward * thickness
        ]))
    return walls


##############################################################
# Ray Casting
##############################################################

class EdgeTable(object):
    def __init__(self, obstacles, window):
        """Flat array view of every obstacle edge followed by the window
        edges, so that many rays can be cast with one numpy evaluation.

        Parameters
        ----------
        obstacles : list of Polygon
            The occluders.
        window : Polygon
            The enclosing sensing window.
        """
        starts = []
        ends = []
        owners = []
        for j, obstacle in enumerate(obstacles):
            for seg in obstacle.edges():
                starts.append(seg.a)
                ends.append(seg.b)
                owners.append(j)
        for seg in window.edges():
            starts.append(seg.a)
            ends.append(seg.b)
            owners.append(-1)
        self.starts = np.array(starts, dtype=float).reshape(-1, 2)
        self.ends = np.array(ends, dtype=float).reshape(-1, 2)
        self.owners = np.array(owners, dtype=int)

    def cast(self, origin, directions):
        """Cast unit-direction rays from origin.

        Parameters
        ----------
        origin : Vec2
            Start of every ray.
        directions : array, (k, 2)
            Unit ray directions.

        Returns
        -------
        t : array, (k,)
            Distance to the nearest hit (inf when nothing is hit).
        edge_idx : array, (k,)
            Index of the edge hit.
        """
        d = np.asarray(directions, dtype=float).reshape(-1, 2)
        o = np.asarray(origin, dtype=float)
        e = self.ends - self.starts
        ao = self.starts - o
        bo = self.ends - o

        dx = d[:, 0, None]
        dy = d[:, 1, None]
        denom = dx * e[None, :, 1] - dy * e[None, :, 0]
        num_t = ao[None, :, 0] * e[None, :, 1] - ao[None, :, 1] * e[None, :, 0]
        num_s = ao[None, :, 0] * dy - ao[None, :, 1] * dx

        parallel = np.abs(denom) <= 1e-12
        with np.errstate(divide='ignore', invalid='ignore'):
            t = num_t / denom
            s = num_s / denom
        proper = (
            (~parallel) & (t > 0) &
            (s >= -TOLERANCE) & (s <= 1 + TOLERANCE)
        )

        # Rays running along an edge stop at its nearer endpoint.
        collinear = parallel & (np.abs(num_s) <= TOLERANCE)
        ta = ao[None, :, 0] * dx + ao[None, :, 1] * dy
        tb = bo[None, :, 0] * dx + bo[None, :, 1] * dy
        t_col = np.minimum(
            np.where(ta > 0, ta, np.inf), np.where(tb > 0, tb, np.inf)
        )

        t_all = np.where(proper, t, np.where(collinear, t_col, np.inf))
        edge_idx = np.argmin(t_all, axis=1)
        t_min = t_all[np.arange(t_all.shape[0]), edge_idx]
        return t_min, edge_idx

    def hit(self, origin, direction, t, edge_idx):
        owner = int(self.owners[edge_idx])
        point = Vec2(*origin) + Vec2(*direction) * float(t)
        if owner < 0:
            return RayHit(point, 'window_edge', -1, float(t))
        return RayHit(point, 'obstacle_edge', owner, float(t))


def check_observer(origin, obstacles, window):
    """Raise GeometryError unless origin is strictly inside the window and
    not strictly inside any obstacle.
    """
    if not window.contains(origin):
        raise GeometryError(
            'Observer %s is not strictly inside the window!' % (origin,)
        )
    for j, obstacle in enumerate(obstacles):
        if obstacle.contains(origin):
            raise GeometryError(
                'Observer %s lies inside obstacle %d!' % (origin, j)
            )


def ray_cast(origin, direction, obstacles, window):
    """Nearest intersection of a ray with the obstacles or the window.

    Parameters
    ----------
    origin : Vec2
        Ray origin, strictly inside window and outside every obstacle.
    direction : Vec2
        Ray direction (normalized internally).
    obstacles : list of Polygon
        The occluders.
    window : Polygon
        The sensing window.

    Returns
    -------
    hit : RayHit
        The hit point and what was hit. Ties go to the obstacle listed first.
    """
    origin = Vec2(*origin)
    check_observer(origin, obstacles, window)
    direction = Vec2(*direction).normalized()
    table = EdgeTable(obstacles, window)
    t, idx = table.cast(origin, [direction])
    if not np.isfinite(t[0]):
        raise GeometryError('Ray from %s escaped the window!' % (origin,))
    return table.hit(origin, direction, t[0], idx[0])


def _critical_points(obstacles, window):
    """Points whose bearing can start or end a visibility-polygon edge.
    """
    points = list(window.vertices)
    window_edges = window.edges()
    for obstacle in obstacles:
        points.extend(v for v in obstacle.vertices if window.covers(v))
        for seg in obstacle.edges():
            for w in window_edges:
                q = segment_intersection(seg, w)
                if q is not None:
                    points.append(q)
    # Overlapping obstacles create corners where their edges cross.
    for j in range(len(obstacles)):
        for k in range(j + 1, len(obstacles)):
            if not obstacles[j].shape.intersects(obstacles[k].shape):
                continue
            for s1 in obstacles[j].edges():
                for s2 in obstacles[k].edges():
                    q = segment_intersection(s1, s2)
                    if q is not None and window.covers(q):
                        points.append(q)
    return points


def visibility_scan(origin, obstacles, window):
    """Cast the critical rays of a visibility sweep.

    Every critical point contributes the ray through it plus two rays offset
    by ANGLE_EPSILON on either side.

    Returns
    -------
    hits : list of RayHit
        Hits in counter-clockwise angular order, consecutive duplicates
        removed.
    """
    origin = Vec2(*origin)
    check_observer(origin, obstacles, window)

    rays = []
    for q in _critical_points(obstacles, window):
        offset = Vec2(*q) - origin
        if offset.norm() <= TOLERANCE:
            continue
        d = offset.normalized()
        for direction in (rotate(d, -ANGLE_EPSILON), d, rotate(d, ANGLE_EPSILON)):
            rays.append((wrap_angle(direction.angle()), direction))
    rays.sort(key=lambda ray: ray[0])

    unique = []
    for angle, direction in rays:
        if unique and angle - unique[-1][0] <= 1e-12:
            continue
        unique.append((angle, direction))
    if unique and (unique[0][0] + 2 * math.pi) - unique[-1][0] <= 1e-12:
        unique.pop()

    table = EdgeTable(obstacles, window)
    directions = [direction for _, direction in unique]
    t, idx = table.cast(origin, directions)

    hits = []
    for k, direction in enumerate(directions):
        if not np.isfinite(t[k]):
            raise GeometryError('Ray from %s escaped the window!' % (origin,))
        hit = table.hit(origin, direction, t[k], idx[k])
        if hits and hit.point.distance_to(hits[-1].point) <= TOLERANCE:
            continue
        hits.append(hit)
    while len(hits) > 1 and hits[0].point.distance_to(hits[-1].point) <= TOLERANCE:
        hits.pop()
    return hits


def visibility_polygon(origin, obstacles, window):
    """Star-shaped polygon of all window points visible from origin.

    Raises GeometryError under the same conditions as ray_cast, or if the
    sweep does not produce a valid polygon.
    """
    hits = visibility_scan(origin, obstacles, window)
    return Polygon([hit.point for hit in hits])


def segment_polygon_intersection(s, p):
    """Points where segment s meets the boundary of polygon p.

    Returns
    -------
    points : list of Vec2
        Intersection points ordered from s.a to s.b. Overlaps with an edge
        contribute their two end points.
    """
    d = s.b - s.a
    dd = d.dot(d)
    found = []
    for edge in p.edges():
        e = edge.b - edge.a
        denom = d.cross(e)
        w = edge.a - s.a
        if abs(denom) <= TOLERANCE * max(1.0, math.sqrt(dd) * e.norm()):
            # Parallel: only collinear overlaps count.
            if dd <= TOLERANCE or abs(w.cross(d)) > TOLERANCE * math.sqrt(dd):
                continue
            u_a = w.dot(d) / dd
            u_b = (edge.b - s.a).dot(d) / dd
            lo = max(0.0, min(u_a, u_b))
            hi = min(1.0, max(u_a, u_b))
            if lo <= hi + TOLERANCE:
                found.append(lo)
                found.append(hi)
            continue
        u = w.cross(e) / denom
        v = w.cross(d) / denom
        if -TOLERANCE <= u <= 1 + TOLERANCE and -TOLERANCE <= v <= 1 + TOLERANCE:
            found.append(min(1.0, max(0.0, u)))

    points = []
    for u in sorted(found):
        q = s.point_at(u)
        if points and q.distance_to(points[-1]) <= TOLERANCE:
            continue
        points.append(q)
    return points
