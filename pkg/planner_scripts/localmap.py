import dataclasses
import functools
import logging
import math
from typing import NamedTuple

import numpy as np
import shapely.geometry
import shapely.prepared

import config
import geometry
from geometry import Vec2, Polygon, Segment, GeometryError

logger = logging.getLogger(__name__)

# Distance within which an edge midpoint counts as lying on a boundary:
CLASSIFY_TOLERANCE = 1e-7
# Distance within which a frontier end meets an observed-chain end:
JUNCTION_TOLERANCE = 1e-6
# Opening reported for a candidate enclosed on every side:
MIN_SIGHT_ANGLE = 1e-6


class MapError(ValueError):
    """Raised when no valid local map can be built at a robot position.
    """


##############################################################
# Map Types
##############################################################

class SensedScene(NamedTuple):
    window: Polygon
    obstacles: tuple


class ClassifiedEdge(NamedTuple):
    segment: Segment
    kind: str  # 'obstacle', 'window' or 'frontier'
    owner: int  # obstacle index, -1 otherwise


class Frontier(NamedTuple):
    polyline: tuple
    length: float
    # What the free-space boundary continues as at either end: 'obstacle' or
    # 'window' for occlusion frontiers, and also 'frontier' for window arcs.
    start_kind: str
    end_kind: str


class ObservedBoundary(NamedTuple):
    polyline: tuple
    obstacle_id: int


class PredictedBoundary(NamedTuple):
    anchor: Vec2
    tangent: Vec2
    obstacle_id: int
    frontier_id: int

    def segment(self, length):
        return Segment(self.anchor, self.anchor + self.tangent * length)


@dataclasses.dataclass(frozen=True, eq=False)
class LocalMap:
    """Decomposition of the sliding window around the robot.

    The unknown region is never stored: a point is unknown when it is inside
    the window, outside free_space and on no boundary.
    """
    origin: Vec2
    window: Polygon
    obstacles: tuple
    free_space: Polygon
    edges: tuple
    frontiers: tuple
    observed_boundaries: tuple
    window_arcs: tuple
    predicted_boundaries: tuple = ()
    window_arc_frontiers: tuple = ()
    sight_cache: dict = dataclasses.field(default_factory=dict, repr=False)
    heading_cache: dict = dataclasses.field(default_factory=dict, repr=False)

    def sampling_frontiers(self, include_window_arcs=True):
        """Frontiers to sample: the occlusion frontiers, followed by the
        window arc pieces when include_window_arcs is set.
        """
        if include_window_arcs:
            return self.frontiers + self.window_arc_frontiers
        return self.frontiers

    @functools.cached_property
    def free_space_region(self):
        """Prepared free-space shape grown by CLASSIFY_TOLERANCE, for segment
        containment tests.
        """
        return shapely.prepared.prep(
            self.free_space.shape.buffer(CLASSIFY_TOLERANCE)
        )

    def segment_in_free_space(self, a, b):
        if Vec2(*a).distance_to(b) <= geometry.TOLERANCE:
            return self.free_space_region.covers(shapely.geometry.Point(a))
        return self.free_space_region.covers(shapely.geometry.LineString([a, b]))


##############################################################
# Map Construction
##############################################################

def classify_edges(free_space, obstacles, window):
    """Label each free-space boundary edge by what it lies on.

    Returns
    -------
    edges : list of ClassifiedEdge
        One entry per free-space edge, in boundary order.
    """
    edges = []
    for seg in free_space.edges():
        m = seg.midpoint()
        kind = 'frontier'
        owner = -1
        for j, obstacle in enumerate(obstacles):
            if obstacle.distance_to_boundary(m) <= CLASSIFY_TOLERANCE:
                kind = 'obstacle'
                owner = j
                break
        else:
            if window.distance_to_boundary(m) <= CLASSIFY_TOLERANCE:
                kind = 'window'
        edges.append(ClassifiedEdge(seg, kind, owner))
    return edges


def _chains(edges):
    """Merge circularly adjacent edges of the same class into polylines.

    Returns
    -------
    chains : list of (kind, owner, polyline)
    """
    n = len(edges)

    def key(edge):
        return (edge.kind, edge.owner)

    start = next(
        (i for i in range(n) if key(edges[i]) != key(edges[i - 1])), None
    )
    if start is None:
        # One class around the whole boundary; close the loop.
        polyline = [e.segment.a for e in edges] + [edges[0].segment.a]
        return [(edges[0].kind, edges[0].owner, polyline)]

    chains = []
    for k in range(n):
        edge = edges[(start + k) % n]
        if chains and (chains[-1][0], chains[-1][1]) == key(edge):
            chains[-1][2].append(edge.segment.b)
        else:
            chains.append((edge.kind, edge.owner, [edge.segment.a, edge.segment.b]))
    return chains


def _end_kind(chains, index):
    kind = chains[index % len(chains)][0]
    return 'obstacle' if kind == 'obstacle' else 'window'


def _boundary_tangent(obstacle, tip, neighbor):
    """Unit tangent of the obstacle boundary where it leaves the observed
    chain at tip.

    Every obstacle edge through tip offers the directions from tip to its far
    endpoints. The one turning furthest away from the chain's last edge (tip
    towards neighbor) is the boundary hidden beyond the junction: the next
    edge when tip is a vertex, the same edge continued otherwise.
    """
    tip = Vec2(*tip)
    back = Vec2(*neighbor) - tip
    back = back.normalized() if back.norm() > geometry.TOLERANCE else None
    best = None
    for seg in obstacle.edges():
        if seg.distance_to(tip) > CLASSIFY_TOLERANCE:
            continue
        for end in (seg.a, seg.b):
            if end.distance_to(tip) <= CLASSIFY_TOLERANCE:
                continue
            d = (end - tip).normalized()
            score = d.dot(back) if back is not None else 0.0
            if best is None or score < best[0]:
                best = (score, d)
    if best is None:
        return (tip - neighbor).normalized()
    return best[1]


def extract_predicted_boundaries(local_map):
    """Tangents of observed obstacle boundaries at their junctions with
    frontiers.

    Parameters
    ----------
    local_map : LocalMap
        The map; only its frontiers, observed boundaries and obstacles are
        used.

    Returns
    -------
    predicted : list of PredictedBoundary
        One entry per frontier end coinciding with an observed-chain end. The
        tangent follows the obstacle boundary past the junction, away from
        the chain and into the unobserved region.
    """
    predicted = []
    for fid, frontier in enumerate(local_map.frontiers):
        for end in (frontier.polyline[0], frontier.polyline[-1]):
            best = None
            for chain in local_map.observed_boundaries:
                pts = chain.polyline
                for tip, neighbor in ((pts[0], pts[1]), (pts[-1], pts[-2])):
                    d = tip.distance_to(end)
                    if d <= JUNCTION_TOLERANCE and (best is None or d < best[0]):
                        best = (d, tip, neighbor, chain.obstacle_id)
            if best is None:
                continue
            _, tip, neighbor, obstacle_id = best
            tangent = _boundary_tangent(
                local_map.obstacles[obstacle_id], tip, neighbor
            )
            predicted.append(PredictedBoundary(tip, tangent, obstacle_id, fid))
    return predicted


def _straight_runs(polyline):
    """Split a polyline at its corners into straight pieces.
    """
    runs = [[polyline[0], polyline[1]]]
    for p in polyline[2:]:
        run = runs[-1]
        a, b, c = Vec2(*run[-2]), Vec2(*run[-1]), Vec2(*p)
        if (
            (b - a).norm() <= geometry.TOLERANCE or
            (c - b).norm() <= geometry.TOLERANCE
        ):
            turn = 0.0
        else:
            turn = (b - a).normalized().cross((c - b).normalized())
        if abs(turn) <= geometry.TOLERANCE:
            run.append(p)
        else:
            runs.append([b, p])
    return runs


def _window_arc_frontiers(chains):
    """Window arcs as frontier records, one per straight piece.

    An end that meets another chain takes that chain's kind; an end at a
    window corner is 'window'.
    """
    records = []
    for i, (kind, _, polyline) in enumerate(chains):
        if kind != 'window':
            continue
        runs = _straight_runs(polyline)
        closed = len(chains) == 1
        if closed and len(runs) > 1:
            joined = _straight_runs(runs[-1] + runs[0][1:])
            if len(joined) == 1:
                runs = joined + runs[1:-1]
        for k, run in enumerate(runs):
            length = geometry.polyline_length(run)
            if length <= geometry.TOLERANCE:
                continue
            start_kind = end_kind = 'window'
            if not closed and k == 0:
                start_kind = chains[(i - 1) % len(chains)][0]
            if not closed and k == len(runs) - 1:
                end_kind = chains[(i + 1) % len(chains)][0]
            records.append(Frontier(tuple(run), length, start_kind, end_kind))
    return records


def build_local_map(robot_pos, window_size, obstacles):
    """Build the sliding local map around the robot.

    Parameters
    ----------
    robot_pos : Vec2
        The robot position; the window is centered here.
    window_size : float
        Side of the square window, in meters.
    obstacles : sequence of Polygon
        The sensed (inflated) obstacles. Obstacles missing the window are
        ignored.

    Returns
    -------
    local_map : LocalMap
        The decomposition, with predicted boundaries filled in. Window arcs
        are kept apart from the occlusion frontiers, both as polylines and
        as frontier records for sampling.

    Raises MapError when the visibility polygon cannot be built, which
    includes a robot inside an obstacle.
    """
    robot_pos = Vec2(*robot_pos)
    if window_size <= 0:
        raise MapError('Window size must be positive, got %s!' % window_size)
    window = geometry.square_window(robot_pos, window_size)
    obstacles = tuple(
        obstacle for obstacle in obstacles
        if obstacle.shape.intersects(window.shape)
    )
    try:
        free_space = geometry.visibility_polygon(robot_pos, obstacles, window)
    except GeometryError as e:
        raise MapError(
            'Cannot build local map at %s: %s' % (robot_pos, e)
        ) from e

    edges = classify_edges(free_space, obstacles, window)
    chains = _chains(edges)

    frontiers = []
    observed = []
    arcs = []
    for i, (kind, owner, polyline) in enumerate(chains):
        if kind == 'frontier':
            length = geometry.polyline_length(polyline)
            if length <= geometry.TOLERANCE:
                continue
            frontiers.append(Frontier(
                tuple(polyline), length,
                _end_kind(chains, i - 1), _end_kind(chains, i + 1)
            ))
        elif kind == 'obstacle':
            observed.append(ObservedBoundary(tuple(polyline), owner))
        else:
            arcs.append(tuple(polyline))

    local_map = LocalMap(
        origin=robot_pos,
        window=window,
        obstacles=obstacles,
        free_space=free_space,
        edges=tuple(edges),
        frontiers=tuple(frontiers),
        observed_boundaries=tuple(observed),
        window_arcs=tuple(arcs),
        window_arc_frontiers=tuple(_window_arc_frontiers(chains)),
    )
    local_map = dataclasses.replace(
        local_map,
        predicted_boundaries=tuple(extract_predicted_boundaries(local_map))
    )
    logger.debug(
        'Local map at %s: %d frontiers, %d observed boundaries, '
        '%d predicted boundaries',
        robot_pos, len(local_map.frontiers),
        len(local_map.observed_boundaries),
        len(local_map.predicted_boundaries)
    )
    return local_map


##############################################################
# Map Queries
##############################################################

def goal_in_free_space(local_map, goal):
    return local_map.free_space.covers(goal, tol=CLASSIFY_TOLERANCE)


def heading_enters_free_space(
    local_map, pos, vel_dir, step=config.VELOCITY_PRUNE_STEP
):
    """Whether moving from pos along the heading vel_dir goes straight into
    the interior of free space. Headings along the boundary do not.

    Results are cached on the map per (position, heading).
    """
    key = (float(pos[0]), float(pos[1]), float(vel_dir))
    if key not in local_map.heading_cache:
        ahead = Vec2(*pos) + Vec2.from_angle(vel_dir, step)
        local_map.heading_cache[key] = local_map.free_space.contains(
            ahead, tol=0.01 * step
        )
    return local_map.heading_cache[key]


def _blocking_arcs(candidate_pos, local_map):
    """Angular intervals (start, width) blocked by the obstacles with an
    observed boundary, as seen from candidate_pos.

    Obstacles are convex, so each blocks the angular hull of its vertices:
    less than pi from outside, exactly pi from a point on an edge and the
    interior angle from a vertex.
    """
    arcs = []
    c = np.asarray(candidate_pos, dtype=float)
    for j in sorted({chain.obstacle_id for chain in local_map.observed_boundaries}):
        obstacle = local_map.obstacles[j]
        pts = np.asarray(obstacle.vertices, dtype=float) - c
        pts = pts[np.hypot(pts[:, 0], pts[:, 1]) > geometry.TOLERANCE]
        if len(pts) < 2:
            continue
        center = np.asarray(obstacle.shape.centroid.coords[0]) - c
        reference = math.atan2(center[1], center[0])
        rel = np.angle(np.exp(1j * (np.arctan2(pts[:, 1], pts[:, 0]) - reference)))
        width = float(rel.max() - rel.min())
        if width > 1e-12:
            arcs.append((reference + float(rel.min()), width))
    return arcs


def _gaps(arcs):
    """Complement of a union of circular arcs, as (start, end) pairs with
    start < end and end possibly beyond 2*pi. None if fully covered.
    """
    two_pi = 2 * math.pi
    intervals = []
    for start, width in arcs:
        if width >= two_pi:
            return None
        start = geometry.wrap_angle(start)
        end = start + width
        if end > two_pi:
            intervals.append((start, two_pi))
            intervals.append((0.0, end - two_pi))
        else:
            intervals.append((start, end))
    intervals.sort()
    merged = []
    for start, end in intervals:
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    if len(merged) == 1 and merged[0][0] <= 0.0 and merged[0][1] >= two_pi:
        return None
    gaps = [
        (merged[i][1], merged[i + 1][0]) for i in range(len(merged) - 1)
    ]
    gaps.append((merged[-1][1], merged[0][0] + two_pi))
    return [(a, b) for a, b in gaps if b - a > 1e-12]


def _angular_distance(a, b):
    d = abs(geometry.wrap_angle(a) - geometry.wrap_angle(b))
    return min(d, 2 * math.pi - d)


def narrow_region_angle(candidate_pos, local_map):
    """Width of the free opening at a candidate, in (0, 2*pi].

    The observed obstacle boundaries each block an angular interval as seen
    from candidate_pos. The opening is the gap between blocked intervals that
    contains the direction the candidate leads into (away from the map
    origin), or the nearest gap when that direction is blocked.

    Parameters
    ----------
    candidate_pos : Vec2
        The candidate position.
    local_map : LocalMap
        The local map. Results are cached on it per position.

    Returns
    -------
    theta_sight : float
        The opening width in radians.
    """
    key = (float(candidate_pos[0]), float(candidate_pos[1]))
    if key in local_map.sight_cache:
        return local_map.sight_cache[key]

    arcs = _blocking_arcs(candidate_pos, local_map)
    if not arcs:
        theta_sight = 2 * math.pi
    else:
        gaps = _gaps(arcs)
        if not gaps:
            theta_sight = MIN_SIGHT_ANGLE
        else:
            lead = Vec2(*candidate_pos) - local_map.origin
            lead_angle = (
                geometry.wrap_angle(lead.angle())
                if lead.norm() > geometry.TOLERANCE else 0.0
            )
            chosen = None
            for a, b in gaps:
                if a <= lead_angle <= b or a <= lead_angle + 2 * math.pi <= b:
                    chosen = (a, b)
                    break
            if chosen is None:
                chosen = min(
                    gaps,
                    key=lambda gap: min(
                        _angular_distance(gap[0], lead_angle),
                        _angular_distance(gap[1], lead_angle)
                    )
                )
            theta_sight = max(chosen[1] - chosen[0], MIN_SIGHT_ANGLE)

    local_map.sight_cache[key] = theta_sight
    return theta_sight


##############################################################
# Debug Output
##############################################################

def _points(polyline):
    return [[float(p[0]), float(p[1])] for p in polyline]


def local_map_document(local_map):
    """JSON-serializable dump of the scene and the per-edge classification.
    """
    return {
        'origin': _points([local_map.origin])[0],
        'window': _points(local_map.window.vertices),
        'obstacles': [_points(o.vertices) for o in local_map.obstacles],
        'free_space': _points(local_map.free_space.vertices),
        'edges': [
            {
                'a': _points([e.segment.a])[0],
                'b': _points([e.segment.b])[0],
                'kind': e.kind,
                'owner': e.owner,
            }
            for e in local_map.edges
        ],
        'frontiers': [
            {
                'polyline': _points(f.polyline),
                'length': f.length,
                'start_kind': f.start_kind,
                'end_kind': f.end_kind,
            }
            for f in local_map.frontiers
        ],
        'observed_boundaries': [
            {'polyline': _points(b.polyline), 'obstacle_id': b.obstacle_id}
            for b in local_map.observed_boundaries
        ],
        'window_arcs': [_points(arc) for arc in local_map.window_arcs],
        'predicted_boundaries': [
            {
                'anchor': _points([p.anchor])[0],
                'tangent': _points([p.tangent])[0],
                'obstacle_id': p.obstacle_id,
                'frontier_id': p.frontier_id,
            }
            for p in local_map.predicted_boundaries
        ],
    }
