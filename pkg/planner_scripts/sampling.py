import dataclasses
import logging
import math
from typing import NamedTuple

import config
import costs
import geometry
from geometry import Vec2

logger = logging.getLogger(__name__)

# Slack between certified bounds, above floating point noise in the totals:
CERTIFY_MARGIN = 1e-9


@dataclasses.dataclass(frozen=True)
class SamplingParams:
    delta_l: float = config.DELTA_L
    n_dirs: int = config.N_DIRS
    v_max: float = config.V_MAX
    window_arcs: bool = config.WINDOW_ARCS_AS_FRONTIERS

    def __post_init__(self):
        if not self.delta_l > 0:
            raise ValueError('delta_l must be positive, got %s!' % self.delta_l)
        if self.n_dirs < 1:
            raise ValueError('n_dirs must be at least 1, got %s!' % self.n_dirs)
        if not self.v_max > 0:
            raise ValueError('v_max must be positive, got %s!' % self.v_max)


@dataclasses.dataclass(frozen=True)
class CandidateState:
    pos: Vec2
    vel_dir: float
    vel_mag: float
    frontier_id: int
    costs: object = None

    @property
    def velocity(self):
        if self.vel_mag == 0:
            return geometry.ZERO
        return Vec2.from_angle(self.vel_dir, self.vel_mag)

    @property
    def heading(self):
        return Vec2.from_angle(self.vel_dir)


class PruningReport(NamedTuple):
    n_sampled: int
    n_after_position: int
    n_after_velocity: int


##############################################################
# Sampling
##############################################################

def point_along(polyline, s):
    """Point at arc length s along a polyline, clamped to its ends.
    """
    remaining = s
    for i in range(len(polyline) - 1):
        seg = geometry.Segment(Vec2(*polyline[i]), Vec2(*polyline[i + 1]))
        length = seg.length()
        if remaining <= length:
            if length <= geometry.TOLERANCE:
                return seg.a
            return seg.point_at(remaining / length)
        remaining -= length
    return Vec2(*polyline[-1])


def frontier_speed_levels(frontier, params):
    """Number of nonzero speed levels N_v on a frontier.
    """
    return int(math.floor(frontier.length / params.delta_l + 1e-9))


def sample_candidates(local_map, params):
    """Enumerate the candidate states on every frontier.

    With params.window_arcs set, the straight pieces of the window arcs are
    sampled too, after the occlusion frontiers.

    Positions are spaced delta_l apart from the start of each frontier. Every
    position gets all n_dirs headings, and every heading gets the N_v + 1
    speeds v_max * n / N_v, where N_v = floor(length / delta_l). A frontier
    shorter than delta_l yields only the zero speed.

    Parameters
    ----------
    local_map : LocalMap
        The local map.
    params : SamplingParams
        The sampling parameters.

    Returns
    -------
    cands : list of CandidateState
        Ordered by frontier, position, heading then speed. Empty when the
        map has no frontiers.
    """
    cands = []
    directions = [2 * math.pi * n / params.n_dirs for n in range(params.n_dirs)]
    frontiers = local_map.sampling_frontiers(params.window_arcs)
    for fid, frontier in enumerate(frontiers):
        n_v = frontier_speed_levels(frontier, params)
        if n_v == 0:
            speeds = [0.0]
        else:
            speeds = [params.v_max * n / n_v for n in range(n_v + 1)]
        for k in range(n_v + 1):
            pos = point_along(frontier.polyline, k * params.delta_l)
            for vel_dir in directions:
                for vel_mag in speeds:
                    cands.append(CandidateState(pos, vel_dir, vel_mag, fid))
    return cands


##############################################################
# Pruning
##############################################################

def default_neighbor_radius(local_map):
    xmin, _, xmax, _ = local_map.window.shape.bounds
    return config.NEIGHBOR_RADIUS_FACTOR * (xmax - xmin)


def prune_by_position(
    cands, local_map, goal, neighbor_radius=None, objective=None
):
    """Drop candidates dominated by a nearby candidate on another frontier.

    A position is dominated when some position on a different frontier is
    strictly closer to the goal, closer than neighbor_radius, and joined to
    it by a straight segment inside free space. Given an objective, the
    dominating position must also be certified better: its upper bound on
    the best total has to lie below the dominated position's lower bound
    (see costs.position_bounds), so no candidate that could win is dropped.
    A frontier that loses every candidate is restored when no retained
    candidate lies within neighbor_radius of it.

    Parameters
    ----------
    cands : list of CandidateState
        The candidates.
    local_map : LocalMap
        The local map supplying free space.
    goal : Vec2
        The goal position.
    neighbor_radius : float, optional
        Domination radius. Default is half the window size.
    objective : costs.Objective, optional
        Objective used to certify each domination. Without one the geometric
        test alone decides.

    Returns
    -------
    kept : list of CandidateState
        The surviving candidates in input order.
    """
    if neighbor_radius is None:
        neighbor_radius = default_neighbor_radius(local_map)

    positions = {}
    for cand in cands:
        key = (cand.pos, cand.frontier_id)
        if key not in positions:
            positions[key] = cand.pos.distance_to(goal)
    if len({fid for _, fid in positions}) < 2:
        return list(cands)

    if objective is not None:
        lower, upper = costs.position_bounds(cands, local_map, objective)

    dominated = set()
    for (p, fid), p_goal in positions.items():
        for (q, gid), q_goal in positions.items():
            if gid == fid or not q_goal < p_goal:
                continue
            if not p.distance_to(q) < neighbor_radius:
                continue
            if objective is not None and not (
                lower.get((p, fid), -math.inf) >
                upper((q, gid)) + CERTIFY_MARGIN
            ):
                continue
            if local_map.segment_in_free_space(p, q):
                dominated.add((p, fid))
                break

    # Frontiers are checked closest to the goal first; a restored frontier
    # counts as retained for the ones after it.
    retained = [key for key in positions if key not in dominated]
    frontier_ids = sorted(
        {fid for _, fid in positions},
        key=lambda fid: (
            min(d for (_, gid), d in positions.items() if gid == fid), fid
        )
    )
    for fid in frontier_ids:
        own = [p for (p, gid) in positions if gid == fid]
        if any((p, fid) not in dominated for p in own):
            continue
        nearest = min(
            (p.distance_to(q) for p in own for (q, gid) in retained
             if gid != fid),
            default=math.inf
        )
        if nearest > neighbor_radius:
            dominated.difference_update((p, fid) for p in own)
            retained.extend((p, fid) for p in own)

    return [c for c in cands if (c.pos, c.frontier_id) not in dominated]


def prune_by_velocity(cands, local_map):
    """Drop moving candidates whose heading points into free space.

    Zero-velocity candidates and headings along the free-space boundary are
    always kept.
    """
    return [c for c in cands if costs.is_admissible(c, local_map)]


def plan_candidates(
    local_map, goal, params, prune=True, neighbor_radius=None, objective=None
):
    """Sample the frontiers and apply both pruning steps.

    Parameters
    ----------
    local_map : LocalMap
        The local map.
    goal : Vec2
        The goal position.
    params : SamplingParams
        The sampling parameters.
    prune : bool, optional
        Skip pruning when False. Default is True.
    neighbor_radius : float, optional
        Passed to prune_by_position.
    objective : costs.Objective, optional
        Passed to prune_by_position.

    Returns
    -------
    cands : list of CandidateState
        The candidates.
    report : PruningReport
        Candidate counts after each stage.
    """
    cands = sample_candidates(local_map, params)
    n_sampled = len(cands)
    if prune:
        cands = prune_by_position(
            cands, local_map, goal, neighbor_radius, objective
        )
        n_position = len(cands)
        cands = prune_by_velocity(cands, local_map)
    else:
        n_position = n_sampled
    report = PruningReport(n_sampled, n_position, len(cands))
    logger.debug(
        'Candidates: %d sampled, %d after position pruning, '
        '%d after velocity pruning', *report
    )
    return cands, report
