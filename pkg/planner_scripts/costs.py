import dataclasses
import logging
import math
from typing import NamedTuple, Optional

import numpy as np

import config
import geometry
import localmap
from geometry import Vec2

logger = logging.getLogger(__name__)


class PlannerError(ValueError):
    """Raised when no intermediate state can be selected.
    """


##############################################################
# Parameter Records
##############################################################

@dataclasses.dataclass(frozen=True)
class CostWeights:
    w_p: float = config.W_P
    w_r: float = config.W_R
    w_v: float = config.W_V

    def __post_init__(self):
        for name in ('w_p', 'w_r', 'w_v'):
            if getattr(self, name) < 0:
                raise ValueError(
                    'Weight %s must be non-negative, got %s!'
                    % (name, getattr(self, name))
                )
        if self.w_p == 0 and self.w_r == 0 and self.w_v == 0:
            raise ValueError('At least one cost weight must be positive!')

    @classmethod
    def for_strategy(cls, label):
        """Weights of a named strategy from config.STRATEGIES.
        """
        try:
            return cls(*config.STRATEGIES[label])
        except KeyError:
            raise ValueError(
                'Unknown strategy "%s"! Known strategies: %s'
                % (label, ', '.join(sorted(config.STRATEGIES)))
            ) from None


@dataclasses.dataclass(frozen=True)
class CostParams:
    theta_thres: float = config.THETA_THRES
    f_a: float = config.F_A
    f_theta: float = config.F_THETA
    delta_v: float = config.DELTA_V
    penalty: float = config.PENALTY
    tau_ref: float = config.TAU_REF
    restitution_n: float = config.RESTITUTION_N
    restitution_t: float = config.RESTITUTION_T
    d_min: float = config.D_MIN

    def __post_init__(self):
        if self.f_a < 1:
            raise ValueError('f_a must be at least 1, got %s!' % self.f_a)
        if not 0 <= self.f_theta <= 1:
            raise ValueError('f_theta must be in [0, 1], got %s!' % self.f_theta)
        if not self.delta_v > 0:
            raise ValueError('delta_v must be positive, got %s!' % self.delta_v)
        if self.penalty > 0:
            raise ValueError('penalty must be <= 0, got %s!' % self.penalty)
        if self.tau_ref < 0:
            raise ValueError('tau_ref must be >= 0, got %s!' % self.tau_ref)
        for name in ('restitution_n', 'restitution_t'):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValueError('%s must be in (0, 1], got %s!' % (name, value))
        if not self.d_min > 0:
            raise ValueError('d_min must be positive, got %s!' % self.d_min)


@dataclasses.dataclass(frozen=True)
class PlannerContext:
    p_cur: Vec2
    p_goal: Vec2
    p_pre: Vec2
    p_ini: Vec2
    traveled_length: float = 0.0

    def __post_init__(self):
        if self.traveled_length < 0:
            raise ValueError(
                'traveled_length must be non-negative, got %s!'
                % self.traveled_length
            )


class CostBreakdown(NamedTuple):
    j_pos: float
    j_risk: float
    j_risk_h: float
    j_risk_g: float
    j_vel: float
    r_ref: float
    total: float
    # Unnormalized inputs, kept for logging:
    p_pos: float = 0.0
    inv_tc: float = 0.0
    collision_point: Optional[Vec2] = None


##############################################################
# Individual Terms
##############################################################

def normalize(values):
    """Min-max normalize a batch to [0, 1]. A constant batch maps to zeros.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return values
    lo = values.min()
    span = values.max() - lo
    if span <= 0:
        return np.zeros_like(values)
    return (values - lo) / span


def cost_pos(cand, ctx, params):
    """Raw position cost: path length so far plus the step to the candidate,
    plus the remaining straight-line distance, multiplied by f_a when the
    turn at p_cur is at least theta_thres.
    """
    d_pos = (
        ctx.traveled_length + cand.pos.distance_to(ctx.p_cur) +
        cand.pos.distance_to(ctx.p_goal)
    )
    turn = geometry.turning_angle(
        Vec2(*ctx.p_cur) - ctx.p_pre, cand.pos - ctx.p_cur
    )
    if turn >= params.theta_thres:
        return params.f_a * d_pos
    return d_pos


def potential_collision_point(cand, predicted):
    """Nearest point where the candidate's velocity ray meets a predicted
    boundary ray.

    Returns
    -------
    hit : (Vec2, PredictedBoundary) or None
        The collision point and the boundary hit, or None for a stationary
        candidate or when no ray is met.
    """
    if cand.vel_mag <= 0:
        return None
    heading = cand.heading
    best = None
    for e in predicted:
        params = geometry.ray_ray_intersection(
            cand.pos, heading, e.anchor, e.tangent
        )
        if params is None:
            continue
        s = params[0]
        if best is None or s < best[0]:
            best = (s, e)
    if best is None:
        return None
    return cand.pos + heading * best[0], best[1]


def inverse_collision_time(cand, local_map, predicted, params, hit=None):
    """1 / t_c for one candidate.

    A moving candidate closes on its potential collision point at the speed
    component toward it; without such a point it is never expected to
    collide. A stationary candidate creeps at delta_v toward the nearest
    predicted boundary, or the nearest observed boundary when there is none.
    Distances are clamped below by d_min.
    """
    if cand.vel_mag > 0:
        if hit is None:
            hit = potential_collision_point(cand, predicted)
        if hit is None:
            return 0.0
        offset = hit[0] - cand.pos
        d_p = offset.norm()
        if d_p > geometry.TOLERANCE:
            v_c = geometry.project(cand.velocity, offset).norm()
        else:
            v_c = cand.vel_mag
        return v_c / max(d_p, params.d_min)

    if predicted:
        d_p = min(
            geometry.point_ray_distance(cand.pos, e.anchor, e.tangent)
            for e in predicted
        )
    elif local_map.observed_boundaries:
        d_p = min(
            geometry.closest_point_on_polyline(cand.pos, b.polyline)[0]
            .distance_to(cand.pos)
            for b in local_map.observed_boundaries
        )
    else:
        return 0.0
    return params.delta_v / max(d_p, params.d_min)


def cost_risk(cand, local_map, predicted, params, batch):
    """Risk of one candidate within its batch.

    Returns
    -------
    j_risk : float
        The gap term plus the normalized collision-time term.
    j_risk_h : float
        The normalized collision-time term alone.
    """
    if not batch:
        raise PlannerError('Cannot normalize risk over an empty batch!')
    inv = normalize([
        inverse_collision_time(c, local_map, predicted, params) for c in batch
    ])
    index = next(i for i, c in enumerate(batch) if c == cand)
    j_risk_h = float(inv[index])
    j_risk_g = -params.f_theta * localmap.narrow_region_angle(cand.pos, local_map)
    return j_risk_g + j_risk_h, j_risk_h


def reflect_velocity(v_in, e_p, params):
    e = Vec2(*e_p).normalized()
    n = geometry.rotate(e, math.pi / 2)
    v_t = e.dot(v_in)
    v_n = n.dot(v_in)
    return e * (params.restitution_t * v_t) - n * (params.restitution_n * v_n)


def reward_reflection(cand, p_p, e_hit, local_map, goal, params):
    """Reward for the bounce predicted at p_p.

    Returns the post-impact velocity's component toward the goal, or the
    penalty when the bounce carries the robot back into known free space.
    """
    v_ref = reflect_velocity(cand.velocity, e_hit.tangent, params)
    p_ref = Vec2(*p_p) + v_ref * params.tau_ref
    if local_map.free_space.covers(p_ref):
        return params.penalty
    to_goal = Vec2(*goal) - p_p
    if to_goal.norm() <= geometry.TOLERANCE:
        return v_ref.norm()
    return v_ref.dot(to_goal.normalized())


def cost_vel(cand, j_risk_h, r_ref, ctx):
    progress = cand.velocity.dot(Vec2(*ctx.p_goal) - ctx.p_cur)
    return -progress * (1 - j_risk_h) - r_ref * j_risk_h


##############################################################
# Selection
##############################################################

@dataclasses.dataclass(frozen=True)
class Objective:
    """Everything needed to score candidates besides the map."""
    ctx: PlannerContext
    weights: CostWeights = CostWeights()
    params: CostParams = CostParams()


def is_admissible(cand, local_map):
    """Moving states must not head back into the interior of free space.
    """
    if cand.vel_mag <= 0:
        return True
    return not localmap.heading_enters_free_space(
        local_map, cand.pos, cand.vel_dir
    )


def _normalize_masked(values, mask):
    """Min-max normalize with the range taken over the masked entries only.
    """
    values = np.asarray(values, dtype=float)
    ranged = values[np.asarray(mask, dtype=bool)] if any(mask) else values
    if ranged.size == 0:
        return values
    lo = ranged.min()
    span = ranged.max() - lo
    if span <= 0:
        return np.zeros_like(values)
    return (values - lo) / span


def evaluate_candidates(cands, ctx, local_map, predicted, weights, params):
    """Score a whole batch.

    Inadmissible candidates (see is_admissible) get an infinite total and
    take no part in normalization.

    Parameters
    ----------
    cands : list of CandidateState
        The batch; position and risk terms are normalized over its
        admissible members.
    ctx : PlannerContext
        The planning context.
    local_map : LocalMap
        The local map.
    predicted : list of PredictedBoundary
        The predicted boundaries.
    weights : CostWeights
        The objective weights.
    params : CostParams
        The cost parameters.

    Returns
    -------
    breakdowns : list of CostBreakdown
        One per candidate, in input order.
    """
    admissible = [is_admissible(c, local_map) for c in cands]
    p_pos = [cost_pos(c, ctx, params) for c in cands]
    hits = [potential_collision_point(c, predicted) for c in cands]
    inv_tc = [
        inverse_collision_time(c, local_map, predicted, params, hit=hit)
        for c, hit in zip(cands, hits)
    ]
    j_pos = _normalize_masked(p_pos, admissible)
    j_risk_h = _normalize_masked(inv_tc, admissible)

    breakdowns = []
    for i, cand in enumerate(cands):
        j_risk_g = -params.f_theta * localmap.narrow_region_angle(
            cand.pos, local_map
        )
        h = float(j_risk_h[i])
        j_risk = j_risk_g + h
        if hits[i] is None:
            r_ref = 0.0
            collision_point = None
        else:
            collision_point, e_hit = hits[i]
            r_ref = reward_reflection(
                cand, collision_point, e_hit, local_map, ctx.p_goal, params
            )
        j_vel = cost_vel(cand, h, r_ref, ctx)
        jp = float(j_pos[i])
        if admissible[i]:
            total = weights.w_p * jp + weights.w_r * j_risk + weights.w_v * j_vel
        else:
            total = math.inf
        breakdowns.append(CostBreakdown(
            jp, j_risk, h, j_risk_g, j_vel, r_ref, total,
            p_pos[i], inv_tc[i], collision_point
        ))
    return breakdowns


def position_bounds(cands, local_map, objective):
    """Bounds on the best total reachable at each candidate position.

    The bounds hold for the totals evaluate_candidates assigns to the same
    batch. Lower bounds use only position terms plus worst-case velocity
    terms. Upper bounds come from candidates whose total is known without a
    reflection reward: stationary ones, and moving ones with no predicted
    collision, whose normalized collision term is exactly zero.

    Parameters
    ----------
    cands : list of CandidateState
        The whole batch.
    local_map : LocalMap
        The local map.
    objective : Objective
        The objective.

    Returns
    -------
    lower : dict
        (pos, frontier_id) -> lower bound over its admissible candidates.
    upper : callable
        upper((pos, frontier_id)) -> an upper bound on the smallest total at
        that position, computed on demand.
    """
    ctx, weights, params = objective.ctx, objective.weights, objective.params
    predicted = local_map.predicted_boundaries
    admissible = [is_admissible(c, local_map) for c in cands]
    p_pos = [cost_pos(c, ctx, params) for c in cands]
    j_pos = _normalize_masked(p_pos, admissible)
    to_goal = Vec2(*ctx.p_goal) - ctx.p_cur

    groups = {}
    for i, cand in enumerate(cands):
        if admissible[i]:
            groups.setdefault((cand.pos, cand.frontier_id), []).append(i)

    base = {}
    lower = {}
    for key, members in groups.items():
        theta = localmap.narrow_region_angle(key[0], local_map)
        base[key] = (
            weights.w_p * float(j_pos[members[0]]) -
            weights.w_r * params.f_theta * theta
        )
        best = 0.0
        for i in members:
            cand = cands[i]
            if cand.vel_mag > 0:
                progress = cand.velocity.dot(to_goal)
                best = min(
                    best, -weights.w_v * progress,
                    weights.w_r - weights.w_v * cand.vel_mag
                )
        lower[key] = base[key] + best

    upper_cache = {}

    def upper(key):
        if key not in upper_cache:
            best = math.inf
            for i in groups.get(key, ()):
                cand = cands[i]
                if cand.vel_mag <= 0:
                    inv = inverse_collision_time(
                        cand, local_map, predicted, params
                    )
                    best = min(best, base[key] + (0.0 if inv == 0 else weights.w_r))
                elif potential_collision_point(cand, predicted) is None:
                    progress = cand.velocity.dot(to_goal)
                    best = min(best, base[key] - weights.w_v * progress)
            upper_cache[key] = best
        return upper_cache[key]

    return lower, upper


def rank_candidates(cands, ctx, local_map, predicted, weights, params):
    """Admissible candidates ordered best first.

    Ties go to the smaller risk, then to the earlier candidate.

    Returns
    -------
    order : list of int
        Indices into cands, best first, inadmissible ones left out.
    breakdowns : list of CostBreakdown
        One per candidate, in input order.
    """
    if not cands:
        raise PlannerError('No candidate states to select from!')
    breakdowns = evaluate_candidates(
        cands, ctx, local_map, predicted, weights, params
    )
    order = sorted(
        (i for i, b in enumerate(breakdowns) if not math.isinf(b.total)),
        key=lambda i: (breakdowns[i].total, breakdowns[i].j_risk, i)
    )
    if not order:
        raise PlannerError(
            'None of the %d candidate states is admissible!' % len(cands)
        )
    return order, breakdowns


def select_intermediate_state(cands, ctx, local_map, predicted, weights, params):
    """Pick the candidate minimizing the weighted objective.

    Returns
    -------
    selected : CandidateState
        The winner, with its costs attached.
    breakdown : CostBreakdown
        The winner's cost terms.
    """
    order, breakdowns = rank_candidates(
        cands, ctx, local_map, predicted, weights, params
    )
    best = order[0]
    breakdown = breakdowns[best]
    logger.debug('Selected candidate %d of %d: %s', best, len(cands), breakdown)
    return dataclasses.replace(cands[best], costs=breakdown), breakdown
