import dataclasses
import logging
import math
import time
from typing import NamedTuple, Optional

import numpy as np

import config
import controller
import costs
import geometry
import localmap
import sampling
import trajectory
from geometry import Vec2, Segment

logger = logging.getLogger(__name__)


class SimulationError(ValueError):
    """Raised for physically impossible simulator states.
    """


##############################################################
# Simulation Types
##############################################################

@dataclasses.dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    theta: float = 0.0
    v: float = 0.0

    def __post_init__(self):
        for name in ('x', 'y', 'theta', 'v'):
            if not math.isfinite(getattr(self, name)):
                raise SimulationError(
                    'Robot state field %s is not finite!' % name
                )
        if self.v < 0:
            raise SimulationError('Robot speed must be >= 0, got %s!' % self.v)

    @property
    def position(self):
        return Vec2(self.x, self.y)

    @property
    def velocity(self):
        return Vec2.from_angle(self.theta, self.v)

    @classmethod
    def from_motion(cls, position, velocity):
        velocity = Vec2(*velocity)
        speed = velocity.norm()
        theta = geometry.wrap_angle(velocity.angle()) if speed > 0 else 0.0
        return cls(float(position[0]), float(position[1]), theta, speed)


@dataclasses.dataclass(frozen=True, eq=False)
class World:
    """An arena with convex obstacles, a start and a goal.

    Collision geometry is the obstacles and the arena walls, all grown by the
    robot radius so the robot is a point against them.
    """
    bounds: geometry.Polygon
    obstacles: tuple
    goal: Vec2
    start: Vec2
    robot_radius: float = config.ROBOT_RADIUS
    rng_seed: int = 0
    name: str = 'world'

    def __post_init__(self):
        if not self.robot_radius > 0:
            raise SimulationError(
                'Robot radius must be positive, got %s!' % self.robot_radius
            )
        walls = geometry.wall_obstacles(self.bounds, config.WALL_THICKNESS)
        inflated = tuple(
            geometry.inflate(o, self.robot_radius)
            for o in tuple(self.obstacles) + tuple(walls)
        )
        object.__setattr__(self, 'collision_obstacles', inflated)

    def in_collision(self, p):
        return any(o.contains(p) for o in self.collision_obstacles)


@dataclasses.dataclass(frozen=True)
class NoiseParams:
    actuation_sigma: float = config.ACTUATION_SIGMA
    goal_range_sigma: float = config.GOAL_RANGE_SIGMA
    goal_bearing_sigma: float = config.GOAL_BEARING_SIGMA
    v_max: float = config.V_MAX

    def __post_init__(self):
        for name in ('actuation_sigma', 'goal_range_sigma', 'goal_bearing_sigma'):
            if getattr(self, name) < 0:
                raise ValueError('%s must be >= 0!' % name)

    @classmethod
    def noiseless(cls):
        return cls(0.0, 0.0, 0.0)


class CollisionEvent(NamedTuple):
    t: float
    point: Vec2
    obstacle_id: int
    v_before: Vec2
    v_after: Vec2
    intentional: bool


class TrialRecord(NamedTuple):
    trial_id: int
    strategy: str
    t_map: float
    arrival_time: float
    path_length: float
    n_collisions: int
    n_intentional: int
    success: bool
    seed: int


class CycleLog(NamedTuple):
    t: float
    n_sampled: int
    n_after_position: int
    n_after_velocity: int
    # Wall-clock timings in milliseconds; nan when not measured:
    pruned_ms: float
    unpruned_ms: float
    mode: str
    total_cost: float


@dataclasses.dataclass(frozen=True)
class PlannerConfig:
    strategy: str = 'harness'
    weights: costs.CostWeights = costs.CostWeights()
    cost_params: costs.CostParams = costs.CostParams()
    sampling_params: sampling.SamplingParams = sampling.SamplingParams()
    gains: controller.PidGains = controller.PidGains()
    noise: NoiseParams = NoiseParams()
    window_size: float = config.WINDOW_SIZE
    p_safe: float = config.P_SAFE
    n_samples: int = config.N_SAMPLES
    dt: float = config.DT
    control_period: float = config.CONTROL_PERIOD
    goal_tolerance: float = config.GOAL_TOLERANCE
    n_beams: Optional[int] = config.N_BEAMS
    prune: bool = True
    measure_unpruned: bool = False
    clearance: float = 0.0
    clearance_attempts: int = config.CLEARANCE_ATTEMPTS

    def __post_init__(self):
        if not self.window_size > 0:
            raise ValueError('window_size must be positive!')
        if not self.dt > 0 or self.control_period < self.dt:
            raise ValueError(
                'Need 0 < dt <= control_period, got dt=%s, control_period=%s!'
                % (self.dt, self.control_period)
            )
        if self.p_safe < 1:
            raise ValueError('p_safe must be at least 1, got %s!' % self.p_safe)
        if self.clearance < 0 or self.clearance_attempts < 1:
            raise ValueError(
                'Need clearance >= 0 and clearance_attempts >= 1, got %s, %s!'
                % (self.clearance, self.clearance_attempts)
            )

    @classmethod
    def for_strategy(cls, label, **kwargs):
        kwargs.setdefault('clearance', config.STRATEGY_CLEARANCE.get(label, 0.0))
        return cls(
            strategy=label, weights=costs.CostWeights.for_strategy(label),
            **kwargs
        )


@dataclasses.dataclass
class EpisodeResult:
    record: TrialRecord
    trajectory_rows: list
    collisions: list
    cycles: list
    events: list


##############################################################
# Physics
##############################################################

def _first_entry(p, v, tau, obstacles):
    """Earliest crossing of the path p -> p + v*tau into any obstacle.

    Returns
    -------
    hit : (float, Vec2, int, Segment) or None
        Fraction of tau, contact point, obstacle index and edge crossed.
    """
    best = None
    travel = v * tau
    path = Segment(p, p + travel)
    for j, obstacle in enumerate(obstacles):
        for edge in obstacle.edges():
            e = edge.b - edge.a
            outward = Vec2(e.y, -e.x)
            if outward.dot(travel) >= 0:
                continue
            q = geometry.segment_intersection(path, edge)
            if q is None:
                continue
            frac = q.distance_to(p) / travel.norm()
            if best is None or frac < best[0]:
                best = (frac, q, j, edge)
    return best


def step(
    world, state, cmd, dt, noise, rng=None, t=0.0, intentional=False,
    params=None
):
    """Advance the robot by one time step.

    The commanded velocity plus actuation noise is clipped to v_max and
    integrated with continuous collision detection. On contact the robot
    stops just outside the obstacle, its velocity is reflected off the edge,
    and it keeps moving for the remaining time.

    Parameters
    ----------
    world : World
        The world.
    state : RobotState
        The current state.
    cmd : Vec2
        The commanded velocity.
    dt : float
        The time step.
    noise : NoiseParams
        The noise model.
    rng : numpy.random.Generator, optional
        Noise source. Required when noise.actuation_sigma > 0.
    t : float, optional
        Time stamp for collision events.
    intentional : bool, optional
        Label for any collision event produced.
    params : CostParams, optional
        Restitution coefficients.

    Returns
    -------
    state : RobotState
        The new state.
    event : CollisionEvent or None
        The first contact of this step, if any. Its v_after is the velocity
        at the end of the step.
    """
    if not dt > 0:
        raise ValueError('dt must be positive, got %s!' % dt)
    if params is None:
        params = costs.CostParams()
    p = state.position
    if world.in_collision(p):
        raise SimulationError('Robot at %s is in collision!' % (p,))

    v = Vec2(*cmd)
    if noise.actuation_sigma > 0:
        if rng is None:
            raise SimulationError('Actuation noise needs a random generator!')
        v = v + Vec2(*rng.normal(0.0, noise.actuation_sigma, 2))
    v = controller.saturate(v, noise.v_max)

    event = None
    remaining = dt
    for _ in range(config.MAX_BOUNCES_PER_STEP):
        if remaining <= 0 or v.norm() <= geometry.TOLERANCE:
            break
        hit = _first_entry(p, v, remaining, world.collision_obstacles)
        if hit is None:
            p = p + v * remaining
            remaining = 0.0
            break
        frac, q, j, edge = hit
        tangent = edge.direction()
        normal = Vec2(tangent.y, -tangent.x)
        v_after = costs.reflect_velocity(v, tangent, params)
        if event is None:
            event = CollisionEvent(
                t, q, j, v, v_after, intentional
            )
        p = q + normal * config.CONTACT_SKIN
        remaining -= frac * remaining
        v = v_after
    else:
        # Out of bounces: stop at the last contact.
        v = geometry.ZERO

    if event is not None:
        event = event._replace(v_after=v)
    return RobotState.from_motion(p, v), event


class ContactMonitor(object):
    def __init__(self, world, release_distance=config.CONTACT_RELEASE_DISTANCE):
        """Collapse per-step contacts into one event per engagement.

        An engagement with an obstacle starts at the first contact and ends
        once the robot is more than release_distance away from it. Sliding
        along a wall or chattering against it is a single engagement.
        """
        self.world = world
        self.release_distance = release_distance
        self.engaged = set()

    def update(self, position, event):
        """Register the outcome of one step.

        Returns
        -------
        event : CollisionEvent or None
            The event if it opens a new engagement, else None.
        """
        self.engaged = {
            j for j in self.engaged
            if self.world.collision_obstacles[j].distance_to_boundary(position)
            <= self.release_distance
        }
        if event is None or event.obstacle_id in self.engaged:
            return None
        self.engaged.add(event.obstacle_id)
        return event


##############################################################
# Sensing
##############################################################

def sense(world, state, window_size, n_beams=None):
    """Obstacles the robot perceives in its window.

    Exact mode (n_beams None) returns every collision obstacle meeting the
    window. Beam mode keeps only obstacles hit by at least one of n_beams
    evenly spaced rays.
    """
    window = geometry.square_window(state.position, window_size)
    present = [
        o for o in world.collision_obstacles
        if o.shape.intersects(window.shape)
    ]
    if n_beams is None:
        return localmap.SensedScene(window, tuple(present))
    if n_beams < 1:
        raise ValueError('n_beams must be at least 1, got %s!' % n_beams)
    table = geometry.EdgeTable(present, window)
    angles = 2 * math.pi * np.arange(n_beams) / n_beams
    directions = np.column_stack([np.cos(angles), np.sin(angles)])
    _, idx = table.cast(state.position, directions)
    seen = sorted({int(table.owners[i]) for i in idx if table.owners[i] >= 0})
    return localmap.SensedScene(window, tuple(present[j] for j in seen))


def goal_sensor(world, state, noise=None, rng=None):
    """Bearing (world frame) and range of the goal, plus optional noise.
    """
    offset = Vec2(*world.goal) - state.position
    rng_value = offset.norm()
    bearing = math.atan2(offset.y, offset.x) if rng_value > 0 else 0.0
    if noise is not None and rng is not None:
        if noise.goal_bearing_sigma > 0:
            bearing += rng.normal(0.0, noise.goal_bearing_sigma)
        if noise.goal_range_sigma > 0:
            rng_value = max(0.0, rng_value + rng.normal(0.0, noise.goal_range_sigma))
    return bearing, rng_value


def goal_from_sensor(state, bearing, rng_value):
    return state.position + Vec2.from_angle(bearing, rng_value)


##############################################################
# Closed Loop
##############################################################

def _pursuit_target(local_map, position, goal):
    """Farthest point toward the goal reachable in a straight line inside
    free space.
    """
    path = Segment(position, Vec2(*goal))
    if path.length() <= geometry.TOLERANCE:
        return Vec2(*goal)
    for q in geometry.segment_polygon_intersection(path, local_map.free_space):
        if q.distance_to(position) > geometry.TOLERANCE:
            return q
    return Vec2(*goal)


def _clear_of(cands, obstacles, margin):
    """Candidates at least margin away from every obstacle.
    """
    clear = {}
    kept = []
    for cand in cands:
        if cand.pos not in clear:
            clear[cand.pos] = trajectory.clearance([cand.pos], obstacles) >= margin
        if clear[cand.pos]:
            kept.append(cand)
    return kept


class Planner(object):
    def __init__(self, planner_config, t_map):
        """One planning cycle: sense, map, select and spline.
        """
        self.config = planner_config
        self.t_map = t_map

    def reference(self, state, target):
        cfg = self.config
        wp = trajectory.make_control_points(state, target)
        return trajectory.build_trajectory(
            wp, cfg.sampling_params.v_max, cfg.p_safe, self.t_map, cfg.n_samples
        )

    def choose_reference(self, state, cands, order, local_map):
        """Best ranked candidate whose reference keeps the clearance margin.

        A robot already closer than the margin only has to avoid getting
        closer still. When none of the first clearance_attempts candidates
        qualifies, the roomiest reference among them is used.

        Returns
        -------
        index : int
            The chosen candidate.
        q_spl : TimedTrajectory
            Its reference.
        """
        cfg = self.config
        if cfg.clearance <= 0:
            return order[0], self.reference(state, cands[order[0]])
        required = min(
            cfg.clearance,
            trajectory.clearance([state.position], local_map.obstacles)
        )
        roomiest = None
        for i in order[:cfg.clearance_attempts]:
            q_spl = self.reference(state, cands[i])
            margin = trajectory.clearance(q_spl.positions, local_map.obstacles)
            if margin >= required - geometry.TOLERANCE:
                return i, q_spl
            if roomiest is None or margin > roomiest[0]:
                roomiest = (margin, i, q_spl)
        logger.debug(
            'No reference keeps %.3f m of clearance; best keeps %.3f m',
            required, roomiest[0]
        )
        return roomiest[1], roomiest[2]

    def plan(self, world, state, goal, ctx, t):
        """Run a planning cycle.

        Returns
        -------
        q_spl : TimedTrajectory
            The new reference.
        local_map : LocalMap
            The map it was planned on.
        intentional : bool
            Whether the selected state aims to harness a predicted contact.
        log : CycleLog
            Counts and timings.
        """
        cfg = self.config
        scene = sense(world, state, cfg.window_size, cfg.n_beams)
        local_map = localmap.build_local_map(
            state.position, cfg.window_size, scene.obstacles
        )
        intentional = False
        counts = (0, 0, 0)
        pruned_ms = unpruned_ms = math.nan
        total = math.nan

        if localmap.goal_in_free_space(local_map, goal):
            q_spl = self.reference(
                state, sampling.CandidateState(Vec2(*goal), 0.0, 0.0, -1)
            )
        else:
            objective = costs.Objective(ctx, cfg.weights, cfg.cost_params)
            start = time.perf_counter()
            cands, report = sampling.plan_candidates(
                local_map, goal, cfg.sampling_params, prune=cfg.prune,
                objective=objective
            )
            counts = tuple(report)
            if cands and cfg.clearance > 0:
                cands = _clear_of(cands, local_map.obstacles, cfg.clearance) or cands
            if not cands:
                q_spl = self.reference(state, sampling.CandidateState(
                    _pursuit_target(local_map, state.position, goal),
                    0.0, 0.0, -1
                ))
            else:
                order, breakdowns = costs.rank_candidates(
                    cands, ctx, local_map, local_map.predicted_boundaries,
                    cfg.weights, cfg.cost_params
                )
                pruned_ms = 1000.0 * (time.perf_counter() - start)
                index, q_spl = self.choose_reference(
                    state, cands, order, local_map
                )
                breakdown = breakdowns[index]
                total = breakdown.total
                intentional = (
                    cfg.weights.w_v > 0 and cands[index].vel_mag > 0 and
                    breakdown.collision_point is not None
                )
                if cfg.measure_unpruned and cfg.prune:
                    unpruned_ms = measure_unpruned(scene, state, ctx, cfg)

        log = CycleLog(
            t, counts[0], counts[1], counts[2], pruned_ms, unpruned_ms,
            controller.FREE_SPACE, total
        )
        return q_spl, local_map, intentional, log


def measure_unpruned(scene, state, ctx, cfg):
    """Milliseconds to sample and score the full, unpruned candidate set.

    The map is built afresh, outside the timed span.
    """
    local_map = localmap.build_local_map(
        state.position, cfg.window_size, scene.obstacles
    )
    start = time.perf_counter()
    cands = sampling.sample_candidates(local_map, cfg.sampling_params)
    try:
        costs.rank_candidates(
            cands, ctx, local_map, local_map.predicted_boundaries,
            cfg.weights, cfg.cost_params
        )
    except costs.PlannerError:
        pass
    return 1000.0 * (time.perf_counter() - start)


def run_episode(
    world, planner_config, t_map, timeout=config.TIMEOUT, seed=None,
    trial_id=0
):
    """Run one closed-loop episode from the world's start to its goal.

    Planning runs every t_map seconds, control every control_period and
    physics every dt, all counted in whole physics steps.

    Parameters
    ----------
    world : World
        The world.
    planner_config : PlannerConfig
        Planner, controller and noise settings.
    t_map : float
        Map update period in seconds.
    timeout : float, optional
        Give up after this long.
    seed : int, optional
        Noise seed. Default is the world's seed.
    trial_id : int, optional
        Identifier written into the record.

    Returns
    -------
    result : EpisodeResult
        The trial record plus trajectory, collisions, cycle logs and
        maneuver events.
    """
    cfg = planner_config
    if not t_map > 0:
        raise ValueError('t_map must be positive, got %s!' % t_map)
    if seed is None:
        seed = world.rng_seed
    rng = np.random.default_rng(seed)

    state = RobotState(float(world.start[0]), float(world.start[1]))
    if world.in_collision(state.position):
        raise SimulationError(
            'Start %s of world %s is in collision!' % (world.start, world.name)
        )
    plan_every = max(1, int(round(t_map / cfg.dt)))
    control_every = max(1, int(round(cfg.control_period / cfg.dt)))
    max_steps = int(math.ceil(timeout / cfg.dt - 1e-9))

    tracker = controller.Controller(
        cfg.gains, delta=0.5 * world.robot_radius,
        v_max=cfg.sampling_params.v_max
    )
    planner = Planner(cfg, t_map)
    p_ini = state.position
    p_pre = state.position
    path_length = 0.0
    rows = [(0.0, state.x, state.y)]
    collisions = []
    contacts = ContactMonitor(world)
    cycles = []
    intentional = False
    cmd = geometry.ZERO
    success = False
    arrival_time = timeout

    for k in range(max_steps + 1):
        t = k * cfg.dt
        if state.position.distance_to(world.goal) <= cfg.goal_tolerance:
            success = True
            arrival_time = t
            break
        if k == max_steps:
            break

        if k % plan_every == 0:
            bearing, rng_value = goal_sensor(world, state, cfg.noise, rng)
            goal = goal_from_sensor(state, bearing, rng_value)
            ctx = costs.PlannerContext(
                state.position, goal, p_pre, p_ini, path_length
            )
            try:
                q_spl, local_map, intentional, log = planner.plan(
                    world, state, goal, ctx, t
                )
            except (localmap.MapError, costs.PlannerError) as e:
                logger.warning('t=%.2f: keeping previous plan: %s', t, e)
            else:
                maneuver = tracker.set_plan(q_spl, local_map, t)
                cycles.append(log._replace(mode=maneuver.mode))
            p_pre = state.position

        if k % control_every == 0:
            cmd = tracker.command(state, t, cfg.control_period)

        previous = state.position
        state, event = step(
            world, state, cmd, cfg.dt, cfg.noise, rng=rng, t=t,
            intentional=intentional, params=cfg.cost_params
        )
        path_length += previous.distance_to(state.position)
        rows.append(((k + 1) * cfg.dt, state.x, state.y))
        event = contacts.update(state.position, event)
        if event is not None:
            logger.info(
                't=%.2f: collision with obstacle %d at (%.3f, %.3f)%s',
                t, event.obstacle_id, event.point.x, event.point.y,
                ' (intentional)' if event.intentional else ''
            )
            collisions.append(event)

    record = TrialRecord(
        trial_id=trial_id,
        strategy=cfg.strategy,
        t_map=t_map,
        arrival_time=arrival_time,
        path_length=path_length,
        n_collisions=len(collisions),
        n_intentional=sum(1 for c in collisions if c.intentional),
        success=success,
        seed=seed,
    )
    logger.info(
        'Trial %d (%s, t_map=%s, seed=%d): %s at %.2f s, path %.3f m, '
        '%d collisions',
        trial_id, cfg.strategy, t_map, seed,
        'arrived' if success else 'timed out', arrival_time, path_length,
        len(collisions)
    )
    return EpisodeResult(
        record, rows, collisions, cycles, list(tracker.events)
    )
