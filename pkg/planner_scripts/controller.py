import dataclasses
import logging
import math
from typing import NamedTuple, Optional

import numpy as np

import config
import geometry
from geometry import Vec2, Segment

logger = logging.getLogger(__name__)

FREE_SPACE = 'free_space'
BOUNDARY_FOLLOWING = 'boundary_following'
FLOW_THROUGH = 'flow_through'
MODES = (FREE_SPACE, BOUNDARY_FOLLOWING, FLOW_THROUGH)

# Intersections this close to the start of a spline are contacts the robot
# is already in, not predictions:
START_CONTACT_DISTANCE = 1e-6


@dataclasses.dataclass(frozen=True)
class PidGains:
    kp: float = config.KP
    ki: float = config.KI
    kd: float = config.KD

    def __post_init__(self):
        if not self.kp > 0:
            raise ValueError('kp must be positive, got %s!' % self.kp)
        if self.ki < 0 or self.kd < 0:
            raise ValueError(
                'ki and kd must be non-negative, got %s and %s!'
                % (self.ki, self.kd)
            )


@dataclasses.dataclass
class ManeuverState:
    mode: str = FREE_SPACE
    switch: str = 'off'
    p_c: Optional[Vec2] = None
    p_d: Optional[Vec2] = None
    reference: object = None


class ManeuverEvent(NamedTuple):
    t: float
    mode: str
    switch: str
    point: Optional[Vec2]


class CollisionPrediction(NamedTuple):
    point: Vec2
    boundary: tuple  # polyline the spline runs into
    sample_index: int  # the spline segment [i, i + 1] holding the point


##############################################################
# Maneuver Selection
##############################################################

def select_maneuver(wp, p_c):
    """Choose a maneuver from the control points and the predicted contact.

    No contact means free-space tracking. Otherwise the contact is compared
    against the left normal of the chord WP[0] -> WP[3]: on or left of it
    gives flow-through, right of it boundary following.
    """
    if p_c is None:
        return FREE_SPACE
    chord = Vec2(*wp[3]) - wp[0]
    if chord.norm() <= geometry.TOLERANCE:
        raise ValueError('Maneuver selection needs distinct end control points!')
    v = geometry.rotate(chord.normalized(), math.pi / 2)
    v_c = Vec2(*p_c) - wp[0]
    if v.dot(v_c) >= 0:
        return FLOW_THROUGH
    return BOUNDARY_FOLLOWING


def predict_collision(
    q_spl, local_map, boundary_length=config.PREDICTED_BOUNDARY_LENGTH
):
    """First place where the spline meets an observed boundary or a
    predicted boundary ray (cut at boundary_length).

    Returns
    -------
    prediction : CollisionPrediction or None
        The first contact along the spline.
    """
    boundaries = [b.polyline for b in local_map.observed_boundaries]
    boundaries.extend(
        (e.anchor, e.anchor + e.tangent * boundary_length)
        for e in local_map.predicted_boundaries
    )
    if not boundaries:
        return None
    start = q_spl.start
    positions = q_spl.positions
    for i in range(len(positions) - 1):
        seg = Segment(positions[i], positions[i + 1])
        if seg.length() <= geometry.TOLERANCE:
            continue
        best = None
        for polyline in boundaries:
            for k in range(len(polyline) - 1):
                q = geometry.segment_intersection(
                    seg, Segment(Vec2(*polyline[k]), Vec2(*polyline[k + 1]))
                )
                if q is None or q.distance_to(start) <= START_CONTACT_DISTANCE:
                    continue
                d = q.distance_to(seg.a)
                if best is None or d < best[0]:
                    best = (d, q, tuple(polyline))
        if best is not None:
            return CollisionPrediction(best[1], best[2], i)
    return None


##############################################################
# Reference Generation
##############################################################

def _side(boundary, p):
    """Signed side of p relative to the nearest boundary segment: positive
    on the left. Also returns the nearest point.
    """
    q, k = geometry.closest_point_on_polyline(p, boundary)
    a = Vec2(*boundary[k])
    b = Vec2(*boundary[k + 1]) if len(boundary) > 1 else a
    return (b - a).cross(Vec2(*p) - q), q


def boundary_following_reference(q_spl, boundary, p_c, sample_index=None):
    """Project the spline onto an obstacle boundary between the engaging and
    disengaging points.

    Samples after the engaging point that lie beyond the boundary (on the
    side away from the spline start) are replaced by their nearest points on
    the boundary, keeping their timestamps, until the first sample back on
    the start side.

    Parameters
    ----------
    q_spl : TimedTrajectory
        The spline reference.
    boundary : sequence of Vec2
        The boundary polyline.
    p_c : Vec2
        The engaging point.
    sample_index : int, optional
        Index of the spline segment holding p_c. Found by nearest sample when
        omitted.

    Returns
    -------
    q_bound : TimedTrajectory
        The boundary-following reference.
    p_d : Vec2
        The disengaging point: the last projected sample, or p_c when the
        spline only touches the boundary.
    """
    positions = q_spl.positions
    p_c = Vec2(*p_c)
    if sample_index is None:
        sample_index = int(np.argmin([p.distance_to(p_c) for p in positions]))
        sample_index = min(sample_index, len(positions) - 2)
    robot_side, _ = _side(boundary, q_spl.start)
    robot_sign = 1.0 if robot_side >= 0 else -1.0

    new_positions = list(positions)
    p_d = p_c
    for j in range(sample_index + 1, len(positions)):
        side, q = _side(boundary, positions[j])
        if side * robot_sign < -geometry.TOLERANCE:
            new_positions[j] = q
            p_d = q
        else:
            break
    return q_spl.with_positions(new_positions), p_d


def flow_through_reference(q_spl, wp):
    """Project every spline sample onto the chord line WP[0] -> WP[3].
    """
    origin = Vec2(*wp[0])
    chord = Vec2(*wp[3]) - origin
    return q_spl.with_positions([
        origin + geometry.project(p - origin, chord) for p in q_spl.positions
    ])


##############################################################
# Switching Automata
##############################################################

class BoundarySwitch(object):
    def __init__(self, p_c, p_d, delta):
        """Reference switch for boundary following: off -> on within delta of
        the engaging point, on -> off within delta of the disengaging point.
        Once switched off it stays off for the rest of the cycle.
        """
        self.p_c = Vec2(*p_c)
        self.p_d = Vec2(*p_d)
        self.delta = delta
        self.state = 'off'
        self.done = False

    def update(self, p):
        if self.state == 'off':
            if not self.done and self.p_c.distance_to(p) <= self.delta:
                self.state = 'on'
        elif self.p_d.distance_to(p) <= self.delta:
            self.state = 'off'
            self.done = True
        return self.state


class FlowThroughSwitch(object):
    def __init__(self, p_c, delta):
        """One-way reference switch for flow-through: off -> on within delta
        of the predicted contact.
        """
        self.p_c = Vec2(*p_c)
        self.delta = delta
        self.state = 'off'

    def update(self, p):
        if self.state == 'off' and self.p_c.distance_to(p) <= self.delta:
            self.state = 'on'
        return self.state


##############################################################
# Tracking
##############################################################

class PidState(object):
    def __init__(self):
        self.integral = np.zeros(2)
        self.prev_error = None

    def reset(self):
        self.integral = np.zeros(2)
        self.prev_error = None


def saturate(v, v_max):
    n = Vec2(*v).norm()
    if n <= v_max:
        return Vec2(*v)
    return Vec2(*v) * (v_max / n)


def track(
    reference, state, gains, dt, t=0.0, pid=None, v_max=config.V_MAX
):
    """Velocity command toward the reference point at time t.

    Feed-forward reference velocity plus PID on the position error, with the
    norm saturated to v_max. The first call after a reset has no derivative
    term.

    Parameters
    ----------
    reference : TimedTrajectory
        The active reference.
    state : RobotState
        The robot state.
    gains : PidGains
        The gains, shared by both axes.
    dt : float
        Time since the previous call.
    t : float, optional
        Time into the reference.
    pid : PidState, optional
        Integrator memory; a fresh one when omitted.
    v_max : float, optional
        Saturation speed.

    Returns
    -------
    cmd : Vec2
        The velocity command.
    """
    if not dt > 0:
        raise ValueError('dt must be positive, got %s!' % dt)
    if pid is None:
        pid = PidState()
    target = reference.position_at(t)
    error = np.array([target.x - state.x, target.y - state.y])
    pid.integral = pid.integral + error * dt
    if pid.prev_error is None:
        derivative = np.zeros(2)
    else:
        derivative = (error - pid.prev_error) / dt
    pid.prev_error = error
    feed_forward = reference.velocity_at(t)
    cmd = (
        np.asarray(feed_forward) + gains.kp * error + gains.ki * pid.integral +
        gains.kd * derivative
    )
    return saturate(Vec2(float(cmd[0]), float(cmd[1])), v_max)


class Controller(object):
    def __init__(
        self, gains=None, delta=0.5 * config.ROBOT_RADIUS,
        v_max=config.V_MAX, boundary_length=config.PREDICTED_BOUNDARY_LENGTH
    ):
        """Stateful tracker for one robot. Holds the active plan, the maneuver
        state and switch, and the PID memory.

        Parameters
        ----------
        gains : PidGains, optional
            The PID gains. Defaults from config.
        delta : float, optional
            Switching distance, half the robot radius by convention.
        v_max : float, optional
            Command saturation.
        boundary_length : float, optional
            Length of predicted boundary rays used for collision prediction.
        """
        self.gains = gains if gains is not None else PidGains()
        self.delta = delta
        self.v_max = v_max
        self.boundary_length = boundary_length
        self.pid = PidState()
        self.maneuver = ManeuverState()
        self.switch = None
        self.q_spl = None
        self.plan_start = 0.0
        self.events = []

    def set_plan(self, q_spl, local_map, t_now):
        """Adopt a new spline reference and choose its maneuver.

        Returns
        -------
        maneuver : ManeuverState
            The new maneuver state.
        """
        wp = q_spl.control_points
        prediction = None
        if Vec2(*wp[0]).distance_to(wp[3]) > geometry.TOLERANCE:
            prediction = predict_collision(
                q_spl, local_map, self.boundary_length
            )
        p_c = prediction.point if prediction is not None else None
        mode = select_maneuver(wp, p_c)

        reference = None
        p_d = None
        if mode == BOUNDARY_FOLLOWING:
            reference, p_d = boundary_following_reference(
                q_spl, prediction.boundary, p_c, prediction.sample_index
            )
            self.switch = BoundarySwitch(p_c, p_d, self.delta)
        elif mode == FLOW_THROUGH:
            reference = flow_through_reference(q_spl, wp)
            self.switch = FlowThroughSwitch(p_c, self.delta)
        else:
            self.switch = None

        if mode != self.maneuver.mode:
            logger.info('t=%.2f: maneuver %s -> %s', t_now, self.maneuver.mode, mode)
            self.events.append(ManeuverEvent(t_now, mode, 'off', p_c))
        self.maneuver = ManeuverState(mode, 'off', p_c, p_d, reference)
        self.q_spl = q_spl
        self.plan_start = t_now
        self.pid.reset()
        return self.maneuver

    def active_reference(self):
        if self.maneuver.switch == 'on' and self.maneuver.reference is not None:
            return self.maneuver.reference
        return self.q_spl

    def command(self, state, t_now, dt):
        """Velocity command at time t_now, dt after the previous command.
        """
        if self.q_spl is None:
            return geometry.ZERO
        if self.switch is not None:
            position = Vec2(state.x, state.y)
            new_switch = self.switch.update(position)
            if new_switch != self.maneuver.switch:
                logger.debug(
                    't=%.2f: %s switch %s -> %s', t_now, self.maneuver.mode,
                    self.maneuver.switch, new_switch
                )
                self.events.append(ManeuverEvent(
                    t_now, self.maneuver.mode, new_switch, position
                ))
                self.maneuver.switch = new_switch
        return track(
            self.active_reference(), state, self.gains, dt,
            t=t_now - self.plan_start, pid=self.pid, v_max=self.v_max
        )
