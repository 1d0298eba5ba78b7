import dataclasses
import logging
import math

import numpy as np
import scipy.interpolate
import shapely

import config
import geometry
from geometry import Vec2

logger = logging.getLogger(__name__)

# Clamped cubic knot vector for exactly four control points:
CLAMPED_KNOTS = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0])
# Spline evaluations per output sample when measuring arc length:
ARC_LENGTH_OVERSAMPLING = 20


@dataclasses.dataclass(frozen=True, eq=False)
class TimedTrajectory:
    """Time-stamped reference path.

    samples holds (t, position) pairs, strictly increasing in t from 0 to
    duration. Between samples the reference is linear.
    """
    control_points: tuple
    samples: tuple
    duration: float

    def __post_init__(self):
        times = np.array([t for t, _ in self.samples], dtype=float)
        if len(times) < 2 or np.any(np.diff(times) <= 0):
            raise ValueError('Trajectory samples must be strictly increasing in time!')
        object.__setattr__(self, '_times', times)
        object.__setattr__(self, '_xy', np.array(
            [p for _, p in self.samples], dtype=float
        ))

    @property
    def positions(self):
        return [p for _, p in self.samples]

    @property
    def start(self):
        return self.samples[0][1]

    @property
    def end(self):
        return self.samples[-1][1]

    def position_at(self, t):
        """Reference position at time t, held at the ends.
        """
        return Vec2(
            float(np.interp(t, self._times, self._xy[:, 0])),
            float(np.interp(t, self._times, self._xy[:, 1]))
        )

    def velocity_at(self, t):
        """Feed-forward velocity by finite differencing; zero outside
        [0, duration).
        """
        if t < 0 or t >= self.duration:
            return geometry.ZERO
        i = int(np.searchsorted(self._times, t, side='right')) - 1
        i = min(max(i, 0), len(self._times) - 2)
        dt = self._times[i + 1] - self._times[i]
        d = self._xy[i + 1] - self._xy[i]
        return Vec2(float(d[0] / dt), float(d[1] / dt))

    def with_positions(self, positions):
        """Same timestamps, new positions."""
        return TimedTrajectory(
            self.control_points,
            tuple(
                (t, Vec2(*p)) for (t, _), p in zip(self.samples, positions)
            ),
            self.duration
        )

    def to_rows(self):
        return [(t, p.x, p.y) for t, p in self.samples]


##############################################################
# Spline Construction
##############################################################

def make_control_points(q_cur, q_s):
    """Four control points joining the robot to a candidate state.

    Parameters
    ----------
    q_cur : RobotState
        The current state (x, y, theta, v).
    q_s : CandidateState
        The selected state.

    Returns
    -------
    wp : list of Vec2
        [p_cur, p_cur + k*v_cur, p_s - k*v_s, p_s] with k one third of the
        chord. A zero velocity is replaced by the chord direction. A zero
        chord gives four copies of p_cur.
    """
    p = Vec2(q_cur.x, q_cur.y)
    ps = Vec2(*q_s.pos)
    chord = ps - p
    length = chord.norm()
    if length <= geometry.TOLERANCE:
        return [p, p, p, p]
    kappa = length / 3
    chord_dir = chord / length
    if q_cur.v > geometry.TOLERANCE:
        start_dir = Vec2.from_angle(q_cur.theta)
    else:
        start_dir = chord_dir
    if q_s.vel_mag > geometry.TOLERANCE:
        end_dir = Vec2.from_angle(q_s.vel_dir)
    else:
        end_dir = chord_dir
    return [p, p + start_dir * kappa, ps - end_dir * kappa, ps]


def _spline(wp):
    return scipy.interpolate.BSpline(
        CLAMPED_KNOTS, np.asarray(wp, dtype=float), 3
    )


def interpolate_bspline(wp, n_samples):
    """Evaluate the clamped cubic B-spline of four control points at
    n_samples uniform parameters. The first and last samples are the end
    control points exactly.
    """
    if n_samples < 2:
        raise ValueError('Need at least 2 samples, got %d!' % n_samples)
    if len(wp) != 4:
        raise ValueError('Need exactly 4 control points, got %d!' % len(wp))
    xy = _spline(wp)(np.linspace(0.0, 1.0, n_samples))
    points = [Vec2(float(x), float(y)) for x, y in xy]
    points[0] = Vec2(*wp[0])
    points[-1] = Vec2(*wp[-1])
    return points


def spline_tangent(wp, u):
    """Unit tangent of the spline at parameter u in [0, 1].
    """
    d = _spline(wp).derivative()(float(u))
    return Vec2(float(d[0]), float(d[1])).normalized()


def control_polygon_length(wp):
    return geometry.polyline_length(wp)


def assign_duration(wp, v_max, p_safe, t_map):
    """T = max(p_safe * control polygon length / v_max, t_map).
    """
    if not v_max > 0:
        raise ValueError('v_max must be positive, got %s!' % v_max)
    if p_safe < 1:
        raise ValueError('p_safe must be at least 1, got %s!' % p_safe)
    t_v = p_safe * control_polygon_length(wp) / v_max
    return max(t_v, t_map)


def build_trajectory(
    wp, v_max=config.V_MAX, p_safe=config.P_SAFE, t_map=0.0,
    n_samples=config.N_SAMPLES
):
    """Timed reference along the spline at constant speed.

    Samples are spaced evenly in arc length, so the reference speed is the
    arc length over the duration. The arc length never exceeds the control
    polygon length, hence the speed stays below v_max / p_safe.

    Parameters
    ----------
    wp : list of 4 Vec2
        The control points.
    v_max : float, optional
        Top speed.
    p_safe : float, optional
        Speed safety factor, at least 1.
    t_map : float, optional
        Map update period; the duration is never shorter.
    n_samples : int, optional
        Number of samples.

    Returns
    -------
    trajectory : TimedTrajectory
        The timed trajectory.
    """
    if n_samples < 2:
        raise ValueError('Need at least 2 samples, got %d!' % n_samples)
    duration = assign_duration(wp, v_max, p_safe, t_map)
    if duration <= 0:
        raise ValueError('Trajectory duration must be positive!')
    times = np.linspace(0.0, duration, n_samples)

    dense_u = np.linspace(0.0, 1.0, ARC_LENGTH_OVERSAMPLING * n_samples)
    spline = _spline(wp)
    dense = spline(dense_u)
    steps = np.hypot(*np.diff(dense, axis=0).T)
    arc = np.concatenate([[0.0], np.cumsum(steps)])
    if arc[-1] <= geometry.TOLERANCE:
        positions = [Vec2(*wp[0])] * n_samples
    else:
        u = np.interp(np.linspace(0.0, arc[-1], n_samples), arc, dense_u)
        positions = [Vec2(float(x), float(y)) for x, y in spline(u)]
        positions[0] = Vec2(*wp[0])
        positions[-1] = Vec2(*wp[-1])

    return TimedTrajectory(
        tuple(Vec2(*p) for p in wp),
        tuple((float(t), p) for t, p in zip(times, positions)),
        float(duration)
    )


def clearance(points, obstacles):
    """Smallest distance from the points to the obstacles.

    Points inside an obstacle count as zero. Without obstacles the clearance
    is infinite.
    """
    if not obstacles or len(points) == 0:
        return math.inf
    xy = shapely.points(np.asarray(points, dtype=float).reshape(-1, 2))
    return float(min(
        shapely.distance(obstacle.shape, xy).min() for obstacle in obstacles
    ))
