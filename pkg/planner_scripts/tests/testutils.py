# NOTE: when making a test script, `import testutils` should be the very first
# line in your test script. This ensures that planner_scripts is on the path
# and the trial store points at a throwaway database before any other modules
# get imported.

# Add the planner_scripts directory to the path:
import os
import sys
sys.path.insert(
    0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..')
)

# Keep tests away from any configured trial store:
os.environ.pop('PLANNER_TRIALS_DATABASE_URL', None)

import math
import shutil
import tempfile
import unittest

import numpy as np
import shapely
import shapely.geometry

import db
import geometry
import simulator
from geometry import Vec2

ACCEPTANCE_VARIABLE = 'PLANNER_RUN_ACCEPTANCE'


def run_acceptance():
    """Whether the long acceptance reproductions were requested.
    """
    return os.getenv(ACCEPTANCE_VARIABLE) == '1'


def restore_env(key, value):
    """Restore the given environment variable to the given value. If the value
    is None, the environment variable will be deleted.

    Parameters
    ----------
    key : str
        The name of the environment variable.
    value : str or None
        The value to set. Pass None to delete the variable.
    """
    if value is None:
        os.environ.pop(key, None)
    else:
        os.environ[key] = value


##############################################################
# Scene Builders
##############################################################

def unit_window():
    return geometry.rectangle(0.0, 0.0, 1.0, 1.0)


def window_at_origin(size=2.0):
    return geometry.square_window(Vec2(0.0, 0.0), size)


def square_scene():
    """Robot at the origin of a 2 m window, one square obstacle to its right.

    The robot sees the left face x = 0.3 of the square [0.3, 0.6] x
    [-0.2, 0.2]; the rest of the square is in shadow.
    """
    obstacles = [geometry.rectangle(0.3, -0.2, 0.6, 0.2)]
    return Vec2(0.0, 0.0), obstacles, window_at_origin()


def two_obstacle_scene():
    """Robot at the origin with two squares ahead, separated by a gap.
    """
    obstacles = [
        geometry.rectangle(0.4, 0.1, 0.6, 0.5),
        geometry.rectangle(0.4, -0.5, 0.6, -0.1),
    ]
    return Vec2(0.0, 0.0), obstacles, window_at_origin()


def random_convex_obstacle(rng, center, radius, n_points=6):
    points = center + rng.uniform(-radius, radius, size=(n_points, 2))
    hull = shapely.geometry.MultiPoint([tuple(p) for p in points]).convex_hull
    if hull.geom_type != 'Polygon' or hull.area < 1e-3:
        return None
    return geometry.Polygon(list(hull.exterior.coords)[:-1])


def random_convex_scene(
    rng, n_obstacles=3, window_size=2.0, clearance=0.15, max_tries=200
):
    """Robot at the origin plus pairwise disjoint random convex obstacles.

    Parameters
    ----------
    rng : numpy.random.Generator
        The random source.
    n_obstacles : int, optional
        How many obstacles to try to place.
    window_size : float, optional
        Side of the window centered at the origin.
    clearance : float, optional
        Minimum gap between the robot, the obstacles and each other.
    max_tries : int, optional
        Placement attempts before giving up on further obstacles.

    Returns
    -------
    origin : Vec2
        The robot position.
    obstacles : list of Polygon
        The obstacles, all inside the window.
    window : Polygon
        The window.
    """
    half = 0.5 * window_size
    window = window_at_origin(window_size)
    origin_point = shapely.geometry.Point(0.0, 0.0)
    obstacles = []
    for _ in range(max_tries):
        if len(obstacles) >= n_obstacles:
            break
        center = rng.uniform(-0.7 * half, 0.7 * half, size=2)
        candidate = random_convex_obstacle(rng, center, 0.25 * half)
        if candidate is None:
            continue
        if not window.shape.contains(candidate.shape):
            continue
        if candidate.shape.distance(origin_point) < clearance:
            continue
        if any(
            candidate.shape.distance(o.shape) < clearance for o in obstacles
        ):
            continue
        obstacles.append(candidate)
    return Vec2(0.0, 0.0), obstacles, window


def monte_carlo_visible_area(origin, obstacles, window, rng, n_points):
    """Estimate the visible area by sampling the window uniformly and testing
    the sight line of every sample against every obstacle.
    """
    xmin, ymin, xmax, ymax = window.shape.bounds
    targets = np.column_stack([
        rng.uniform(xmin, xmax, n_points), rng.uniform(ymin, ymax, n_points)
    ])
    starts = np.broadcast_to(np.asarray(origin, dtype=float), targets.shape)
    lines = shapely.linestrings(np.stack([starts, targets], axis=1))
    blocked = np.zeros(n_points, dtype=bool)
    for obstacle in obstacles:
        blocked |= shapely.intersects(lines, obstacle.shape)
    visible = int(np.count_nonzero(~blocked))
    return (xmax - xmin) * (ymax - ymin) * visible / n_points


def open_world(start=(5.0, 5.0), goal=(5.8, 5.0), obstacles=()):
    """10 m x 10 m arena, by default with no obstacles.
    """
    return simulator.World(
        bounds=geometry.rectangle(0.0, 0.0, 10.0, 10.0),
        obstacles=tuple(obstacles),
        goal=Vec2(*goal),
        start=Vec2(*start),
        name='open',
    )


def assert_vec_almost_equal(test_case, actual, expected, places=7):
    test_case.assertAlmostEqual(actual[0], expected[0], places=places)
    test_case.assertAlmostEqual(actual[1], expected[1], places=places)


def angle_between(u, v):
    return abs(math.atan2(Vec2(*u).cross(v), Vec2(*u).dot(v)))


def seeded_rng(seed=0):
    return np.random.default_rng(seed)


##############################################################
# Fixtures
##############################################################

class EnvironmentOverrider(object):
    def __init__(self, keys=('PLANNER_TRIALS_DATABASE_URL',)):
        """Context manager to allow specific environment variables to be
        overridden and restored.

        Parameters
        ----------
        keys : sequence of str, optional
            The keys to save/restore.
        """
        self.keys = keys

    def __enter__(self):
        self.initial_values = {key: os.getenv(key) for key in self.keys}
        return self

    def __exit__(self, exc_type=None, exc_value=None, exc_tb=None):
        for key, value in self.initial_values.items():
            restore_env(key, value)


class TemporaryDirectoryManager(object):
    """Context manager which creates a scratch directory on entry and removes
    it on exit. The directory is available as `path`.
    """

    def __enter__(self):
        self.path = tempfile.mkdtemp(prefix='planner_test_')
        return self

    def __exit__(self, exc_type=None, exc_value=None, exc_tb=None):
        shutil.rmtree(self.path, ignore_errors=True)


class InMemoryDatabase(object):
    """Context manager holding a session on a fresh in-memory trial store.
    """

    def __enter__(self):
        self.session = db.get_session('sqlite://')
        return self

    def __exit__(self, exc_type=None, exc_value=None, exc_tb=None):
        self.session.close()


class MultiManagerTestCase(unittest.TestCase):
    def __init__(self, *args, **kwargs):
        """Test fixture which enters into multiple context managers before each
        test (and exits each after each tests).

        Parameters
        ----------
        managers : list of ContextManager, optional
            The context managers to use. The managers are entered in the order
            provided, and exited in reverse order.
        """
        self.managers = kwargs.pop('managers', ())
        super(MultiManagerTestCase, self).__init__(*args, **kwargs)

    def setUp(self):
        for manager in self.managers:
            manager.__enter__()

    def tearDown(self):
        for manager in self.managers[::-1]:
            manager.__exit__()


class TemporaryDirectoryTestCase(MultiManagerTestCase):
    def __init__(self, *args, **kwargs):
        """Test fixture with a scratch directory at `self.tmp.path` and the
        trial-store variable saved and restored.
        """
        self.tmp = TemporaryDirectoryManager()
        super(TemporaryDirectoryTestCase, self).__init__(
            *args, managers=[EnvironmentOverrider(), self.tmp], **kwargs
        )


class DatabaseTestCase(MultiManagerTestCase):
    def __init__(self, *args, **kwargs):
        """Test fixture with an empty in-memory trial store at
        `self.database.session`.
        """
        self.database = InMemoryDatabase()
        super(DatabaseTestCase, self).__init__(
            *args, managers=[self.database], **kwargs
        )
