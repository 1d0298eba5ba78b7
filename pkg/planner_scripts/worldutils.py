import json
import logging
import os

import config
import geometry
import simulator
import valutils
from geometry import Vec2

logger = logging.getLogger(__name__)

WORLDS_DIRECTORY = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'worlds')


class WorldFileError(ValueError):
    """Raised when a world file cannot be read or describes an invalid world.
    """


def resolve_world_path(path):
    """Return path if it exists, else the bundled world of that name.
    """
    if os.path.exists(path):
        return path
    bundled = os.path.join(WORLDS_DIRECTORY, os.path.basename(path))
    if os.path.exists(bundled):
        return bundled
    raise WorldFileError('World file "%s" does not exist!' % path)


def world_from_document(doc, name='world'):
    """Build a World from a parsed world document.

    Raises WorldFileError listing every validation failure.
    """
    is_ok, status_messages = valutils.validate_world_document(doc)
    if not is_ok:
        raise WorldFileError(
            'Invalid world "%s": %s' % (name, ' '.join(status_messages))
        )
    return simulator.World(
        bounds=geometry.Polygon(doc['bounds']),
        obstacles=tuple(geometry.Polygon(o) for o in doc['obstacles']),
        goal=Vec2(*map(float, doc['goal'])),
        start=Vec2(*map(float, doc['start'])),
        robot_radius=float(doc['robot_radius']),
        rng_seed=doc.get('rng_seed', 0),
        name=doc.get('name', name),
    )


def load_world(path):
    """Load a world file.

    Parameters
    ----------
    path : str
        The path. A bare name of a bundled world also works.

    Returns
    -------
    world : World
        The world.
    """
    path = resolve_world_path(path)
    name = os.path.splitext(os.path.basename(path))[0]
    try:
        with open(path, 'r') as f:
            doc = json.load(f)
    except (OSError, ValueError) as e:
        raise WorldFileError('Cannot read world file "%s": %s' % (path, e)) from e
    world = world_from_document(doc, name=name)
    logger.debug(
        'Loaded world %s from %s: %d obstacles', world.name, path,
        len(world.obstacles)
    )
    return world


def world_document(world):
    def points(vertices):
        return [[p[0], p[1]] for p in vertices]

    return {
        'name': world.name,
        'bounds': points(world.bounds.vertices),
        'obstacles': [points(o.vertices) for o in world.obstacles],
        'start': [world.start[0], world.start[1]],
        'goal': [world.goal[0], world.goal[1]],
        'robot_radius': world.robot_radius,
        'rng_seed': world.rng_seed,
    }


def save_world(world, path):
    with open(path, 'w') as f:
        json.dump(world_document(world), f, indent=4)
