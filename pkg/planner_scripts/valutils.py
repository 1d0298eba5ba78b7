import math

import shapely.geometry

import config

# This module contains functions to validate data. Any function starting with
# "validate_" shall return a bool (with True indicating that the condition is
# satisfied) and a list of str containing any error messages. The list shall be
# empty if the bool is True and shall have one or more entries if the bool is
# False. This interface does not define the input arguments, as these vary
# depending on what is to be validated.
#
# Functions which do NOT start with "validate_" are helper functions, and do
# not need to adhere to the interface defined above.

WORLD_KEYS = ['bounds', 'obstacles', 'start', 'goal', 'robot_radius']
SWEEP_KEYS = ['strategies', 't_map_grid', 'trials_per_cell']


def is_finite_number(x):
    """Check if a value is a finite int or float (bools excluded).
    """
    return (
        isinstance(x, (int, float)) and not isinstance(x, bool) and
        math.isfinite(x)
    )


def is_point(x):
    """Check if a value is an [x, y] pair of finite numbers.
    """
    return (
        isinstance(x, (list, tuple)) and len(x) == 2 and
        all(is_finite_number(c) for c in x)
    )


def is_convex(vertices):
    """Check if a simple polygon is convex, in either orientation.

    Parameters
    ----------
    vertices : list of [x, y]
        The vertices.

    Returns
    -------
    result : bool
        True if the polygon covers its own convex hull (collinear vertices
        allowed).
    """
    shape = shapely.geometry.Polygon(vertices)
    hull = shape.convex_hull
    return math.isclose(shape.area, hull.area, rel_tol=1e-9, abs_tol=1e-12)


def validate_polygon(vertices, label):
    """Check that a vertex list describes a simple polygon with area.

    Parameters
    ----------
    vertices : object
        The candidate vertex list.
    label : str
        Name used in messages, e.g. 'obstacle 2'.

    Returns
    -------
    is_ok : bool
        Whether or not the validation was passed.
    status_messages : list of str
        A list of status messages.
    """
    if not isinstance(vertices, list) or len(vertices) < 3:
        return False, ['%s must be a list of at least 3 vertices!' % label]
    if not all(is_point(v) for v in vertices):
        return False, ['%s has a vertex that is not an [x, y] pair!' % label]
    shape = shapely.geometry.Polygon(vertices)
    if shape.area <= 0:
        return False, ['%s has no area!' % label]
    if not shape.is_valid:
        return False, ['%s is not a simple polygon!' % label]
    return True, []


def validate_convex_polygon(vertices, label):
    is_ok, status_messages = validate_polygon(vertices, label)
    if is_ok and not is_convex(vertices):
        is_ok = False
        status_messages.append('%s is not convex!' % label)
    return is_ok, status_messages


def validate_world_document(doc):
    """Check a parsed world file.

    Checks structure, that obstacles are convex, pairwise disjoint and inside
    the bounds, and that start and goal are clear of every obstacle by the
    robot radius.

    Parameters
    ----------
    doc : dict
        The parsed document.

    Returns
    -------
    is_ok : bool
        Whether or not the validation was passed.
    status_messages : list of str
        A list of status messages.
    """
    if not isinstance(doc, dict):
        return False, ['World document must be an object!']
    status_messages = [
        'World is missing key "%s"!' % key for key in WORLD_KEYS
        if key not in doc
    ]
    if status_messages:
        return False, status_messages

    is_ok, messages = validate_convex_polygon(doc['bounds'], 'bounds')
    status_messages.extend(messages)
    if not isinstance(doc['obstacles'], list):
        status_messages.append('obstacles must be a list!')
        return False, status_messages
    for j, obstacle in enumerate(doc['obstacles']):
        ok, messages = validate_convex_polygon(obstacle, 'obstacle %d' % j)
        is_ok = is_ok and ok
        status_messages.extend(messages)
    for key in ['start', 'goal']:
        if not is_point(doc[key]):
            is_ok = False
            status_messages.append('%s must be an [x, y] pair!' % key)
    radius = doc['robot_radius']
    if not is_finite_number(radius) or radius <= 0:
        is_ok = False
        status_messages.append(
            'robot_radius must be a positive number, got %s!' % (radius,)
        )
    if 'rng_seed' in doc and not (
        isinstance(doc['rng_seed'], int) and not isinstance(doc['rng_seed'], bool)
    ):
        is_ok = False
        status_messages.append('rng_seed must be an integer!')
    if not is_ok:
        return False, status_messages

    bounds = shapely.geometry.Polygon(doc['bounds'])
    shapes = [shapely.geometry.Polygon(o) for o in doc['obstacles']]
    for j, shape in enumerate(shapes):
        if not bounds.contains(shape):
            status_messages.append('obstacle %d is not inside the bounds!' % j)
        for k in range(j + 1, len(shapes)):
            if shape.intersects(shapes[k]):
                status_messages.append(
                    'obstacles %d and %d overlap!' % (j, k)
                )
    for key in ['start', 'goal']:
        point = shapely.geometry.Point(doc[key])
        if bounds.exterior.distance(point) < radius or not bounds.contains(point):
            status_messages.append(
                '%s is not at least robot_radius inside the bounds!' % key
            )
        for j, shape in enumerate(shapes):
            if shape.distance(point) < radius:
                status_messages.append(
                    '%s is within robot_radius of obstacle %d!' % (key, j)
                )
    return len(status_messages) == 0, status_messages


def validate_strategy_label(label):
    if label in config.STRATEGIES:
        return True, []
    return False, [
        'Unknown strategy "%s"! Known strategies: %s'
        % (label, ', '.join(sorted(config.STRATEGIES)))
    ]


def validate_strategy_entry(entry):
    """Check one strategy of a sweep: a known label, or an object with a
    label and all three weights.
    """
    if isinstance(entry, str):
        return validate_strategy_label(entry)
    if not isinstance(entry, dict) or 'label' not in entry:
        return False, ['Strategy must be a label or an object with a label!']
    status_messages = []
    for key in ['w_p', 'w_r', 'w_v']:
        value = entry.get(key)
        if not is_finite_number(value) or value < 0:
            status_messages.append(
                'Strategy "%s" needs a non-negative %s!' % (entry['label'], key)
            )
    if not status_messages and entry['w_p'] + entry['w_r'] + entry['w_v'] <= 0:
        status_messages.append(
            'Strategy "%s" has all weights zero!' % entry['label']
        )
    return len(status_messages) == 0, status_messages


def validate_sweep_document(doc):
    """Check a parsed sweep specification.

    Parameters
    ----------
    doc : dict
        The parsed document.

    Returns
    -------
    is_ok : bool
        Whether or not the validation was passed.
    status_messages : list of str
        A list of status messages.
    """
    if not isinstance(doc, dict):
        return False, ['Sweep document must be an object!']
    status_messages = [
        'Sweep is missing key "%s"!' % key for key in SWEEP_KEYS
        if key not in doc
    ]
    if status_messages:
        return False, status_messages

    strategies = doc['strategies']
    if not isinstance(strategies, list) or len(strategies) == 0:
        status_messages.append('strategies must be a non-empty list!')
    else:
        for entry in strategies:
            status_messages.extend(validate_strategy_entry(entry)[1])
        labels = [e if isinstance(e, str) else e.get('label') for e in strategies]
        if len(set(labels)) != len(labels):
            status_messages.append('Strategy labels must be unique!')

    grid = doc['t_map_grid']
    if (
        not isinstance(grid, list) or len(grid) == 0 or
        not all(is_finite_number(t) and t > 0 for t in grid)
    ):
        status_messages.append('t_map_grid must be a list of positive times!')

    trials = doc['trials_per_cell']
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
        status_messages.append('trials_per_cell must be an integer >= 1!')

    seed = doc.get('base_seed', config.BASE_SEED)
    if not isinstance(seed, int) or isinstance(seed, bool):
        status_messages.append('base_seed must be an integer!')

    timeout = doc.get('timeout', config.TIMEOUT)
    if not is_finite_number(timeout) or timeout <= 0:
        status_messages.append('timeout must be a positive number!')

    if 'world' in doc and not isinstance(doc['world'], str):
        status_messages.append('world must be a file name!')

    if not isinstance(doc.get('measure_unpruned', False), bool):
        status_messages.append('measure_unpruned must be true or false!')

    return len(status_messages) == 0, status_messages
