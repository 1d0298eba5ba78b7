#!/usr/bin/env python

# testutils MUST be imported first to set up test configuration and module
# paths properly!
import testutils

import json
import math
import unittest

import geometry
import localmap
from geometry import Vec2


def build_square_map(**kwargs):
    origin, obstacles, window = testutils.square_scene()
    return localmap.build_local_map(origin, 2.0, obstacles, **kwargs)


def build_corridor_map(width):
    """Robot at the origin between two long walls `width` apart.
    """
    h = 0.5 * width
    walls = [
        geometry.rectangle(-0.8, h, 0.8, h + 0.1),
        geometry.rectangle(-0.8, -h - 0.1, 0.8, -h),
    ]
    return localmap.build_local_map(Vec2(0.0, 0.0), 2.0, walls)


class Test_build_local_map(unittest.TestCase):
    def test_empty_window(self):
        local_map = localmap.build_local_map(Vec2(0.0, 0.0), 2.0, [])
        self.assertEqual(len(local_map.frontiers), 0)
        self.assertEqual(len(local_map.observed_boundaries), 0)
        self.assertEqual(len(local_map.predicted_boundaries), 0)
        self.assertAlmostEqual(
            local_map.free_space.area, local_map.window.area, places=9
        )

    def test_window_arc_frontiers(self):
        local_map = localmap.build_local_map(Vec2(0.0, 0.0), 2.0, [])
        arcs = local_map.window_arc_frontiers
        self.assertEqual(len(arcs), 4)
        for arc in arcs:
            self.assertAlmostEqual(arc.length, 2.0, places=9)
            self.assertEqual((arc.start_kind, arc.end_kind), ('window', 'window'))
        self.assertEqual(local_map.sampling_frontiers(False), ())
        self.assertEqual(local_map.sampling_frontiers(True), arcs)

    def test_window_arcs_meet_frontiers(self):
        local_map = build_square_map()
        arcs = local_map.window_arc_frontiers
        self.assertGreater(len(arcs), 0)
        kinds = {arc.start_kind for arc in arcs} | {arc.end_kind for arc in arcs}
        self.assertIn('frontier', kinds)
        self.assertAlmostEqual(
            sum(arc.length for arc in arcs),
            sum(geometry.polyline_length(p) for p in local_map.window_arcs),
            places=9
        )

    def test_single_obstacle_shadow(self):
        local_map = build_square_map()
        self.assertEqual(len(local_map.frontiers), 2)
        self.assertEqual(len(local_map.observed_boundaries), 1)
        for point in local_map.observed_boundaries[0].polyline:
            self.assertAlmostEqual(point.x, 0.3, places=7)
        for frontier in local_map.frontiers:
            self.assertGreater(frontier.length, 0.0)
            self.assertEqual(
                {frontier.start_kind, frontier.end_kind},
                {'obstacle', 'window'}
            )

    def test_ignores_obstacles_outside_window(self):
        far = geometry.rectangle(5.0, 5.0, 6.0, 6.0)
        local_map = localmap.build_local_map(Vec2(0.0, 0.0), 2.0, [far])
        self.assertEqual(local_map.obstacles, ())
        self.assertEqual(len(local_map.frontiers), 0)

    def test_robot_inside_obstacle(self):
        block = geometry.rectangle(-0.5, -0.5, 0.5, 0.5)
        with self.assertRaises(localmap.MapError):
            localmap.build_local_map(Vec2(0.0, 0.0), 2.0, [block])

    def test_bad_window_size(self):
        with self.assertRaises(localmap.MapError):
            localmap.build_local_map(Vec2(0.0, 0.0), 0.0, [])

    def test_boundary_partition(self):
        rng = testutils.seeded_rng(10)
        for _ in range(15):
            origin, obstacles, window = testutils.random_convex_scene(rng)
            local_map = localmap.build_local_map(origin, 2.0, obstacles)

            pieces = sum(f.length for f in local_map.frontiers)
            pieces += sum(
                geometry.polyline_length(b.polyline)
                for b in local_map.observed_boundaries
            )
            pieces += sum(
                geometry.polyline_length(arc) for arc in local_map.window_arcs
            )
            self.assertAlmostEqual(
                pieces, local_map.free_space.shape.length, places=7
            )

            for boundary in local_map.observed_boundaries:
                obstacle = local_map.obstacles[boundary.obstacle_id]
                for point in boundary.polyline:
                    self.assertLess(obstacle.distance_to_boundary(point), 1e-7)

            for frontier in local_map.frontiers:
                for a, b in zip(frontier.polyline, frontier.polyline[1:]):
                    # Occlusion edges run along a sight line from the robot.
                    self.assertLess(abs((a - origin).cross(b - origin)), 1e-5)
                    m = geometry.Segment(a, b).midpoint()
                    for obstacle in local_map.obstacles:
                        self.assertGreater(
                            obstacle.distance_to_boundary(m),
                            localmap.CLASSIFY_TOLERANCE
                        )


class Test_extract_predicted_boundaries(unittest.TestCase):
    def test_fully_visible_obstacle(self):
        # A wall spanning the whole window casts no shadow inside it.
        wall = geometry.rectangle(0.5, -1.5, 0.7, 1.5)
        local_map = localmap.build_local_map(Vec2(0.0, 0.0), 2.0, [wall])
        self.assertEqual(len(local_map.frontiers), 0)
        self.assertEqual(local_map.predicted_boundaries, ())

    def test_square_seen_from_left(self):
        local_map = build_square_map()
        predicted = local_map.predicted_boundaries
        self.assertEqual(len(predicted), 2)
        anchors = sorted((round(e.anchor.x, 6), round(e.anchor.y, 6))
                         for e in predicted)
        self.assertEqual(anchors, [(0.3, -0.2), (0.3, 0.2)])
        for e in predicted:
            testutils.assert_vec_almost_equal(self, e.tangent, (1.0, 0.0))
            self.assertEqual(e.obstacle_id, 0)

    def test_tangents_differ_from_frontiers(self):
        local_map = build_square_map()
        for e in local_map.predicted_boundaries:
            self.assertAlmostEqual(e.tangent.norm(), 1.0, places=9)
            frontier = local_map.frontiers[e.frontier_id]
            ends = (frontier.polyline[0], frontier.polyline[-1])
            self.assertTrue(any(
                end.distance_to(e.anchor) <= localmap.JUNCTION_TOLERANCE
                for end in ends
            ))
            a, b = ends
            self.assertGreater(testutils.angle_between(e.tangent, b - a), 1e-3)
            self.assertGreater(
                testutils.angle_between(e.tangent, a - b), 1e-3
            )

    def test_two_obstacles(self):
        origin, obstacles, _ = testutils.two_obstacle_scene()
        local_map = localmap.build_local_map(origin, 2.0, obstacles)
        ids = sorted(e.obstacle_id for e in local_map.predicted_boundaries)
        self.assertEqual(ids, [0, 0, 1, 1])


class Test_narrow_region_angle(unittest.TestCase):
    def test_open_space(self):
        local_map = localmap.build_local_map(Vec2(0.0, 0.0), 2.0, [])
        theta = localmap.narrow_region_angle(Vec2(0.5, 0.5), local_map)
        self.assertEqual(theta, 2 * math.pi)

    def test_corridor_width(self):
        thetas = [
            localmap.narrow_region_angle(
                Vec2(0.5, 0.0), build_corridor_map(width)
            )
            for width in [0.2, 0.4, 0.8]
        ]
        self.assertLess(thetas[0], thetas[1])
        self.assertLess(thetas[1], thetas[2])
        for theta in thetas:
            self.assertGreater(theta, 0.0)
            self.assertLessEqual(theta, 2 * math.pi)

    def test_at_wall_corner(self):
        # The upper wall's corner blocks a quarter turn and the lower wall
        # blocks down to straight below, leaving a half-turn opening.
        local_map = build_corridor_map(0.4)
        theta = localmap.narrow_region_angle(Vec2(0.8, 0.2), local_map)
        self.assertAlmostEqual(theta, math.pi, places=9)

    def test_on_wall_face(self):
        local_map = build_corridor_map(0.4)
        theta = localmap.narrow_region_angle(Vec2(0.0, 0.2), local_map)
        self.assertLess(theta, math.pi)

    def test_gap_narrower_than_opening(self):
        origin, obstacles, _ = testutils.two_obstacle_scene()
        local_map = localmap.build_local_map(origin, 2.0, obstacles)
        in_gap = localmap.narrow_region_angle(Vec2(0.5, 0.0), local_map)
        in_opening = localmap.narrow_region_angle(Vec2(0.6, 0.75), local_map)
        self.assertLess(in_gap, in_opening)

    def test_cached(self):
        local_map = build_square_map()
        first = localmap.narrow_region_angle(Vec2(0.8, 0.5), local_map)
        self.assertIn((0.8, 0.5), local_map.sight_cache)
        self.assertEqual(
            localmap.narrow_region_angle(Vec2(0.8, 0.5), local_map), first
        )


class Test_heading_enters_free_space(unittest.TestCase):
    def test_square_shadow(self):
        local_map = build_square_map()
        # A point on the left face of the square, seen from the robot.
        pos = Vec2(0.3, 0.0)
        self.assertTrue(localmap.heading_enters_free_space(local_map, pos, math.pi))
        self.assertFalse(localmap.heading_enters_free_space(local_map, pos, 0.0))
        self.assertFalse(
            localmap.heading_enters_free_space(local_map, pos, math.pi / 2)
        )
        self.assertIn((0.3, 0.0, math.pi), local_map.heading_cache)


class Test_goal_in_free_space(unittest.TestCase):
    def test_goal_at_robot(self):
        local_map = build_square_map()
        self.assertTrue(
            localmap.goal_in_free_space(local_map, Vec2(0.0, 0.0))
        )

    def test_goal_outside_window(self):
        local_map = build_square_map()
        self.assertFalse(
            localmap.goal_in_free_space(local_map, Vec2(3.0, 0.0))
        )

    def test_goal_behind_obstacle(self):
        local_map = build_square_map()
        self.assertFalse(
            localmap.goal_in_free_space(local_map, Vec2(0.8, 0.0))
        )


class Test_local_map_document(unittest.TestCase):
    def test_serializable(self):
        local_map = build_square_map()
        local_map_doc = localmap.local_map_document(local_map)
        text = json.dumps(local_map_doc)
        self.assertIn('predicted_boundaries', text)
        self.assertEqual(
            len(local_map_doc['edges']), len(local_map.free_space.edges())
        )
        kinds = {edge['kind'] for edge in local_map_doc['edges']}
        self.assertEqual(kinds, {'frontier', 'obstacle', 'window'})


if __name__ == '__main__':
    unittest.main()
