#!/usr/bin/env python

# testutils MUST be imported first to set up test configuration and module
# paths properly!
import testutils

import math
import unittest

import numpy as np
import shapely
import shapely.geometry

import geometry
from geometry import Vec2, Segment, GeometryError


class Test_Vec2(unittest.TestCase):
    def test_arithmetic(self):
        v = Vec2(1.0, 2.0) + Vec2(3.0, -1.0)
        self.assertEqual(v, Vec2(4.0, 1.0))
        self.assertEqual(2 * v, Vec2(8.0, 2.0))
        self.assertEqual(v - (1.0, 1.0), Vec2(3.0, 0.0))
        self.assertEqual(-v, Vec2(-4.0, -1.0))

    def test_norm_and_normalized(self):
        v = Vec2(3.0, 4.0)
        self.assertEqual(v.norm(), 5.0)
        self.assertAlmostEqual(v.normalized().norm(), 1.0, places=12)

    def test_normalize_zero(self):
        with self.assertRaises(GeometryError):
            Vec2(0.0, 0.0).normalized()


class Test_rotate(unittest.TestCase):
    def test_quarter_turn(self):
        testutils.assert_vec_almost_equal(
            self, geometry.rotate(Vec2(1.0, 0.0), math.pi / 2), (0.0, 1.0)
        )

    def test_identity(self):
        self.assertEqual(geometry.rotate(Vec2(3.0, 4.0), 0.0), Vec2(3.0, 4.0))

    def test_half_turn(self):
        testutils.assert_vec_almost_equal(
            self, geometry.rotate(Vec2(1.0, 1.0), math.pi), (-1.0, -1.0)
        )

    def test_norm_preserved(self):
        rng = testutils.seeded_rng(1)
        for _ in range(200):
            v = Vec2(*rng.uniform(-10, 10, 2))
            angle = rng.uniform(-20, 20)
            self.assertLess(abs(geometry.rotate(v, angle).norm() - v.norm()), 1e-9)


class Test_project(unittest.TestCase):
    def test_axis(self):
        self.assertEqual(
            geometry.project(Vec2(1.0, 1.0), Vec2(1.0, 0.0)), Vec2(1.0, 0.0)
        )

    def test_orthogonal(self):
        self.assertEqual(
            geometry.project(Vec2(0.0, 1.0), Vec2(1.0, 0.0)), Vec2(0.0, 0.0)
        )

    def test_diagonal(self):
        testutils.assert_vec_almost_equal(
            self, geometry.project(Vec2(2.0, 1.0), Vec2(1.0, 1.0)), (1.5, 1.5)
        )

    def test_zero_onto(self):
        with self.assertRaises(GeometryError):
            geometry.project(Vec2(1.0, 1.0), Vec2(0.0, 0.0))

    def test_idempotent(self):
        rng = testutils.seeded_rng(2)
        for _ in range(100):
            v = Vec2(*rng.normal(size=2))
            u = Vec2(*rng.normal(size=2))
            once = geometry.project(v, u)
            twice = geometry.project(once, u)
            testutils.assert_vec_almost_equal(self, twice, once, places=9)


class Test_wrap_angle(unittest.TestCase):
    def test_range(self):
        for angle in [-7.0, -math.pi, 0.0, 1.0, 2 * math.pi, 13.0]:
            wrapped = geometry.wrap_angle(angle)
            self.assertGreaterEqual(wrapped, 0.0)
            self.assertLess(wrapped, 2 * math.pi)
            self.assertAlmostEqual(math.cos(wrapped), math.cos(angle))
            self.assertAlmostEqual(math.sin(wrapped), math.sin(angle))


class Test_turning_angle(unittest.TestCase):
    def test_straight(self):
        self.assertEqual(geometry.turning_angle((1, 0), (2, 0)), 0.0)

    def test_reversal(self):
        self.assertAlmostEqual(geometry.turning_angle((1, 0), (-1, 0)), math.pi)

    def test_zero_vector(self):
        self.assertEqual(geometry.turning_angle((0, 0), (1, 0)), 0.0)


class Test_ray_ray_intersection(unittest.TestCase):
    def test_crossing(self):
        s, t = geometry.ray_ray_intersection(
            Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(1.0, -1.0), Vec2(0.0, 1.0)
        )
        self.assertAlmostEqual(s, 1.0)
        self.assertAlmostEqual(t, 1.0)

    def test_parallel(self):
        self.assertIsNone(geometry.ray_ray_intersection(
            Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0), Vec2(1.0, 0.0)
        ))

    def test_behind(self):
        self.assertIsNone(geometry.ray_ray_intersection(
            Vec2(0.0, 0.0), Vec2(-1.0, 0.0), Vec2(1.0, -1.0), Vec2(0.0, 1.0)
        ))


class Test_point_ray_distance(unittest.TestCase):
    def test_beside(self):
        d = geometry.point_ray_distance(
            Vec2(1.0, 1.0), Vec2(0.0, 0.0), Vec2(1.0, 0.0)
        )
        self.assertAlmostEqual(d, 1.0)

    def test_behind_anchor(self):
        d = geometry.point_ray_distance(
            Vec2(-3.0, 4.0), Vec2(0.0, 0.0), Vec2(1.0, 0.0)
        )
        self.assertAlmostEqual(d, 5.0)


class Test_closest_point_on_polyline(unittest.TestCase):
    def test_corner(self):
        points = [Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(1.0, 1.0)]
        q, k = geometry.closest_point_on_polyline(Vec2(2.0, 0.5), points)
        testutils.assert_vec_almost_equal(self, q, (1.0, 0.5))
        self.assertEqual(k, 1)

    def test_single_point(self):
        q, k = geometry.closest_point_on_polyline(Vec2(2.0, 0.5), [(1.0, 1.0)])
        self.assertEqual(q, Vec2(1.0, 1.0))
        self.assertEqual(k, 0)


class Test_Polygon(unittest.TestCase):
    def test_clockwise_reversed(self):
        polygon = geometry.Polygon([(0, 0), (0, 1), (1, 1), (1, 0)])
        self.assertTrue(shapely.geometry.LinearRing(polygon.vertices).is_ccw)
        self.assertAlmostEqual(polygon.area, 1.0)

    def test_too_few_vertices(self):
        with self.assertRaises(GeometryError):
            geometry.Polygon([(0, 0), (1, 0)])

    def test_no_area(self):
        with self.assertRaises(GeometryError):
            geometry.Polygon([(0, 0), (1, 0), (2, 0)])

    def test_self_intersecting(self):
        with self.assertRaises(GeometryError):
            geometry.Polygon([(0, 0), (1, 1), (1, 0), (0, 1)])

    def test_contains_and_covers(self):
        square = geometry.rectangle(0, 0, 1, 1)
        self.assertTrue(square.contains((0.5, 0.5)))
        self.assertFalse(square.contains((1.0, 0.5)))
        self.assertTrue(square.covers((1.0, 0.5)))
        self.assertFalse(square.covers((1.1, 0.5)))


class Test_inflate(unittest.TestCase):
    def test_square(self):
        grown = geometry.inflate(geometry.rectangle(0, 0, 1, 1), 0.1)
        self.assertAlmostEqual(grown.area, 1.44, places=9)
        xmin, ymin, xmax, ymax = grown.shape.bounds
        self.assertAlmostEqual(xmin, -0.1)
        self.assertAlmostEqual(ymax, 1.1)

    def test_stays_convex(self):
        triangle = geometry.Polygon([(0, 0), (2, 0), (1, 1.5)])
        grown = geometry.inflate(triangle, 0.2)
        self.assertAlmostEqual(
            grown.shape.convex_hull.area, grown.area, places=9
        )
        self.assertTrue(grown.shape.contains(triangle.shape))

    def test_zero_radius(self):
        square = geometry.rectangle(0, 0, 1, 1)
        self.assertIs(geometry.inflate(square, 0.0), square)


class Test_wall_obstacles(unittest.TestCase):
    def test_walls_outside_bounds(self):
        bounds = geometry.rectangle(0, 0, 4, 3)
        walls = geometry.wall_obstacles(bounds, 0.1)
        self.assertEqual(len(walls), 4)
        for wall in walls:
            self.assertLess(wall.shape.intersection(bounds.shape).area, 1e-12)
            self.assertLess(wall.shape.distance(bounds.shape), 1e-12)

    def test_corners_closed(self):
        bounds = geometry.rectangle(0, 0, 4, 3)
        walls = geometry.wall_obstacles(bounds, 0.1)
        ring = shapely.union_all([w.shape for w in walls] + [bounds.shape])
        self.assertEqual(len(ring.interiors), 0)
        self.assertAlmostEqual(ring.area, 4.2 * 3.2, places=9)


class Test_ray_cast(unittest.TestCase):
    def test_empty_room(self):
        hit = geometry.ray_cast(
            Vec2(0.5, 0.5), Vec2(1.0, 0.0), [], testutils.unit_window()
        )
        testutils.assert_vec_almost_equal(self, hit.point, (1.0, 0.5))
        self.assertEqual(hit.kind, 'window_edge')
        self.assertEqual(hit.obstacle_id, -1)

    def test_frontal_hit(self):
        obstacle = geometry.Polygon([(1, -1), (2, -1), (2, 1), (1, 1)])
        hit = geometry.ray_cast(
            Vec2(0.0, 0.0), Vec2(1.0, 0.0), [obstacle],
            geometry.square_window(Vec2(0.0, 0.0), 6.0)
        )
        testutils.assert_vec_almost_equal(self, hit.point, (1.0, 0.0))
        self.assertEqual(hit.kind, 'obstacle_edge')
        self.assertEqual(hit.obstacle_id, 0)
        self.assertAlmostEqual(hit.distance, 1.0)

    def test_along_edge(self):
        obstacle = geometry.rectangle(1, 0, 2, 1)
        hit = geometry.ray_cast(
            Vec2(0.0, 0.0), Vec2(1.0, 0.0), [obstacle],
            geometry.square_window(Vec2(0.0, 0.0), 6.0)
        )
        testutils.assert_vec_almost_equal(self, hit.point, (1.0, 0.0))
        self.assertEqual(hit.kind, 'obstacle_edge')

    def test_inside_obstacle(self):
        obstacle = geometry.rectangle(-1, -1, 1, 1)
        with self.assertRaises(GeometryError):
            geometry.ray_cast(
                Vec2(0.0, 0.0), Vec2(1.0, 0.0), [obstacle],
                geometry.square_window(Vec2(0.0, 0.0), 6.0)
            )

    def test_outside_window(self):
        with self.assertRaises(GeometryError):
            geometry.ray_cast(
                Vec2(2.0, 2.0), Vec2(1.0, 0.0), [], testutils.unit_window()
            )

    def test_matches_shapely_oracle(self):
        rng = testutils.seeded_rng(3)
        for _ in range(5):
            origin, obstacles, window = testutils.random_convex_scene(rng)
            boundaries = [o.shape.exterior for o in obstacles]
            boundaries.append(window.shape.exterior)
            for angle in rng.uniform(0, 2 * math.pi, 40):
                d = Vec2.from_angle(angle)
                hit = geometry.ray_cast(origin, d, obstacles, window)
                ray = shapely.geometry.LineString([origin, origin + d * 10.0])
                nearest = math.inf
                for boundary in boundaries:
                    coords = shapely.get_coordinates(ray.intersection(boundary))
                    for x, y in coords:
                        nearest = min(nearest, math.hypot(x, y))
                self.assertAlmostEqual(hit.distance, nearest, delta=1e-6)


class Test_visibility_polygon(unittest.TestCase):
    def test_empty_window(self):
        window = testutils.window_at_origin()
        free = geometry.visibility_polygon(Vec2(0.0, 0.0), [], window)
        self.assertAlmostEqual(free.area, window.area, places=9)

    def test_occlusion_shrinks_area(self):
        origin, obstacles, window = testutils.square_scene()
        free = geometry.visibility_polygon(origin, obstacles, window)
        self.assertLess(free.area, window.area - obstacles[0].area)

    def test_contains_origin_and_avoids_obstacles(self):
        rng = testutils.seeded_rng(4)
        for _ in range(10):
            origin, obstacles, window = testutils.random_convex_scene(rng)
            free = geometry.visibility_polygon(origin, obstacles, window)
            self.assertTrue(free.contains(origin))
            self.assertLess(free.shape.difference(window.shape).area, 1e-9)
            for obstacle in obstacles:
                self.assertLess(
                    free.shape.intersection(obstacle.shape).area, 1e-9
                )

    def test_monte_carlo_area(self):
        rng = testutils.seeded_rng(5)
        for _ in range(5):
            origin, obstacles, window = testutils.random_convex_scene(rng)
            free = geometry.visibility_polygon(origin, obstacles, window)
            estimate = testutils.monte_carlo_visible_area(
                origin, obstacles, window, rng, 20000
            )
            self.assertLess(abs(free.area - estimate) / free.area, 0.03)


class Test_segment_polygon_intersection(unittest.TestCase):
    def test_outside(self):
        square = geometry.rectangle(0, 0, 1, 1)
        points = geometry.segment_polygon_intersection(
            Segment(Vec2(2.0, 0.0), Vec2(3.0, 1.0)), square
        )
        self.assertEqual(points, [])

    def test_through_opposite_edges(self):
        square = geometry.rectangle(0, 0, 1, 1)
        points = geometry.segment_polygon_intersection(
            Segment(Vec2(2.0, 0.5), Vec2(-1.0, 0.5)), square
        )
        self.assertEqual(len(points), 2)
        testutils.assert_vec_almost_equal(self, points[0], (1.0, 0.5))
        testutils.assert_vec_almost_equal(self, points[1], (0.0, 0.5))

    def test_overlapping_edge(self):
        square = geometry.rectangle(0, 0, 1, 1)
        points = geometry.segment_polygon_intersection(
            Segment(Vec2(0.5, 0.0), Vec2(2.0, 0.0)), square
        )
        testutils.assert_vec_almost_equal(self, points[0], (0.5, 0.0))
        testutils.assert_vec_almost_equal(self, points[-1], (1.0, 0.0))

    def test_matches_per_edge_oracle(self):
        rng = testutils.seeded_rng(6)
        polygon = testutils.random_convex_obstacle(
            rng, np.array([0.0, 0.0]), 1.0, n_points=8
        )
        for _ in range(100):
            a, b = (Vec2(*p) for p in rng.uniform(-2, 2, size=(2, 2)))
            points = geometry.segment_polygon_intersection(
                Segment(a, b), polygon
            )
            line = shapely.geometry.LineString([a, b])
            coords = shapely.get_coordinates(
                line.intersection(polygon.shape.exterior)
            )
            expected = sorted(
                (Vec2(*c) for c in coords), key=lambda q: q.distance_to(a)
            )
            self.assertEqual(len(points), len(expected))
            for p, q in zip(points, expected):
                testutils.assert_vec_almost_equal(self, p, q, places=9)


if __name__ == '__main__':
    unittest.main()
