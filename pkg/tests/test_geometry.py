import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypermap.cube import CameraMeta
from hypermap.classify import LabelMap
from hypermap.geometry import (
    image_footprint,
    pixel_area_m2,
    pixel_to_world,
    points_to_world,
    polygon_area_px,
    region_area_m2,
    signed_area,
)
from hypermap.segmentation import extract_regions


class TestFootprint:
    def test_h1_fov90_is_4_m2(self):
        fp = image_footprint(1.0, 90.0)
        assert fp.side_m == pytest.approx(2.0, abs=1e-12)
        assert fp.area_m2 == pytest.approx(4.0, abs=1e-12)

    def test_h10_fov35(self):
        # 2 * 10 * tan(17.5 deg) = 6.3060, squared = 39.765
        fp = image_footprint(10.0, 35.0)
        assert fp.area_m2 == pytest.approx(39.765, abs=0.01)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            image_footprint(0.0, 90.0)
        with pytest.raises(ValueError):
            image_footprint(1.0, 0.0)
        with pytest.raises(ValueError):
            image_footprint(1.0, 180.0)


class TestPixelToWorld:
    def test_center_maps_to_pose(self):
        cam = CameraMeta(3.0, 60.0, pose_x=4.5, pose_y=-2.0, pose_yaw=1.1)
        p = pixel_to_world((50.0, 50.0), (100, 100), cam)
        assert p.x == pytest.approx(4.5, abs=1e-12)
        assert p.y == pytest.approx(-2.0, abs=1e-12)

    def test_plus_col_is_plus_x(self):
        cam = CameraMeta(1.0, 90.0)
        p = pixel_to_world((100.0, 50.0), (100, 100), cam)
        assert p.x == pytest.approx(1.0, abs=1e-12)
        assert p.y == pytest.approx(0.0, abs=1e-12)

    def test_yaw_rotates(self):
        cam = CameraMeta(1.0, 90.0, pose_yaw=math.pi / 2)
        p = pixel_to_world((100.0, 50.0), (100, 100), cam)
        assert p.x == pytest.approx(0.0, abs=1e-12)
        assert p.y == pytest.approx(1.0, abs=1e-12)

    def test_plus_row_is_minus_y(self):
        cam = CameraMeta(1.0, 90.0)
        p = pixel_to_world((50.0, 100.0), (100, 100), cam)
        assert p.y == pytest.approx(-1.0, abs=1e-12)

    def test_rectangular_image_uses_per_axis_scale(self):
        # footprint side is 2 m on both axes; 200 cols vs 100 rows
        cam = CameraMeta(1.0, 90.0)
        right = pixel_to_world((200.0, 50.0), (200, 100), cam)
        assert right.x == pytest.approx(1.0, abs=1e-12)
        bottom = pixel_to_world((100.0, 100.0), (200, 100), cam)
        assert bottom.y == pytest.approx(-1.0, abs=1e-12)

    @given(
        yaw=st.floats(-math.pi, math.pi),
        ax=st.floats(0, 100),
        ay=st.floats(0, 100),
        bx=st.floats(0, 100),
        by=st.floats(0, 100),
    )
    @settings(max_examples=50, deadline=None)
    def test_isometry_plus_scale(self, yaw, ax, ay, bx, by):
        cam = CameraMeta(2.0, 70.0, pose_x=3.0, pose_y=-1.0, pose_yaw=yaw)
        dims = (100, 100)
        pts = points_to_world(np.array([[ax, ay], [bx, by]]), dims, cam)
        scale = image_footprint(2.0, 70.0).side_m / 100
        d_px = math.hypot(ax - bx, ay - by)
        d_w = math.hypot(pts[0, 0] - pts[1, 0], pts[0, 1] - pts[1, 1])
        assert d_w == pytest.approx(d_px * scale, rel=1e-9, abs=1e-9)


class TestAreas:
    def test_unit_square(self):
        assert polygon_area_px(np.array([(0, 0), (1, 0), (1, 1), (0, 1)])) == 1.0

    def test_triangle(self):
        assert polygon_area_px(np.array([(0, 0), (4, 0), (0, 3)])) == 6.0

    def test_too_few_vertices(self):
        with pytest.raises(ValueError):
            polygon_area_px(np.array([(0, 0), (1, 1)]))

    def test_100px_region_in_full_frame(self):
        cam = CameraMeta(10.0, 35.0)
        area = 100 * pixel_area_m2((1886, 1886), cam)
        assert area == pytest.approx(100 * 39.76533 / 1886**2, rel=1e-5)
        assert area == pytest.approx(1.118e-3, rel=1e-3)

    def test_region_area_matches_pixel_count(self):
        rng = np.random.default_rng(5)
        labels = rng.integers(0, 3, (24, 24)).astype(np.int32)
        rs = extract_regions(LabelMap(labels))
        cam = CameraMeta(2.0, 50.0)
        pa = pixel_area_m2((24, 24), cam)
        for region in rs.regions:
            assert region_area_m2(region, (24, 24), cam) == pytest.approx(
                region.pixel_count * pa, rel=1e-12
            )

    def test_additive_over_partition(self):
        rng = np.random.default_rng(8)
        labels = rng.integers(0, 4, (32, 32)).astype(np.int32)
        rs = extract_regions(LabelMap(labels))
        cam = CameraMeta(5.0, 40.0)
        total = sum(region_area_m2(r, (32, 32), cam) for r in rs.regions)
        assert total == pytest.approx(image_footprint(5.0, 40.0).area_m2, rel=1e-6)

    def test_outer_orientation_positive_holes_negative(self):
        labels = np.ones((5, 5), np.int32)
        labels[2, 2] = 2
        rs = extract_regions(LabelMap(labels))
        outer_region = rs.regions[0]
        assert signed_area(outer_region.outer) > 0
        assert all(signed_area(h) < 0 for h in outer_region.holes)
