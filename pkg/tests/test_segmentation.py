import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from hypermap.classify import ClassifyParams, LabelMap, classify
from hypermap.cube import CameraMeta
from hypermap.geometry import signed_area
from hypermap.scene import cornfields_spec, synthesize
from hypermap.segmentation import (
    STAGE_APPROX,
    STAGE_CONTOUR,
    STAGE_EDGE,
    STAGE_FILTER,
    approximate_polygon,
    approximate_polygon_traced,
    detect_edges,
    extract_regions,
    fill_region_areas,
    filter_regions,
    rasterize_regions,
    regions_to_geojson,
    segment,
)
from hypermap.specdb import SimilarityAlgorithm

CAM = CameraMeta(h_m=1.0, fov_deg=90.0)  # 5x5 frame: pixel area = 4/25 m^2


class TestDetectEdges:
    def test_uniform_5x5_border_ring(self):
        edges = detect_edges(LabelMap(np.ones((5, 5), np.int32)))
        assert int(edges.mask.sum()) == 16
        assert not edges.mask[1:4, 1:4].any()

    def test_uniform_3x3_center_is_interior(self):
        # The 3x3 center pixel has all 8 neighbors in-image with equal labels,
        # the same neighborhood as a 5x5 interior pixel, so it is not an edge.
        edges = detect_edges(LabelMap(np.ones((3, 3), np.int32)))
        assert int(edges.mask.sum()) == 8
        assert not edges.mask[1, 1]

    def test_two_label_split(self):
        labels = np.ones((5, 5), np.int32)
        labels[:, 2:] = 2
        edges = detect_edges(LabelMap(labels))
        non_edge = {(int(r), int(c)) for r, c in np.argwhere(~edges.mask)}
        assert non_edge == {(1, 3), (2, 3), (3, 3)}
        assert int(edges.mask.sum()) == 22


class TestExtractRegions:
    def test_uniform_map(self):
        rs = extract_regions(LabelMap(np.full((4, 6), 7, np.int32)))
        assert len(rs.regions) == 1
        r = rs.regions[0]
        assert r.outer.tolist() == [[0, 0], [6, 0], [6, 4], [0, 4]]
        assert r.holes == []
        assert r.pixel_count == 24
        assert r.parent is None

    def test_center_pixel_hole(self):
        labels = np.ones((5, 5), np.int32)
        labels[2, 2] = 2
        rs = extract_regions(LabelMap(labels))
        assert len(rs.regions) == 2
        a, b = rs.regions
        assert (a.label, a.pixel_count, a.parent, len(a.holes)) == (1, 24, None, 1)
        assert (b.label, b.pixel_count, b.parent, b.holes) == (2, 1, a.id, [])

    def test_checkerboard_diagonal_connectivity(self):
        labels = np.array([[1, 2], [2, 1]], np.int32)
        rs = extract_regions(LabelMap(labels))
        assert len(rs.regions) == 2
        assert {r.pixel_count for r in rs.regions} == {2}
        assert np.array_equal(rasterize_regions(rs).labels, labels)

    def test_siblings_in_one_hole_share_parent(self):
        labels = np.ones((7, 9), np.int32)
        labels[2:5, 2:7] = 2
        labels[2:5, 5:7] = 3  # two regions side by side inside A's hole
        rs = extract_regions(LabelMap(labels))
        by_label = {r.label: r for r in rs.regions}
        assert by_label[2].parent == by_label[1].id
        assert by_label[3].parent == by_label[1].id

    def test_deep_nesting_parents(self):
        labels = np.ones((11, 11), np.int32)
        labels[2:9, 2:9] = 2
        labels[4:7, 4:7] = 3
        labels[5, 5] = 4
        rs = extract_regions(LabelMap(labels))
        by_label = {r.label: r for r in rs.regions}
        assert by_label[2].parent == by_label[1].id
        assert by_label[3].parent == by_label[2].id
        assert by_label[4].parent == by_label[3].id

    def test_unknown_forms_regions(self):
        labels = np.zeros((4, 4), np.int32)
        labels[:2] = 5
        rs = extract_regions(LabelMap(labels))
        assert {r.label for r in rs.regions} == {0, 5}

    def test_ordering_by_top_left_pixel(self):
        labels = np.zeros((4, 8), np.int32)
        labels[:, 4:] = 1
        labels[2:, :4] = 2
        rs = extract_regions(LabelMap(labels))
        assert [r.label for r in rs.regions] == [0, 1, 2]

    def test_pixel_count_equals_ring_areas(self):
        rng = np.random.default_rng(11)
        labels = rng.integers(0, 3, (20, 20)).astype(np.int32)
        rs = extract_regions(LabelMap(labels))
        for r in rs.regions:
            ring_area = signed_area(r.outer) + sum(signed_area(h) for h in r.holes)
            assert r.pixel_count == pytest.approx(ring_area)

    @given(
        labels=hnp.arrays(
            np.int32,
            hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=24),
            elements=st.integers(0, 3),
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, labels):
        rs = extract_regions(LabelMap(labels))
        assert np.array_equal(rasterize_regions(rs).labels, labels)
        assert sum(r.pixel_count for r in rs.regions) == labels.size


class TestFilterRegions:
    def _five_by_five(self):
        labels = np.ones((5, 5), np.int32)
        labels[2, 2] = 2
        lm = LabelMap(labels)
        rs = extract_regions(lm)
        fill_region_areas(rs, CAM)
        return rs, lm

    def test_zero_threshold_is_identity(self):
        rs, lm = self._five_by_five()
        out, lm2 = filter_regions(rs, lm, 0.0, CAM)
        assert len(out.regions) == 2
        assert np.array_equal(lm2.labels, lm.labels)

    def test_speck_removed_to_parent(self):
        rs, lm = self._five_by_five()
        # pixel area = 0.16 m^2; threshold between 1 and 24 pixels
        out, lm2 = filter_regions(rs, lm, 2 * 0.16, CAM)
        assert len(out.regions) == 1
        assert np.all(lm2.labels == 1)

    def test_nested_regions_converge_to_root(self):
        labels = np.ones((9, 9), np.int32)
        labels[2:7, 2:7] = 2
        labels[4, 4] = 3
        lm = LabelMap(labels)
        rs = extract_regions(lm)
        fill_region_areas(rs, CAM)
        big = 26 * (4.0 / 81)
        out, lm2 = filter_regions(rs, lm, big, CAM)
        assert len(out.regions) == 1
        assert np.all(lm2.labels == 1)

    def test_roots_never_removed(self):
        labels = np.ones((4, 4), np.int32)
        lm = LabelMap(labels)
        rs = extract_regions(lm)
        out, lm2 = filter_regions(rs, lm, 1e9, CAM)
        assert len(out.regions) == 1

    def test_labeled_pixels_never_become_unknown(self):
        labels = np.zeros((6, 6), np.int32)
        labels[3, 3] = 2  # labeled speck inside Unknown root
        lm = LabelMap(labels)
        rs = extract_regions(lm)
        out, lm2 = filter_regions(rs, lm, 1e9, CAM)
        assert lm2.labels[3, 3] == 2

    def test_unknown_speck_inside_labeled_region_removed(self):
        labels = np.ones((5, 5), np.int32)
        labels[2, 2] = 0
        lm = LabelMap(labels)
        rs = extract_regions(lm)
        out, lm2 = filter_regions(rs, lm, 2 * 0.16, CAM)
        assert np.all(lm2.labels == 1)

    def test_negative_threshold_rejected(self):
        rs, lm = self._five_by_five()
        with pytest.raises(ValueError):
            filter_regions(rs, lm, -0.1, CAM)

    def test_partition_preserved_and_monotone(self):
        rng = np.random.default_rng(2)
        labels = rng.integers(0, 3, (24, 24)).astype(np.int32)
        lm = LabelMap(labels)
        counts = []
        for min_area in (0.0, 0.001, 0.01, 0.1, 1e9):
            rs = extract_regions(lm)
            out, lm2 = filter_regions(rs, lm, min_area, CameraMeta(1.0, 90.0))
            assert sum(r.pixel_count for r in out.regions) == labels.size
            labeled_before = labels != 0
            assert np.all(lm2.labels[labeled_before] != 0)
            counts.append(len(out.regions))
        assert counts == sorted(counts, reverse=True)


class TestApproximatePolygon:
    def test_collinear_vertex_removed(self):
        poly = approximate_polygon([(0, 0), (5, 0), (10, 0), (10, 10), (0, 10)], 1.0)
        assert poly.tolist() == [[0, 0], [10, 0], [10, 10], [0, 10]]

    def test_square_unchanged(self):
        sq = [(0, 0), (10, 0), (10, 10), (0, 10)]
        assert approximate_polygon(sq, 1.0).tolist() == [list(p) for p in sq]

    def test_triangle_passthrough(self):
        tri = [(0, 0), (4, 0), (0, 3)]
        assert approximate_polygon(tri, 1e9).tolist() == [list(p) for p in tri]

    def test_first_vertex_always_kept(self):
        # vertex 0 is collinear with its neighbors but still retained
        poly = approximate_polygon([(5, 0), (10, 0), (10, 10), (0, 10), (0, 0)], 0.5)
        assert [5.0, 0.0] in poly.tolist()

    def test_errors(self):
        with pytest.raises(ValueError):
            approximate_polygon([(0, 0), (1, 1)], 1.0)
        with pytest.raises(ValueError):
            approximate_polygon([(0, 0), (1, 1), (0, 2)], -1.0)

    def test_zero_thickness_removes_only_exact_collinear(self):
        poly = approximate_polygon([(0, 0), (5, 0), (10, 0), (10, 10), (5, 9.99), (0, 10)], 0.0)
        assert len(poly) == 5  # only (5, 0) dropped

    def _blob(self, n=500, seed=0):
        rng = np.random.default_rng(seed)
        angles = np.sort(rng.uniform(0, 2 * np.pi, n))
        radii = 200 + rng.uniform(-35, 35, n)
        return np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)

    def test_output_is_subsequence(self):
        pts = self._blob()
        poly, removed = approximate_polygon_traced(pts, 30.0)
        kept_idx = [np.argwhere((pts == v).all(axis=1))[0, 0] for v in poly]
        assert kept_idx == sorted(kept_idx)
        assert len(poly) + len(removed) == len(pts)

    def test_removed_vertices_respect_thickness(self):
        pts = self._blob()
        for thickness in (5.0, 20.0, 50.0):
            _, removed = approximate_polygon_traced(pts, thickness)
            assert all(r.distance <= thickness for r in removed)

    def test_vertex_count_monotone_in_thickness(self):
        pts = self._blob()
        counts = [len(approximate_polygon(pts, t)) for t in (20.0, 50.0, 100.0)]
        assert counts[2] <= counts[1] <= counts[0] < len(pts)


class TestSegment:
    def test_end_to_end_matches_scene_regions(self):
        spec = cornfields_spec(48, 48, 8, seed=21)
        cube, truth, db = synthesize(spec)
        result = classify(cube, db, ClassifyParams(SimilarityAlgorithm.SAM, 5.0))
        seg = segment(result.label_map, cube.camera, 0.0, 0.0)
        assert len(seg.regions.regions) == 5  # one region per strip
        assert set(seg.timings) == {STAGE_EDGE, STAGE_CONTOUR, STAGE_FILTER, STAGE_APPROX}

    def test_thickness_zero_only_collinear(self):
        labels = np.ones((6, 6), np.int32)
        seg = segment(LabelMap(labels), CAM, 0.0, 0.0)
        assert seg.regions.regions[0].outer.shape[0] == 4

    def test_min_area_larger_than_everything_keeps_roots(self):
        labels = np.ones((6, 6), np.int32)
        labels[2:4, 2:4] = 2
        seg = segment(LabelMap(labels), CAM, 1e9, 0.0)
        assert len(seg.regions.regions) == 1

    def test_geojson_document(self):
        labels = np.ones((4, 4), np.int32)
        labels[1, 1] = 2
        seg = segment(LabelMap(labels), CAM, 0.0, 0.0)
        doc = regions_to_geojson(seg.regions, {1: ("A", (1, 2, 3)), 2: ("B", (4, 5, 6)), 0: ("Unknown", (0, 0, 0))})
        assert doc["type"] == "FeatureCollection"
        assert len(doc["features"]) == 2
        f0 = doc["features"][0]
        assert f0["properties"]["class_name"] == "A"
        ring = f0["geometry"]["coordinates"][0]
        assert ring[0] == ring[-1]  # closed
