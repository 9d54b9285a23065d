import numpy as np
import pytest

from hypermap.classify import ClassifyParams, LabelMap, classify
from hypermap.cube import CameraMeta
from hypermap.mapping import (
    InstanceLabelTree,
    SemanticMap,
    export_ontology,
    features_to_geojson,
    ontology_to_dot,
)
from hypermap.scene import cornfields_spec, runtime_add_spec, synthesize
from hypermap.segmentation import segment
from hypermap.specdb import SimilarityAlgorithm

CAM = CameraMeta(h_m=1.0, fov_deg=90.0)  # 64 px frame -> exact 0.03125 m cells
RES = 2.0 / 64


def scene_frame(seed=3, spec_fn=cornfields_spec):
    spec = spec_fn(64, 64, 8, seed=seed, camera=CAM)
    cube, truth, db = synthesize(spec)
    seg = segment(truth, CAM, 0.0, 0.0)
    return seg, db


def grids_equal(a: SemanticMap, b: SemanticMap) -> bool:
    return (
        a.origin_x == b.origin_x
        and a.top_y == b.top_y
        and a.grid.shape == b.grid.shape
        and np.array_equal(a.grid, b.grid)
    )


class TestTree:
    def test_paths_deterministic_and_rooted(self):
        t = InstanceLabelTree()
        t.add_path(["World", "Landscape", "Water"])
        t.add_path(["World", "Vegetation"])
        assert t.paths() == [
            ["World"],
            ["World", "Landscape"],
            ["World", "Landscape", "Water"],
            ["World", "Vegetation"],
        ]
        assert t.contains(["World", "Landscape"])
        assert not t.contains(["World", "Obstacle"])
        with pytest.raises(ValueError):
            t.add_path(["Earth", "Water"])


class TestIngest:
    def test_single_frame_identity_at_matching_resolution(self):
        seg, db = scene_frame()
        smap = SemanticMap(resolution_m=RES)
        smap.ingest_frame(seg.regions, CAM, "f1", db.classes)
        _, truth, _ = synthesize(cornfields_spec(64, 64, 8, seed=3, camera=CAM))
        assert smap.grid.shape == (64, 64)
        assert np.array_equal(smap.grid, truth.labels)

    def test_idempotent_reingestion(self):
        seg, db = scene_frame()
        smap = SemanticMap(resolution_m=RES)
        smap.ingest_frame(seg.regions, CAM, "f1", db.classes)
        before = smap.grid.copy()
        smap.ingest_frame(seg.regions, CAM, "f1", db.classes)
        assert np.array_equal(smap.grid, before)

    def test_overlap_later_frame_wins_but_unknown_preserves(self):
        seg, db = scene_frame()
        smap = SemanticMap(resolution_m=RES)
        smap.ingest_frame(seg.regions, CAM, "f1", db.classes)
        # second frame shifted half a footprint to the east
        cam2 = CameraMeta(h_m=1.0, fov_deg=90.0, pose_x=1.0)
        smap.ingest_frame(seg.regions, cam2, "f2", db.classes)
        _, truth, _ = synthesize(cornfields_spec(64, 64, 8, seed=3, camera=CAM))
        # overlap columns [32:64] of frame 1 now carry frame 2's west half
        assert np.array_equal(smap.grid[:, 32:64], truth.labels[:, 0:32])
        # non-overlapping west half of frame 1 is untouched
        assert np.array_equal(smap.grid[:, 0:32], truth.labels[:, 0:32])

    def test_unknown_never_erases(self):
        labels = np.ones((8, 8), np.int32)
        seg1 = segment(LabelMap(labels), CAM, 0.0, 0.0)
        blank = np.zeros((8, 8), np.int32)
        seg2 = segment(LabelMap(blank), CAM, 0.0, 0.0)
        _, db = scene_frame()
        smap = SemanticMap(resolution_m=2.0 / 8)
        smap.ingest_frame(seg1.regions, CAM, "f1", db.classes)
        known = smap.non_unknown_cells()
        smap.ingest_frame(seg2.regions, CAM, "f2", db.classes)
        assert smap.non_unknown_cells() == known

    def test_known_cells_monotone(self):
        seg, db = scene_frame()
        smap = SemanticMap(resolution_m=RES)
        counts = []
        for i, px in enumerate((0.0, 1.0, 2.5)):
            cam = CameraMeta(1.0, 90.0, pose_x=px)
            smap.ingest_frame(seg.regions, cam, f"f{i}", db.classes)
            counts.append(smap.non_unknown_cells())
        assert counts == sorted(counts)

    def test_disjoint_frames_commute(self):
        seg, db = scene_frame()
        cam_a = CameraMeta(1.0, 90.0, pose_x=0.0)
        cam_b = CameraMeta(1.0, 90.0, pose_x=10.0)
        m1 = SemanticMap(resolution_m=RES)
        m1.ingest_frame(seg.regions, cam_a, "a", db.classes)
        m1.ingest_frame(seg.regions, cam_b, "b", db.classes)
        m2 = SemanticMap(resolution_m=RES)
        m2.ingest_frame(seg.regions, cam_b, "b", db.classes)
        m2.ingest_frame(seg.regions, cam_a, "a", db.classes)
        assert grids_equal(m1, m2)

    def test_resolution_must_be_positive(self):
        with pytest.raises(ValueError):
            SemanticMap(resolution_m=0.0)


class TestFeatures:
    def test_empty_map(self):
        assert SemanticMap(resolution_m=0.05).extract_features() == []

    def test_uniform_footprint_single_feature(self):
        labels = np.full((16, 16), 2, np.int32)
        seg = segment(LabelMap(labels), CAM, 0.0, 0.0)
        _, db = scene_frame()
        smap = SemanticMap(resolution_m=2.0 / 16)
        smap.ingest_frame(seg.regions, CAM, "f1", db.classes)
        feats = smap.extract_features()
        assert len(feats) == 1
        f = feats[0]
        assert f.instance_label == "Vegetation"
        assert f.area_m2 == pytest.approx(4.0, abs=1e-9)
        assert f.source_frames == ["f1"]

    def test_two_blobs_share_instance_label(self):
        labels = np.zeros((8, 8), np.int32)
        labels[1:3, 1:3] = 1
        labels[5:7, 5:7] = 1
        seg = segment(LabelMap(labels), CAM, 0.0, 0.0)
        _, db = scene_frame()
        smap = SemanticMap(resolution_m=2.0 / 8)
        smap.ingest_frame(seg.regions, CAM, "f1", db.classes)
        feats = smap.extract_features()
        assert len(feats) == 2
        assert feats[0].instance_label == feats[1].instance_label == "Ground"

    def test_feature_areas_sum_to_known_cells(self):
        seg, db = scene_frame()
        smap = SemanticMap(resolution_m=RES)
        smap.ingest_frame(seg.regions, CAM, "f1", db.classes)
        cam2 = CameraMeta(1.0, 90.0, pose_x=0.8, pose_yaw=0.4)
        smap.ingest_frame(seg.regions, cam2, "f2", db.classes)
        feats = smap.extract_features()
        total = sum(f.area_m2 for f in feats)
        assert total == pytest.approx(smap.non_unknown_cells() * RES**2, rel=1e-12)

    def test_features_rasterize_back_exactly(self):
        seg, db = scene_frame()
        smap = SemanticMap(resolution_m=RES)
        smap.ingest_frame(seg.regions, CAM, "f1", db.classes)
        from hypermap.segmentation import extract_regions, rasterize_regions

        rs = extract_regions(LabelMap(smap.grid))
        assert np.array_equal(rasterize_regions(rs).labels, smap.grid)


class TestOntology:
    def _water_only_map(self):
        labels = np.zeros((8, 8), np.int32)
        labels[2:6, 2:6] = 4  # Water in the strip scene's id order
        seg = segment(LabelMap(labels), CAM, 0.0, 0.0)
        _, db = scene_frame()
        smap = SemanticMap(resolution_m=2.0 / 8)
        smap.ingest_frame(seg.regions, CAM, "f1", db.classes)
        return smap

    def test_water_feature_path(self):
        smap = self._water_only_map()
        feats = smap.extract_features()
        doc = export_ontology(smap, feats)
        ids = [n["id"] for n in doc["nodes"]]
        assert "World/Landscape/Water" in ids
        assert "feature#1" in ids
        edges = {(e["from"], e["to"]) for e in doc["edges"]}
        assert ("World", "World/Landscape") in edges
        assert ("World/Landscape", "World/Landscape/Water") in edges
        assert ("World/Landscape/Water", "feature#1") in edges

    def test_empty_map_taxonomy_only(self):
        smap = SemanticMap(resolution_m=0.05)
        doc = export_ontology(smap, [])
        assert [n["id"] for n in doc["nodes"]] == ["World"]
        assert doc["edges"] == []

    def test_every_instance_path_in_taxonomy(self):
        seg, db = scene_frame()
        smap = SemanticMap(resolution_m=RES)
        smap.ingest_frame(seg.regions, CAM, "f1", db.classes)
        feats = smap.extract_features()
        doc = export_ontology(smap, feats)
        assert sum(1 for n in doc["nodes"] if n["kind"] == "feature") == len(feats)
        for f in feats:
            assert smap.tree.contains(f.taxonomy_path)

    def test_runtime_tarp_extends_taxonomy(self):
        seg, db = scene_frame(spec_fn=runtime_add_spec)
        smap = SemanticMap(resolution_m=RES)
        smap.ingest_frame(seg.regions, CAM, "f1", db.classes)
        doc = export_ontology(smap, smap.extract_features())
        ids = [n["id"] for n in doc["nodes"]]
        assert "World/Obstacle/Tarp" in ids
        labels = [n["label"] for n in doc["nodes"] if n["kind"] == "feature"]
        assert any(lbl.startswith("Tarp#") for lbl in labels)

    def test_dot_deterministic(self):
        def build():
            seg, db = scene_frame()
            smap = SemanticMap(resolution_m=RES)
            smap.ingest_frame(seg.regions, CAM, "f1", db.classes)
            return ontology_to_dot(export_ontology(smap, smap.extract_features()))

        assert build() == build()

    def test_dot_shape(self):
        smap = self._water_only_map()
        dot = ontology_to_dot(export_ontology(smap, smap.extract_features()))
        assert dot.startswith("digraph ontology {")
        assert '"World/Landscape/Water" -> "feature#1" [kind="instance"];' in dot


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path):
        seg, db = scene_frame()
        smap = SemanticMap(resolution_m=RES)
        smap.ingest_frame(seg.regions, CAM, "f1", db.classes)
        smap.save(tmp_path / "map")
        loaded = SemanticMap.load(tmp_path / "map")
        assert grids_equal(smap, loaded)
        assert loaded.frames == smap.frames
        assert np.array_equal(loaded.frame_grid, smap.frame_grid)
        assert {k: v.name for k, v in loaded.classes.items()} == {
            k: v.name for k, v in smap.classes.items()
        }
        d1 = export_ontology(smap, smap.extract_features())
        d2 = export_ontology(loaded, loaded.extract_features())
        assert ontology_to_dot(d1) == ontology_to_dot(d2)

    def test_features_geojson(self):
        smap = self._water_map()
        feats = smap.extract_features()
        doc = features_to_geojson(smap, feats)
        assert doc["type"] == "FeatureCollection"
        f = doc["features"][0]
        assert f["properties"]["class_name"] == "Water"
        assert f["properties"]["area_m2"] > 0
        ring = f["geometry"]["coordinates"][0]
        assert ring[0] == ring[-1]

    def _water_map(self):
        labels = np.zeros((8, 8), np.int32)
        labels[2:6, 2:6] = 4
        seg = segment(LabelMap(labels), CAM, 0.0, 0.0)
        _, db = scene_frame()
        smap = SemanticMap(resolution_m=2.0 / 8)
        smap.ingest_frame(seg.regions, CAM, "f1", db.classes)
        return smap
