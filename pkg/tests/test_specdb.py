import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from hypermap.cube import Spectrum
from hypermap.errors import DatabaseError, DuplicateClassError, UnknownClassError, ZeroSpectrumError
from hypermap.specdb import (
    SimilarityAlgorithm,
    SpectralDatabase,
    default_taxonomy_path,
    load_db,
    sam_degrees,
    save_db,
    similarity,
)

WL4 = [400.0, 500.0, 600.0, 700.0]


def spec4(values):
    return Spectrum(WL4[: len(values)], values)


class TestSimilarity:
    def test_sam_45_degrees(self):
        assert sam_degrees([1, 1, 0], [1, 0, 0]) == pytest.approx(45.0, abs=1e-9)

    def test_sam_orthogonal(self):
        assert sam_degrees([0, 3], [4, 0]) == pytest.approx(90.0, abs=1e-9)

    def test_sam_scale_invariant(self):
        assert sam_degrees([2, 4, 6], [1, 2, 3]) == pytest.approx(0.0, abs=1e-9)

    def test_euclidean(self):
        a = spec4([1.0, 1.0])
        assert similarity(a, a, SimilarityAlgorithm.EUCLIDEAN) == 0.0
        z = spec4([0.0, 0.0])
        c = spec4([0.3, 0.3])
        assert similarity(z, c, SimilarityAlgorithm.EUCLIDEAN) == pytest.approx(0.3 * np.sqrt(2))
        # Euclidean grows with magnitude while SAM of equal shapes stays 0
        assert similarity(spec4([0.1, 0.1]), spec4([0.9, 0.9]), SimilarityAlgorithm.SAM) == pytest.approx(0.0, abs=1e-9)

    def test_zero_spectrum_rejected_under_sam(self):
        with pytest.raises(ZeroSpectrumError):
            sam_degrees([0.0, 0.0], [1.0, 2.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            similarity(spec4([1.0, 2.0]), spec4([1.0, 2.0, 3.0]))

    @given(
        a=hnp.arrays(np.float64, 8, elements=st.floats(0.0, 1.0)),
        b=hnp.arrays(np.float64, 8, elements=st.floats(0.0, 1.0)),
    )
    @settings(max_examples=200, deadline=None)
    def test_symmetry_and_range(self, a, b):
        if not a.any() or not b.any():
            return
        ab = sam_degrees(a, b)
        ba = sam_degrees(b, a)
        assert ab == pytest.approx(ba, abs=1e-9)
        assert 0.0 <= ab <= 90.0 + 1e-9  # non-negative spectra

    @given(
        a=hnp.arrays(np.float64, 8, elements=st.floats(0.01, 1.0)),
        c=st.floats(1e-3, 1e3),
    )
    @settings(max_examples=200, deadline=None)
    def test_self_and_scale_invariance(self, a, c):
        assert sam_degrees(a, a) == pytest.approx(0.0, abs=1e-9)
        assert sam_degrees(a, c * a) == pytest.approx(0.0, abs=1e-9)


class TestDatabase:
    def test_first_insertion_gets_id_1(self):
        db = SpectralDatabase()
        assert db.add_class("Water", (0, 0, 255), spec4([0.5, 0.2])) == 1

    def test_duplicate_name_rejected(self):
        db = SpectralDatabase()
        db.add_class("Water", (0, 0, 255), spec4([0.5, 0.2]))
        with pytest.raises(DuplicateClassError):
            db.add_class("Water", (1, 1, 1), spec4([0.4, 0.3]))

    def test_ids_sequential(self):
        db = SpectralDatabase()
        ids = [db.add_class(f"c{i}", (i, i, i), spec4([0.1 + i, 0.2])) for i in range(5)]
        assert ids == [1, 2, 3, 4, 5]

    def test_remove_keeps_other_ids(self):
        db = SpectralDatabase()
        a = db.add_class("A", (1, 1, 1), spec4([0.1, 0.2]))
        b = db.add_class("B", (2, 2, 2), spec4([0.3, 0.2]))
        db.remove_class(a)
        assert [c.id for c in db.classes] == [b]

    def test_remove_unknown_id(self):
        with pytest.raises(UnknownClassError):
            SpectralDatabase().remove_class(99)

    def test_ids_never_reused(self):
        db = SpectralDatabase()
        a = db.add_class("A", (1, 1, 1), spec4([0.1, 0.2]))
        db.add_class("B", (2, 2, 2), spec4([0.3, 0.2]))
        db.remove_class(a)
        assert db.add_class("C", (3, 3, 3), spec4([0.2, 0.2])) == 3

    def test_zero_reference_rejected(self):
        with pytest.raises(ZeroSpectrumError):
            SpectralDatabase().add_class("Z", (1, 1, 1), spec4([0.0, 0.0]))

    def test_band_count_mismatch(self):
        db = SpectralDatabase()
        db.add_class("A", (1, 1, 1), spec4([0.1, 0.2]))
        with pytest.raises(DatabaseError):
            db.add_class("B", (2, 2, 2), spec4([0.1, 0.2, 0.3]))

    def test_default_taxonomy(self):
        assert default_taxonomy_path("Water") == ["World", "Landscape", "Water"]
        assert default_taxonomy_path("Mystery") == ["World", "Mystery"]

    def test_version_bumps_on_mutation(self):
        db = SpectralDatabase()
        v0 = db.version
        cid = db.add_class("A", (1, 1, 1), spec4([0.1, 0.2]))
        assert db.version == v0 + 1
        db.remove_class(cid)
        assert db.version == v0 + 2


class TestPersistence:
    def test_round_trip(self, tmp_path):
        db = SpectralDatabase()
        db.add_class("Water", (0, 100, 255), spec4([0.5, 0.25, 0.125]), ["World", "Landscape", "Water"])
        db.add_class("Moss", (10, 200, 10), spec4([0.1, 0.6, 0.3]))
        path = tmp_path / "db.json"
        save_db(db, path)
        loaded = load_db(path)
        assert len(loaded) == 2
        for orig, got in zip(db.classes, loaded.classes):
            assert (orig.id, orig.name, orig.color, orig.taxonomy_path) == (
                got.id,
                got.name,
                got.color,
                got.taxonomy_path,
            )
            assert np.array_equal(
                orig.reference.values.astype(np.float32), got.reference.values.astype(np.float32)
            )
        # a second round trip is the identity (values already f32-rounded)
        save_db(loaded, tmp_path / "db2.json")
        again = load_db(tmp_path / "db2.json")
        for a, b in zip(loaded.classes, again.classes):
            assert np.array_equal(a.reference.values, b.reference.values)
        # counter continues past the largest stored id
        assert loaded.add_class("New", (5, 5, 5), spec4([0.2, 0.2, 0.2])) == 3

    def test_empty_database_round_trip(self, tmp_path):
        path = tmp_path / "db.json"
        save_db(SpectralDatabase(), path)
        assert len(load_db(path)) == 0

    def test_duplicate_names_rejected_on_load(self, tmp_path):
        path = tmp_path / "db.json"
        entry = {
            "name": "X",
            "color": [1, 2, 3],
            "taxonomy": ["World", "X"],
            "wavelengths_nm": WL4[:2],
            "values": [0.1, 0.2],
        }
        import json

        path.write_text(json.dumps({"classes": [dict(entry, id=1), dict(entry, id=2)]}))
        with pytest.raises(DuplicateClassError):
            load_db(path)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "db.json"
        path.write_text("{not json")
        with pytest.raises(DatabaseError):
            load_db(path)
