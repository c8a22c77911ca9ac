import numpy as np
import pytest

from gridscan.cloud import (TS40K, TSRGB, ClassDef, ClassSchema, PointCloud,
                            SchemaError, get_schema)


class TestClassSchema:
    def test_builtin_ts40k_layout(self):
        assert TS40K.num_classes == 6
        assert TS40K.class_names == ["noise", "ground", "low_vegetation",
                                     "medium_vegetation", "tower", "power_line"]
        assert TS40K.noise_id == 0
        assert TS40K.critical_ids == [4, 5]

    def test_builtin_tsrgb_layout(self):
        assert TSRGB.class_names == ["noise", "vegetation", "tower", "power_line"]
        assert TSRGB.critical_ids == [2, 3]

    def test_lookup(self):
        assert get_schema("TS40K") is TS40K
        with pytest.raises(SchemaError):
            get_schema("nope")

    def test_ids_must_be_contiguous(self):
        with pytest.raises(SchemaError):
            ClassSchema("bad", (ClassDef(0, "a"), ClassDef(2, "b")))

    def test_single_noise_class(self):
        with pytest.raises(SchemaError):
            ClassSchema("bad", (ClassDef(0, "a", is_noise=True),
                                ClassDef(1, "b", is_noise=True)))

    def test_roundtrip_dict(self):
        again = ClassSchema.from_dict(TS40K.to_dict())
        assert again == TS40K


class TestPointCloud:
    def test_attribute_length_mismatch(self):
        with pytest.raises(ValueError):
            PointCloud(positions=np.zeros((3, 3)), labels=np.zeros(2, np.uint8))

    def test_non_unit_normals_rejected(self):
        with pytest.raises(ValueError):
            PointCloud(positions=np.zeros((1, 3)), normals=[[0.0, 0.0, 2.0]])

    def test_labels_validated_against_schema(self):
        with pytest.raises(SchemaError):
            PointCloud(positions=np.zeros((1, 3)), labels=[9], schema=TS40K)

    def test_immutable_arrays(self):
        cloud = PointCloud(positions=np.zeros((2, 3)))
        with pytest.raises(ValueError):
            cloud.positions[0, 0] = 1.0

    def test_empty_cloud(self):
        cloud = PointCloud(positions=np.empty((0, 3)))
        assert cloud.point_count == 0
        assert len(cloud) == 0

    def test_select_preserves_attributes(self):
        rng = np.random.default_rng(0)
        cloud = PointCloud(
            positions=rng.uniform(size=(10, 3)),
            rgb=rng.integers(0, 256, (10, 3), dtype=np.uint8),
            labels=rng.integers(0, 6, 10, dtype=np.uint8),
            schema=TS40K,
        )
        sub = cloud.select([3, 1, 7])
        assert sub.point_count == 3
        assert np.array_equal(sub.positions, cloud.positions[[3, 1, 7]])
        assert np.array_equal(sub.rgb, cloud.rgb[[3, 1, 7]])
        assert sub.intensity is None

    def test_equality_is_bit_exact(self):
        pos = np.array([[0.1, 0.2, 0.3]])
        a = PointCloud(positions=pos)
        b = PointCloud(positions=pos.copy())
        assert a == b
        c = PointCloud(positions=pos + 1e-17)
        assert (a == c) == bool(np.array_equal(a.positions, c.positions))
        assert a != PointCloud(positions=pos, labels=[1])
