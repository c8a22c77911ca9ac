"""Core point-cloud data model and semantic class schemas.

A :class:`PointCloud` is a columnar container: float64 positions plus
optional per-point RGB, intensity, normals and class labels. Instances
are immutable after construction (arrays are write-protected), so they
can be shared freely across threads and worker pools.
"""

from dataclasses import dataclass, field

import numpy as np

NORMAL_NORM_TOL = 1e-6


class SchemaError(ValueError):
    """Raised for invalid class schemas or labels outside the schema."""


@dataclass(frozen=True)
class ClassDef:
    """One semantic class: numeric id, display name, role flags."""

    id: int
    name: str
    is_noise: bool = False
    is_critical: bool = False


@dataclass(frozen=True)
class ClassSchema:
    """Ordered set of semantic classes with ids contiguous from 0.

    ``eval_ignore`` lists class ids excluded from aggregate metrics
    (e.g. noise when it is not an evaluation target).
    """

    name: str
    classes: tuple
    eval_ignore: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        ids = [c.id for c in self.classes]
        if ids != list(range(len(ids))):
            raise SchemaError(f"class ids must be contiguous from 0, got {ids}")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise SchemaError("class names must be unique")
        if sum(c.is_noise for c in self.classes) > 1:
            raise SchemaError("at most one class may be flagged as noise")
        bad = set(self.eval_ignore) - set(ids)
        if bad:
            raise SchemaError(f"eval_ignore ids not in schema: {sorted(bad)}")

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    def class_names(self) -> list:
        return [c.name for c in self.classes]

    @property
    def noise_id(self):
        """Id of the noise class, or None if the schema has none."""
        for c in self.classes:
            if c.is_noise:
                return c.id
        return None

    @property
    def critical_ids(self) -> list:
        return [c.id for c in self.classes if c.is_critical]

    def id_of(self, name: str) -> int:
        for c in self.classes:
            if c.name == name:
                return c.id
        raise SchemaError(f"no class named {name!r} in schema {self.name!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "classes": [
                {"id": c.id, "name": c.name, "is_noise": c.is_noise,
                 "is_critical": c.is_critical}
                for c in self.classes
            ],
            "eval_ignore": sorted(self.eval_ignore),
        }

    @staticmethod
    def from_dict(d: dict) -> "ClassSchema":
        classes = tuple(
            ClassDef(c["id"], c["name"], c.get("is_noise", False),
                     c.get("is_critical", False))
            for c in d["classes"]
        )
        return ClassSchema(d["name"], classes, frozenset(d.get("eval_ignore", ())))


TS40K = ClassSchema(
    "ts40k",
    (
        ClassDef(0, "noise", is_noise=True),
        ClassDef(1, "ground"),
        ClassDef(2, "low_vegetation"),
        ClassDef(3, "medium_vegetation"),
        ClassDef(4, "tower", is_critical=True),
        ClassDef(5, "power_line", is_critical=True),
    ),
)

TSRGB = ClassSchema(
    "tsrgb",
    (
        ClassDef(0, "noise", is_noise=True),
        ClassDef(1, "vegetation"),
        ClassDef(2, "tower", is_critical=True),
        ClassDef(3, "power_line", is_critical=True),
    ),
)

_BUILTIN = {s.name: s for s in (TS40K, TSRGB)}


def get_schema(name: str) -> ClassSchema:
    """Look up a built-in schema by name ("ts40k" or "tsrgb")."""
    try:
        return _BUILTIN[name.lower()]
    except KeyError:
        raise SchemaError(f"unknown schema {name!r}; known: {sorted(_BUILTIN)}") from None


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Immutable columnar point cloud.

    Parameters
    ----------
    positions : (n, 3) float64
        Point coordinates in meters.
    rgb : (n, 3) uint8, optional
    intensity : (n,) float64, optional
    normals : (n, 3) float64, optional
        Unit vectors (norm within 1e-6 of 1).
    labels : (n,) uint8, optional
        Class ids, validated against ``schema`` when both are present.
    schema : ClassSchema, optional
    """

    positions: np.ndarray
    rgb: np.ndarray = None
    intensity: np.ndarray = None
    normals: np.ndarray = None
    labels: np.ndarray = None
    schema: ClassSchema = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "positions", _frozen(pos))
        n = len(pos)

        def check(arr, name, dtype, shape):
            if arr is None:
                return None
            arr = np.asarray(arr, dtype=dtype).reshape(shape)
            if len(arr) != n:
                raise ValueError(
                    f"{name} has {len(arr)} entries for {n} points")
            return _frozen(arr)

        object.__setattr__(self, "rgb", check(self.rgb, "rgb", np.uint8, (-1, 3)))
        object.__setattr__(self, "intensity",
                           check(self.intensity, "intensity", np.float64, (-1,)))
        object.__setattr__(self, "normals",
                           check(self.normals, "normals", np.float64, (-1, 3)))
        object.__setattr__(self, "labels",
                           check(self.labels, "labels", np.uint8, (-1,)))

        if self.normals is not None and n:
            norms = np.linalg.norm(self.normals, axis=1)
            if np.any(np.abs(norms - 1.0) > NORMAL_NORM_TOL):
                worst = float(np.abs(norms - 1.0).max())
                raise ValueError(f"normals are not unit vectors (max |norm-1| = {worst:g})")
        if self.labels is not None and self.schema is not None and n:
            if self.labels.max(initial=0) >= self.schema.num_classes:
                raise SchemaError(
                    f"label {int(self.labels.max())} outside schema "
                    f"{self.schema.name!r} with {self.schema.num_classes} classes")

    @property
    def point_count(self) -> int:
        return len(self.positions)

    def __len__(self) -> int:
        return len(self.positions)

    def __eq__(self, other) -> bool:
        """Bit-exact equality of all stored attributes."""
        if not isinstance(other, PointCloud):
            return NotImplemented
        for name in ("positions", "rgb", "intensity", "normals", "labels"):
            a, b = getattr(self, name), getattr(other, name)
            if (a is None) != (b is None):
                return False
            if a is not None and not np.array_equal(a, b):
                return False
        return True

    def select(self, indices) -> "PointCloud":
        """New cloud containing the given points, order as given."""
        indices = np.asarray(indices)
        take = lambda a: None if a is None else a[indices]
        return PointCloud(
            positions=self.positions[indices],
            rgb=take(self.rgb),
            intensity=take(self.intensity),
            normals=take(self.normals),
            labels=take(self.labels),
            schema=self.schema,
        )

    def with_labels(self, labels, schema=None) -> "PointCloud":
        return PointCloud(
            positions=self.positions, rgb=self.rgb, intensity=self.intensity,
            normals=self.normals, labels=labels,
            schema=schema if schema is not None else self.schema,
        )

    def centroid(self) -> np.ndarray:
        if not len(self.positions):
            return np.zeros(3)
        return self.positions.mean(axis=0)
