"""Point-cloud file formats: XYZ text, PLY 1.0, and the GSC1 cache."""

from .cache import read_cache, write_cache
from .common import FormatError
from .ply import parse_ply, write_ply
from .xyz import parse_xyz, write_xyz

__all__ = [
    "FormatError",
    "parse_xyz", "write_xyz",
    "parse_ply", "write_ply",
    "read_cache", "write_cache",
]
