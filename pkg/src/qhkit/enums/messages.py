from enum import StrEnum


class Messages(StrEnum):
    NOT_INTERIOR = "point %s is not an interior point of %s"
    NOT_MESHED = "point %s is stranded, no mesh edge satisfies the clearance constraint"
    MESH_TOO_COARSE = "mesh too coarse: %d components %s"
    MESH_EMPTY = "mesh has no edges, every interior point of %s is stranded"
    OUT_OF_RANGE = "%s out of range: %s"
    REPEATED_POINTS = "points must be pairwise distinct, got %s"
    NOT_BIJECTIVE = "correspondence is not a bijection: %s"
    UNKNOWN_POINT = "unknown point id %s (space has %d points)"
    MISSING_INPUT = "missing input: %s"
    INVALID_CONFIG = "invalid configuration: %s"
