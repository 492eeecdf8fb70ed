from enum import StrEnum

from .messages import Messages


class AmbientKind(StrEnum):
    EUCLIDEAN = "euclidean"
    SNOWFLAKE = "snowflake"
    CURVE = "curve"
    MATRIX = "matrix"


class QhWeightMode(StrEnum):
    UPPER = "upper"
    TRAPEZOID = "trapezoid"


class TransformKind(StrEnum):
    SPHERICALIZE = "sphericalize"
    INVERT = "invert"


class CurveKind(StrEnum):
    LENGTH = "length"
    QH_UPPER = "qh_upper"
    QH_TRAPEZOID = "qh_trapezoid"


class CheckStatus(StrEnum):
    PASS = "pass"
    FAIL = "fail"
    VACUOUS = "vacuous"
    DIVERGES = "diverges"
    OUT_OF_SCOPE = "out_of_scope"


class DomainKind(StrEnum):
    DISK = "disk"
    SNOWFLAKE_DISK = "snowflake_disk"
    HALFLINE = "halfline"
    GRID_RECT = "grid_rect"
    SLIT_DISK = "slit_disk"
    ARC_EXAMPLE = "arc_example"
    EXPLICIT = "explicit"
