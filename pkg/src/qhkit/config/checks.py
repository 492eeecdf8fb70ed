from enum import IntFlag, auto


class SuiteChecks(IntFlag):
    """
    A bitflag containing every check of the verification suite, in report order
    """

    Sandwich = auto()
    QhLowerBound = auto()
    CrossRatio16t = auto()
    RoundTrip = auto()
    QuasiconvexTransfer = auto()
    AdditiveConstants = auto()
    CigarConstant = auto()
    ArcExample = auto()
    SnowflakeDivergence = auto()
    UniformityStability = auto()

    @classmethod
    def all(cls) -> 'SuiteChecks':
        flags = cls(0)
        for flag in cls:
            flags |= flag
        return flags

    @classmethod
    def empty(cls) -> 'SuiteChecks':
        return cls(0)

    @classmethod
    def from_names(cls, names: list[str]) -> 'SuiteChecks':
        lookup = {flag.name.lower(): flag for flag in cls}
        flags = cls(0)
        for name in names:
            key = name.replace("_", "").replace("-", "").lower()
            if key not in lookup:
                raise KeyError(name)
            flags |= lookup[key]
        return flags
