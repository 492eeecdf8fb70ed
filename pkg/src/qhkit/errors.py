class QhkitError(Exception):
    """Base class for every error raised by qhkit."""

    def __init__(self, message="qhkit computation failed."):
        super().__init__(message)


class DomainError(QhkitError):
    """Raised when a point or parameter violates an operation's precondition."""

    def __init__(self, message="Invalid point or parameter for this domain."):
        super().__init__(message)


class MeshError(QhkitError):
    """Raised when a mesh is disconnected or a path is requested for an unmeshed point."""

    def __init__(self, message="Mesh too coarse.", components: list[dict] | None = None):
        super().__init__(message)
        self.components = components or []


class CorrespondenceError(QhkitError):
    """Raised when a point correspondence between two spaces is not a bijection."""

    def __init__(self, message="Correspondence is not a bijection."):
        super().__init__(message)


class ConfigError(QhkitError):
    """Raised for missing or malformed configuration, before any computation starts."""

    def __init__(self, message="Invalid configuration."):
        super().__init__(message)
