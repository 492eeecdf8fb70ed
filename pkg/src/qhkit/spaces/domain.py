import dataclasses
import logging
import threading
from functools import cached_property

import numpy as np

from ..config import MeshConfig
from ..enums import DomainKind, Messages
from ..errors import DomainError
from ..typing import FloatArray, IntArray
from .mesh import MeshGraph, build_mesh
from .metric import FiniteMetricSpace

logger = logging.getLogger("qhkit.spaces")

# rows of the interior/boundary distance block computed at once
BOUNDARY_CHUNK = 4096


@dataclasses.dataclass(frozen=True, eq=False)
class DomainSpace:
    """
    A finite metric space split into interior samples of a domain and samples of
    its (nonempty) boundary. The mesh over the interior is built lazily.
    """

    ambient: FiniteMetricSpace
    interior: IntArray
    boundary: IntArray
    mesh_config: MeshConfig = MeshConfig()
    name: str = ""
    kind: DomainKind = DomainKind.EXPLICIT
    params: dict = dataclasses.field(default_factory=dict)
    _mesh_lock: threading.Lock = dataclasses.field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        interior = np.unique(self.ambient.check_ids(self.interior))
        boundary = np.unique(self.ambient.check_ids(self.boundary))
        object.__setattr__(self, "interior", interior)
        object.__setattr__(self, "boundary", boundary)

        if boundary.size == 0:
            raise DomainError(Messages.MISSING_INPUT % "boundary samples (the boundary must be nonempty)")
        if interior.size == 0:
            raise DomainError(Messages.MISSING_INPUT % "interior samples")
        shared = np.intersect1d(interior, boundary)
        if shared.size:
            raise DomainError(Messages.NOT_INTERIOR % (int(shared[0]), self.name or "domain"))

        clearance = self.boundary_distances
        if np.any(clearance <= 0):
            bad = int(interior[np.argmin(clearance)])
            raise DomainError(Messages.OUT_OF_RANGE % (f"boundary distance of point {bad}", float(clearance.min())))

    @cached_property
    def boundary_distances(self) -> FloatArray:
        """d(x) for every interior point, aligned with `interior`."""
        out = np.empty(self.interior.size)
        for start in range(0, self.interior.size, BOUNDARY_CHUNK):
            block = self.ambient.pairwise(self.interior[start:start + BOUNDARY_CHUNK], self.boundary)
            out[start:start + BOUNDARY_CHUNK] = block.min(axis=1)
        return out

    @cached_property
    def _positions(self) -> dict[int, int]:
        return {int(x): i for i, x in enumerate(self.interior)}

    def position(self, x: int) -> int:
        try:
            return self._positions[int(x)]
        except KeyError:
            raise DomainError(Messages.NOT_INTERIOR % (x, self.name or "domain"))

    def clearance(self, ids) -> FloatArray:
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        return self.boundary_distances[[self.position(x) for x in ids]]

    @property
    def mesh(self) -> MeshGraph:
        """The clearance-constrained mesh, built once even when several workers ask for it."""
        with self._mesh_lock:
            if "_mesh" not in self.__dict__:
                self.__dict__["_mesh"] = build_mesh(self, beta=self.mesh_config.beta, k=self.mesh_config.k)
            return self.__dict__["_mesh"]

    @property
    def beta(self) -> float:
        return self.mesh_config.beta

    def with_mesh_config(self, mesh_config: MeshConfig) -> 'DomainSpace':
        return dataclasses.replace(self, mesh_config=mesh_config)

    def nearest_interior(self, point) -> int:
        """Interior point id closest (in coordinates) to `point`."""
        coords = self.ambient.coords
        if coords is None:
            raise DomainError(Messages.MISSING_INPUT % "coordinates to locate points by position")
        point = np.asarray(point, dtype=np.float64).reshape(1, -1)
        if point.shape[1] != coords.shape[1]:
            raise DomainError(Messages.OUT_OF_RANGE % ("point dimension", point.shape[1]))
        offsets = np.linalg.norm(coords[self.interior] - point, axis=1)
        return int(self.interior[np.argmin(offsets)])

    def to_dict(self) -> dict:
        data = self.ambient.to_dict()
        data.update(
            name=self.name,
            kind=str(self.kind),
            params=dict(self.params),
            interior=self.interior.tolist(),
            boundary=self.boundary.tolist(),
            mesh=self.mesh_config.to_dict(),
        )
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'DomainSpace':
        for key in ("interior", "boundary"):
            if key not in data:
                raise DomainError(Messages.MISSING_INPUT % key)
        try:
            kind = DomainKind(data.get("kind", DomainKind.EXPLICIT))
        except ValueError:
            kind = DomainKind.EXPLICIT
        return cls(
            ambient=FiniteMetricSpace.from_dict(data),
            interior=np.asarray(data["interior"], dtype=np.int64),
            boundary=np.asarray(data["boundary"], dtype=np.int64),
            mesh_config=MeshConfig.from_dict(data.get("mesh")),
            name=data.get("name", ""),
            kind=kind,
            params=dict(data.get("params") or {}),
        )


def boundary_distance(dom: DomainSpace, x: int) -> float:
    """d(x) = distance from an interior point to the boundary samples."""
    return float(dom.boundary_distances[dom.position(x)])
