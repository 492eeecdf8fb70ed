import dataclasses


@dataclasses.dataclass(frozen=True)
class MeshConfig:
    """
    Clearance-constrained k-nearest-neighbour mesh parameters, every edge {u, v}
    must satisfy `length <= beta * min(d(u), d(v))`.
    """

    beta: float = 0.5
    k: int = 8

    def to_dict(self) -> dict:
        return dict(beta=self.beta, k=self.k)

    @classmethod
    def from_dict(cls, data: dict | None) -> 'MeshConfig':
        data = data or {}
        return cls(
            beta=float(data.get("beta", 0.5)),
            k=int(data.get("k", 8)),
        )
