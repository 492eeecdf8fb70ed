import dataclasses


@dataclasses.dataclass(frozen=True)
class SamplingConfig:
    """
    Pair sampling for constant estimation: exhaustive below `exhaustive_limit`
    meshed points, otherwise `n_pairs` seeded pairs stratified by r_Omega decade,
    plus every pair among the `boundary_layer` points closest to the boundary.
    """

    seed: int = 17
    exhaustive_limit: int = 300
    n_pairs: int = 10_000
    boundary_layer: int = 40
    pool_factor: int = 20

    def with_seed(self, seed: int) -> 'SamplingConfig':
        return dataclasses.replace(self, seed=seed)


@dataclasses.dataclass(frozen=True)
class ScanConfig:
    """
    Quadruple / triple scans: exhaustive when the number of distinct cross ratio
    (or distance ratio) samples is at most `exhaustive_limit`, else `n_samples`
    seeded draws without replacement.
    """

    seed: int = 17
    exhaustive_limit: int = 1_000_000
    n_samples: int = 100_000
    alphas: tuple[float, ...] = (1.0, 1 / 2, 1 / 3, 1 / 4)

    def with_seed(self, seed: int) -> 'ScanConfig':
        return dataclasses.replace(self, seed=seed)
