import hashlib
import os
from typing import Optional

import numpy as np

from ..storage.paths import QhkitPaths


class MetricCache:
    """
    Automatically caches the chain metric of a base-weight matrix if initialized with
    `chain` and automatically loads the cached chain metric if not initialized with
    `chain`, raises FileNotFoundError if the cache file does not exist.
    """

    def __init__(self, weights: np.ndarray, chain: Optional[np.ndarray] = None):
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        self.chain = chain

        cache_dir = QhkitPaths.cache() / "metrics"

        if self.chain is None:
            # loads the cached matrix
            self.load()
        else:
            # caches the matrix
            assert self.chain.shape == self.weights.shape, f"expected a chain metric of shape {self.weights.shape} but got {self.chain.shape}"
            if not os.path.exists(self.get_save_path(self.hash_hexdigest)):
                os.makedirs(cache_dir, exist_ok=True)
                self.save()

    @property
    def hash_hexdigest(self):
        digest = hashlib.sha256(self.weights.tobytes())
        digest.update(f"@{self.weights.shape}".encode("utf-8"))
        return digest.hexdigest()

    @staticmethod
    def get_save_path(hash: str):
        return str(QhkitPaths.cache() / "metrics" / f"{hash}.npz")

    def save(self):
        assert self.chain is not None
        return np.savez_compressed(self.get_save_path(self.hash_hexdigest), chain=self.chain)

    def load(self):
        path = self.get_save_path(self.hash_hexdigest)
        if not os.path.isfile(path):
            raise FileNotFoundError(f"no cached chain metric at {path}")
        with np.load(path) as data:
            self.chain = data["chain"]
