import numpy as np
import pytest

from qhkit.config import SamplingConfig
from qhkit.generators import gen_arc_example, gen_disk, gen_halfline
from qhkit.storage.paths import QhkitPaths


# small enough that exhaustive pair sampling stays fast
FAST_SAMPLING = SamplingConfig(seed=17, exhaustive_limit=60, n_pairs=400, boundary_layer=8)


@pytest.fixture(scope="session")
def disk():
    return gen_disk(0.1)


@pytest.fixture(scope="session")
def halfline():
    return gen_halfline(1.01)


@pytest.fixture(scope="session")
def small_arc():
    return gen_arc_example(0.4, n=200)


@pytest.fixture
def line_points():
    return np.array([[0.0], [1.0], [4.0]])


@pytest.fixture(autouse=True)
def qhkit_root(tmp_path, monkeypatch):
    """Keeps caches and copied resources out of the home directory."""
    monkeypatch.setattr(QhkitPaths, "_root", tmp_path / "qhkit")
    return tmp_path / "qhkit"
