import numpy as np
import pytest
from numpy.testing import assert_allclose

from qhkit.spaces import FiniteMetricSpace
from qhkit.storage.files import load_domain, load_space, read_json, save_domain, save_matrix, write_json


def test_compressed_json(tmp_path):
    path = tmp_path / "report.json.zst"
    write_json(path, {"b": np.float64(1.5), "a": np.arange(3)})
    assert path.read_bytes()[:4] == b"\x28\xb5\x2f\xfd"
    assert read_json(path) == {"a": [0, 1, 2], "b": 1.5}


def test_equal_content_gives_equal_bytes(tmp_path):
    write_json(tmp_path / "a.json", {"x": 1, "y": [1, 2]})
    write_json(tmp_path / "b.json", {"y": [1, 2], "x": 1})
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_malformed_files(tmp_path):
    (tmp_path / "bad.json").write_text("[1, 2")
    (tmp_path / "bad.json.zst").write_bytes(b"not zstd at all")
    with pytest.raises(ValueError):
        read_json(tmp_path / "bad.json")
    with pytest.raises(ValueError):
        read_json(tmp_path / "bad.json.zst")
    with pytest.raises(FileNotFoundError):
        read_json(tmp_path / "missing.json")


def test_load_space_formats(tmp_path):
    matrix = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
    write_json(tmp_path / "list.json", matrix)
    stored = save_matrix(tmp_path / "stored", matrix)

    for space in (load_space(tmp_path / "list.json"), load_space(stored)):
        assert space.size == 3
        assert_allclose(space.distance_matrix, matrix)
    assert load_space(stored).name == "stored"

    cloud = FiniteMetricSpace.euclidean([[0.0, 0.0], [3.0, 4.0]], name="cloud")
    write_json(tmp_path / "cloud.json", cloud.to_dict())
    assert load_space(tmp_path / "cloud.json").distance(0, 1) == pytest.approx(5.0)


def test_domain_files(tmp_path, disk):
    save_domain(tmp_path / "disk.json.zst", disk)
    loaded = load_domain(tmp_path / "disk.json.zst")
    assert loaded.name == disk.name
    assert loaded.interior.tolist() == disk.interior.tolist()
    assert loaded.mesh_config == disk.mesh_config
    assert load_space(tmp_path / "disk.json.zst").size == disk.ambient.size
