"""
JSON files for domains, spaces, configs and reports; paths ending in `.zst` are
zstandard compressed. Keys are sorted so equal content gives equal bytes.
"""

import json
import os
from pathlib import Path
from typing import Any

import numpy as np
import zstandard

from ..utils import to_jsonable


def dumps(data: Any) -> str:
    return json.dumps(to_jsonable(data), sort_keys=True, indent=1)


def read_json(path: str | Path) -> Any:
    """Raises FileNotFoundError for a missing file and ValueError for malformed content."""
    path = Path(path)
    with open(path, mode="rb") as f:
        raw = f.read()
    if path.suffix == ".zst":
        try:
            raw = zstandard.decompress(raw)
        except zstandard.ZstdError as e:
            raise ValueError(f"not a zstandard file: {e}")
    try:
        return json.loads(raw.decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ValueError(str(e))


def write_json(path: str | Path, data: Any):
    path = Path(path)
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)
    encoded = (dumps(data) + "\n").encode("utf-8")
    if path.suffix == ".zst":
        encoded = zstandard.compress(encoded)
    with open(path, mode="wb") as f:
        f.write(encoded)


def save_matrix(path: str | Path, matrix: np.ndarray, labels: np.ndarray | None = None) -> str:
    """Stores a distance matrix as `.npz`, returning the file name to reference from JSON."""
    path = Path(path).with_suffix(".npz")
    if labels is None:
        np.savez_compressed(path, matrix=matrix)
    else:
        np.savez_compressed(path, matrix=matrix, labels=labels)
    return str(path)


def load_matrix(path: str | Path) -> np.ndarray:
    with np.load(Path(path)) as data:
        return data["matrix"]


def load_domain(path: str | Path):
    from ..spaces import DomainSpace

    return DomainSpace.from_dict(read_json(path))


def save_domain(path: str | Path, dom) -> None:
    write_json(path, dom.to_dict())


def load_space(path: str | Path):
    """
    A finite metric space from a space file, a domain file (its ambient space), a
    bare JSON matrix or an `.npz` matrix.
    """
    from ..spaces import FiniteMetricSpace

    path = Path(path)
    name = path.stem
    if path.suffix == ".npz":
        return FiniteMetricSpace.from_matrix(load_matrix(path), name=name)
    data = read_json(path)
    if isinstance(data, list):
        return FiniteMetricSpace.from_matrix(np.asarray(data, dtype=np.float64), name=name)
    space = FiniteMetricSpace.from_dict(data)
    return space if space.name else FiniteMetricSpace.from_dict(dict(data, name=name))
