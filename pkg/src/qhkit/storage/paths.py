import os
from pathlib import Path


class QhkitPaths:
    _root: Path | None = None

    # ---- configuration ----
    @classmethod
    def set_root(cls, root: str | Path) -> None:
        cls._root = Path(root)

    @classmethod
    def root(cls) -> Path:
        root = cls._root or Path(os.getenv("QHKIT_DIRECTORY", "~/.qhkit"))
        return root.expanduser()

    # ---- paths ----
    @classmethod
    def resources(cls) -> Path:
        return cls.root() / "resources"

    @classmethod
    def cache(cls) -> Path:
        return cls.root() / "cache"


def resolve_input(path: str | Path) -> Path:
    """Returns `path` if it exists, else the bundled resource of the same name."""
    path = Path(path).expanduser()
    if path.exists():
        return path
    copy_default_resources()
    return QhkitPaths.resources() / path.name


# if the QhkitPaths.resources() folder doesn't exist, we copy all our default resources in there on first use
import importlib.resources
import shutil

MODULE_PATH = importlib.resources.files(__package__ or "qhkit.storage")
RESOURCES_PATH = str(MODULE_PATH / "resources")


def copy_if_absent(src: str, dst: str, *, follow_symlinks: bool = True):
    if os.path.exists(dst):
        if os.path.isdir(dst):
            raise FileExistsError(f"directory exists with the same name as destination the file: {dst}")
        return
    shutil.copy2(src, dst, follow_symlinks=follow_symlinks)


def copy_default_resources():
    os.makedirs(QhkitPaths.resources(), exist_ok=True)
    shutil.copytree(RESOURCES_PATH, QhkitPaths.resources(), dirs_exist_ok=True, copy_function=copy_if_absent)
