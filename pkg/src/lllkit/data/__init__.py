"""Small instances shipped with the package."""

from importlib import resources


def path(name: str):
    """Filesystem path of a shipped data file."""
    return resources.files(__name__).joinpath(name)


def read_text(name: str) -> str:
    return path(name).read_text()
