"""Plain-text manifests: flat ``key = value`` lines grouped into sections.

The format is deliberately diff-friendly (INI); every experiment artifact
records enough of its configuration to be re-run from the manifest alone.
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .errors import IngestionError


def write_manifest(path, sections: dict[str, dict]) -> None:
    """Write ``sections`` as an INI file. Values are stringified as-is."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep key case
    for name, entries in sections.items():
        parser[name] = {k: str(v) for k, v in entries.items()}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        parser.write(fh)


def read_manifest(path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    read = parser.read(str(path))
    if not read:
        raise IngestionError(f"manifest not found or unreadable: {path}")
    return {name: dict(parser[name]) for name in parser.sections()}
