"""Built-in architecture documents shipped as JSON package data."""

from __future__ import annotations

from importlib import resources

from cgrakit.arch.adl import ArchSpec, parse_arch
from cgrakit.errors import UnknownPreset

PRESET_NAMES = ("n2n_2x2", "hycube_2x2", "n2n_4x4", "hycube_4x4", "pace_8x8")


def preset_text(name: str) -> str:
    if name not in PRESET_NAMES:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    return resources.files("cgrakit.arch").joinpath("presets", f"{name}.json").read_text()


def preset(name: str) -> ArchSpec:
    return parse_arch(preset_text(name))


def load_arch(ref: str) -> ArchSpec:
    """Resolve ``preset:NAME`` or a filesystem path to an ArchSpec."""
    if ref.startswith("preset:"):
        return preset(ref.split(":", 1)[1])
    with open(ref) as fh:
        return parse_arch(fh.read())
