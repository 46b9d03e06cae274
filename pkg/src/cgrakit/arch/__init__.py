from cgrakit.arch.adl import (
    ArchSpec, Connection, Instance, ModuleDecl, Port, parse_arch, serialize_arch,
    spec_from_dict, spec_to_dict,
)
from cgrakit.arch.elaborate import (
    FU_SLOT, IN_PORT, LINK, MU_PORT, OUT_PORT, REG, FuInfo, Resource, RoutingGraph, elaborate,
)
from cgrakit.arch.presets import PRESET_NAMES, load_arch, preset

__all__ = [
    "ArchSpec", "Connection", "Instance", "ModuleDecl", "Port", "parse_arch", "serialize_arch",
    "spec_from_dict", "spec_to_dict", "FU_SLOT", "IN_PORT", "LINK", "MU_PORT", "OUT_PORT", "REG",
    "FuInfo", "Resource", "RoutingGraph", "elaborate", "PRESET_NAMES", "load_arch", "preset",
]
