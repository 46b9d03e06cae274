from cgrakit.dfg.interp import Interpreter, reference_execute
from cgrakit.dfg.kernels import KERNEL_NAMES, load_kernel
from cgrakit.dfg.memory import MemoryImage
from cgrakit.dfg.model import (
    DATA, PREDICATE, RECURRENCE, Dfg, DfgEdge, DfgNode, compute_asap_alap, dfg_from_dict,
    dfg_to_dict, parse_dfg, serialize_dfg, validate_dfg,
)

__all__ = [
    "Interpreter", "reference_execute", "KERNEL_NAMES", "load_kernel", "MemoryImage", "DATA",
    "PREDICATE", "RECURRENCE", "Dfg", "DfgEdge", "DfgNode", "compute_asap_alap", "dfg_from_dict",
    "dfg_to_dict", "parse_dfg", "serialize_dfg", "validate_dfg",
]
