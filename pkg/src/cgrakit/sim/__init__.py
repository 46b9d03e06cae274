from cgrakit.sim.bitstream import AluOp, Bitstream, Instruction, PeConfig, extract_bitstream
from cgrakit.sim.energy import EnergyModel, EnergyReport, estimate_energy
from cgrakit.sim.simulator import SimStats, simulate, total_cycles

__all__ = ["AluOp", "Bitstream", "EnergyModel", "EnergyReport", "Instruction", "PeConfig",
           "SimStats", "estimate_energy", "extract_bitstream", "simulate", "total_cycles"]
