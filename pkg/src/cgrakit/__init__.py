"""Architecture-adaptive CGRA toolchain: ADL elaboration, modulo mapping,
cycle-accurate simulation and end-to-end validation."""

__version__ = "0.1.0"
