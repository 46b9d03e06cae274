"""Bundled kernels shipped as JSON package data."""

from __future__ import annotations

from importlib import resources

from cgrakit.dfg.model import Dfg, parse_dfg

# the six application kernels used for validation
KERNEL_NAMES = ("vecadd", "accumulate", "predicated_select", "fir", "gemm_tile", "stencil_3pt")
# fanout-heavy kernels for the interconnect studies
FANOUT_KERNELS = ("fanout_fig", "poly", "butterfly", "bcast", "fft4")
ALL_KERNELS = KERNEL_NAMES + FANOUT_KERNELS


def load_kernel(name: str) -> Dfg:
    if name not in ALL_KERNELS:
        raise KeyError(f"unknown kernel {name!r}")
    text = resources.files("cgrakit.dfg").joinpath("kernels", f"{name}.json").read_text()
    return parse_dfg(text)


def load_dfg(ref: str) -> Dfg:
    """``kernel:NAME`` or a filesystem path."""
    if ref.startswith("kernel:"):
        return load_kernel(ref.split(":", 1)[1])
    with open(ref) as fh:
        return parse_dfg(fh.read())
