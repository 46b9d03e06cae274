"""Shared pipeline helpers for the test-suite (memoised: mapping is the
expensive step and many tests look at the same runs)."""

from __future__ import annotations

from functools import lru_cache

from cgrakit.arch import elaborate, preset
from cgrakit.cli import prepare
from cgrakit.dfg.kernels import load_kernel
from cgrakit.layout import bank_depths
from cgrakit.mapper import MapperConfig, map_dfg
from cgrakit.oracle import gen_vectors
from cgrakit.sim import extract_bitstream

# criterion number -> one-line verdict, filled by the acceptance tests
ACCEPTANCE: dict[int, str] = {}


@lru_cache(maxsize=None)
def spec_of(name: str):
    return preset(name)


@lru_cache(maxsize=None)
def rg_of(name: str):
    return elaborate(spec_of(name))


@lru_cache(maxsize=None)
def prepared(kernel: str, preset_name: str, iterations: int = 16):
    return prepare(load_kernel(kernel), spec_of(preset_name), iterations)


@lru_cache(maxsize=None)
def mapped(kernel: str, preset_name: str, seed: int = 0, iterations: int = 16, hop_limit=None):
    dfg, _ = prepared(kernel, preset_name, iterations)
    return map_dfg(dfg, spec_of(preset_name), MapperConfig(seed=seed, hop_limit=hop_limit))


@lru_cache(maxsize=None)
def pipeline(kernel: str, preset_name: str, seed: int = 0, iterations: int = 16):
    """(dfg, layout, mapping, bitstream, bundle) for one run."""
    spec = spec_of(preset_name)
    dfg, layout = prepared(kernel, preset_name, iterations)
    m = mapped(kernel, preset_name, seed, iterations)
    bs = extract_bitstream(m, spec)
    bundle = gen_vectors(m.dfg, layout, seed, iterations, word_width=spec.word_width,
                         depths=bank_depths(spec), preset=preset_name)
    return m.dfg, layout, m, bs, bundle


def random_dfg(rng, max_nodes: int = 12, name: str = "rand"):
    """A legal DFG drawn from ``rng`` (a ``random.Random``): ALU and memory
    nodes, forward data edges and recurrences of distance 1 to 3."""
    from cgrakit.dfg.model import ALU_OPS, dfg_from_dict

    n = rng.randint(1, max_nodes)
    ops = [rng.choice(ALU_OPS + ("LOAD",))]
    ops += [rng.choice(ALU_OPS + ("LOAD", "STORE")) for _ in range(n - 1)]
    nodes = [{"id": f"v{i}", "opcode": op, **({"variable": "x"} if op in ("LOAD", "STORE") else {})}
             for i, op in enumerate(ops)]
    sources = [i for i, op in enumerate(ops) if op != "STORE"]
    edges = []
    for j, op in enumerate(ops):
        if op == "LOAD":
            continue
        for slot in ("left",) if op == "STORE" else ("left", "right"):
            earlier = [i for i in sources if i < j]
            choice = rng.choice(("data", "rec") if op == "STORE" else ("none", "data", "rec"))
            if choice == "data" and not earlier:
                choice = "rec" if op == "STORE" else "none"
            if choice == "data":
                edges.append({"src": f"v{rng.choice(earlier)}", "dst": f"v{j}", "slot": slot})
            elif choice == "rec":
                edges.append({"src": f"v{rng.choice(sources)}", "dst": f"v{j}", "slot": slot,
                              "kind": "recurrence", "distance": rng.randint(1, 3)})
    return dfg_from_dict({"name": name, "nodes": nodes, "edges": edges, "arrays": ["x"]})
