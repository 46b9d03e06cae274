"""Property tests over randomly generated graphs and words."""

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from cgrakit.cli import prepare
from cgrakit.dfg.interp import alu as ref_alu
from cgrakit.dfg.memory import MemoryImage
from cgrakit.dfg.model import ALU_OPS, dfg_from_dict
from cgrakit.layout import bank_depths
from cgrakit.mapper import MapperConfig, compute_mii, map_dfg
from cgrakit.mapper.check import check_mapping
from cgrakit.oracle import SplitMix64, gen_vectors, validate
from cgrakit.sim import extract_bitstream
from cgrakit.sim.alu import execute

from oracles import brute_mii
from support import random_dfg, rg_of, spec_of

SLOW = settings(max_examples=30, deadline=None,
                suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])


@st.composite
def random_dfgs(draw, max_nodes=12):
    """Legal DFGs built by ``random_dfg`` from a hypothesis-chosen seed."""
    return random_dfg(draw(st.randoms(use_true_random=False)), max_nodes)


@settings(max_examples=200, deadline=None)
@given(random_dfgs(), st.sampled_from(("n2n_2x2", "hycube_4x4", "pace_8x8")))
def test_mii_matches_brute_force(dfg, preset):
    rg = rg_of(preset)
    report = compute_mii(dfg, rg)
    assert (report.res_mii, report.rec_mii) == brute_mii(dfg, rg)


_WORD = st.integers(0, (1 << 32) - 1)


@given(st.sampled_from(ALU_OPS), _WORD, _WORD, st.sampled_from((8, 16, 32)))
def test_simulator_alu_agrees_with_reference(op, a, b, width):
    mask = (1 << width) - 1
    assert execute(op, a & mask, b & mask, width) == ref_alu(op, a & mask, b & mask, width)


@given(st.integers(0, (1 << 64) - 1), st.integers(1, 1 << 40))
def test_below_stays_in_range(seed, n):
    rng = SplitMix64(seed)
    for _ in range(5):
        assert 0 <= rng.below(n) < n


@given(st.lists(st.lists(_WORD, max_size=8), min_size=1, max_size=4))
def test_memory_hex_round_trip(tmp_path_factory, banks):
    d = tmp_path_factory.mktemp("mem")
    img = MemoryImage(32, banks)
    back = MemoryImage.load(img.save(d), 32)
    assert back.banks == banks


@st.composite
def pipelines(draw):
    """Small straight-line kernels: loads, a few ALU steps (optionally one
    accumulator), one store."""
    loads = draw(st.integers(1, 2))
    steps = draw(st.integers(1, 4))
    nodes = [{"id": f"l{i}", "opcode": "LOAD", "variable": "x", "offset": i} for i in range(loads)]
    edges = []
    values = [f"l{i}" for i in range(loads)]
    acc = draw(st.integers(-1, steps - 1))
    for k in range(steps):
        op = draw(st.sampled_from(("ADD", "SUB", "MUL", "AND", "OR", "XOR", "SHL", "SHR", "CMP")))
        v = f"a{k}"
        nodes.append({"id": v, "opcode": op, "constant": draw(st.integers(0, 40))})
        edges.append({"src": draw(st.sampled_from(values)), "dst": v, "slot": "left"})
        if k == acc:
            edges.append({"src": v, "dst": v, "slot": "right", "kind": "recurrence",
                          "distance": 1, "init": draw(st.integers(0, 9))})
        elif draw(st.booleans()):
            edges.append({"src": draw(st.sampled_from(values)), "dst": v, "slot": "right"})
        values.append(v)
    nodes.append({"id": "st", "opcode": "STORE", "variable": "y"})
    edges.append({"src": values[-1], "dst": "st", "slot": "left"})
    return dfg_from_dict({"name": "pipe", "nodes": nodes, "edges": edges,
                          "live_in": ["x"], "live_out": ["y"]})


@SLOW
@given(pipelines(), st.sampled_from(("hycube_4x4", "n2n_4x4")), st.integers(0, 3))
def test_random_kernels_map_and_simulate_exactly(raw, preset, seed):
    spec = spec_of(preset)
    dfg, layout = prepare(raw, spec, 6)
    m = map_dfg(dfg, spec, MapperConfig(seed=seed))
    assert check_mapping(m, m.dfg, rg_of(preset)) == []
    bundle = gen_vectors(m.dfg, layout, seed, 6, word_width=spec.word_width,
                         depths=bank_depths(spec))
    assert validate(rg_of(preset), extract_bitstream(m, spec), layout, bundle).passed
