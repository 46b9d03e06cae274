import json
from dataclasses import replace
from importlib import resources

import jsonschema
import pytest

from cgrakit.arch.elaborate import LINK
from cgrakit.dfg.interp import reference_execute
from cgrakit.dfg.kernels import KERNEL_NAMES
from cgrakit.errors import ConfigOverflow, XbarConflict
from cgrakit.oracle import validate
from cgrakit.sim import (Bitstream, EnergyModel, estimate_energy, extract_bitstream, simulate,
                         total_cycles)
from cgrakit.sim.alu import execute
from cgrakit.sim.bitstream import _check_acyclic, idle_ranges

from support import mapped, pipeline, rg_of, spec_of

PRESETS = ("n2n_4x4", "hycube_4x4")


def _schema(name):
    return json.loads(resources.files("cgrakit.schemas").joinpath(f"{name}.schema.json").read_text())


# -- extraction ------------------------------------------------------------------

def test_vecadd_unused_pes_are_idle_forever():
    _, _, m, bs, _ = pipeline("vecadd", "hycube_4x4")
    assert m.ii == 1
    used = {m.placement[v][0].rsplit(".", 1)[0] for v in m.placement}
    unused = [pe for pe in bs.pes if pe not in used and all(s.empty for s in bs.pes[pe].slots)]
    assert unused
    for pe in unused:
        assert bs.pes[pe].idle_ranges == [(0, None)]


def test_instructions_per_pe_equal_ii_and_ranges_disjoint():
    for k in KERNEL_NAMES:
        _, _, m, bs, _ = pipeline(k, "n2n_4x4")
        for pe, cfg in bs.pes.items():
            assert len(cfg.slots) == m.ii
            ends = [(a, m.ii - 1 if b is None else b) for a, b in cfg.idle_ranges]
            covered = [s for a, b in ends for s in range(a, b + 1)]
            assert len(covered) == len(set(covered))
            assert all(cfg.slots[s].empty for s in covered)


def test_idle_ranges_runs():
    from cgrakit.sim import Instruction, AluOp
    busy = Instruction(ops={"x.fu": AluOp("ADD", "n")})
    free = Instruction()
    assert idle_ranges([free, free]) == [(0, None)]
    assert idle_ranges([busy, free, free, busy, free]) == [(1, 2), (4, 4)]
    assert idle_ranges([busy]) == []


def test_fanout_multicast_from_one_producer():
    _, _, m, bs, _ = pipeline("fanout_fig", "hycube_2x2")
    producer_fu, t = m.placement["n1"]
    out = f"{producer_fu}.out"
    pe = producer_fu.rsplit(".", 1)[0]
    slot = (t + m.latency["n1"]) % m.ii
    dirs = [r for r, src in bs.pes[pe].slots[slot].sel.items() if src == out]
    assert len(dirs) >= 2


def test_config_overflow_on_pace():
    m = mapped("vecadd", "pace_8x8")
    assert spec_of("pace_8x8").max_ii == 32
    with pytest.raises(ConfigOverflow):
        extract_bitstream(replace(m, ii=33), spec_of("pace_8x8"))


def test_extraction_is_reproducible():
    m = mapped("fir", "hycube_4x4")
    assert extract_bitstream(m, spec_of("hycube_4x4")).to_json() == \
        extract_bitstream(m, spec_of("hycube_4x4")).to_json()


def test_bitstream_json_round_trip_and_schema():
    _, _, _, bs, _ = pipeline("predicated_select", "hycube_4x4")
    doc = json.loads(bs.to_json())
    jsonschema.validate(doc, _schema("bitstream"))
    assert Bitstream.from_json(bs.to_json()).to_json() == bs.to_json()


def _ring_loop(bs):
    """Close a same-cycle select ring around the 2x2 fabric in slot 0."""
    bad = bs.copy()
    ring = {"pe_0_1.in_W": "pe_0_0.out_E", "pe_0_1.out_S": "pe_0_1.in_W",
            "pe_1_1.in_N": "pe_0_1.out_S", "pe_1_1.out_W": "pe_1_1.in_N",
            "pe_1_0.in_E": "pe_1_1.out_W", "pe_1_0.out_N": "pe_1_0.in_E",
            "pe_0_0.in_S": "pe_1_0.out_N", "pe_0_0.out_E": "pe_0_0.in_S"}
    rg = rg_of("hycube_2x2")
    for dst, src in ring.items():
        assert rg.index[src] in rg.pred[rg.index[dst]]
        bad.pes[dst.split(".")[0]].slots[0].sel[dst] = src
    return bad


def test_select_loop_is_rejected():
    _, layout, _, bs, bundle = pipeline("fanout_fig", "hycube_2x2")
    bad = _ring_loop(bs)
    assert bad.pes["pe_0_1"].slots[0].sel["pe_0_1.fu.b"] == "pe_0_1.in_W"
    with pytest.raises(XbarConflict):
        _check_acyclic(bad.pes, bad.ii)
    with pytest.raises(XbarConflict):
        simulate(rg_of("hycube_2x2"), bad, layout, bundle.mem_in, bundle.iterations)
    assert validate(rg_of("hycube_2x2"), bad, layout, bundle).verdict == "FAIL"


# -- execution -------------------------------------------------------------------

@pytest.mark.parametrize("preset", PRESETS + ("pace_8x8",))
@pytest.mark.parametrize("kernel", KERNEL_NAMES)
def test_simulation_matches_reference(kernel, preset):
    dfg, layout, _, bs, bundle = pipeline(kernel, preset)
    got, _ = simulate(rg_of(preset), bs, layout, bundle.mem_in, bundle.iterations)
    assert got.diff(reference_execute(dfg, bundle.mem_in, layout, bundle.iterations)) == []


def test_accumulate_cycle_count_formula():
    dfg, layout, m, bs, bundle = pipeline("accumulate", "hycube_4x4", 0, 100)
    assert m.ii == m.mii.rec_mii
    fill = max(t + m.latency[v] for v, (_, t) in m.placement.items())
    assert bs.schedule_length == fill
    _, stats = simulate(rg_of("hycube_4x4"), bs, layout, bundle.mem_in, 100)
    assert stats.cycles == fill + 100 * m.ii == total_cycles(bs, 100)


@pytest.mark.parametrize("preset", PRESETS)
@pytest.mark.parametrize("kernel", KERNEL_NAMES)
def test_gating_preserves_output_and_saves_cm_reads(kernel, preset):
    _, layout, m, _, bundle = pipeline(kernel, preset)
    rg = rg_of(preset)
    gated = extract_bitstream(m, rg, gating=True)
    plain = extract_bitstream(m, rg, gating=False)
    out_g, st_g = simulate(rg, gated, layout, bundle.mem_in, bundle.iterations, gating=True)
    out_p, st_p = simulate(rg, plain, layout, bundle.mem_in, bundle.iterations, gating=False)
    assert out_g.diff(out_p) == []
    for st in (st_g, st_p):
        assert st.active_cycles + st.gated_cycles == st.total_pe_cycles
        assert st.cm_reads <= st.total_pe_cycles
    assert st_p.gated_cycles == 0
    if any(cfg.idle_ranges for cfg in gated.pes.values()):
        assert st_g.cm_reads < st_p.cm_reads
    else:
        assert st_g.cm_reads == st_p.cm_reads


def test_multi_hop_value_consumed_in_production_cycle():
    """Probe: a result crosses several links and is used in the same cycle."""
    dfg, layout, m, bs, bundle = pipeline("fanout_fig", "hycube_4x4")
    rg = rg_of("hycube_4x4")
    chains = []
    for key, path in m.routes.items():
        t0 = path[0][1]
        links = [r for r, t in path if rg.resources[rg.index[r]].kind == LINK and t == t0]
        if path[-1][1] == t0 and len(links) >= 2:
            chains.append((key, len(links)))
    assert chains
    key, hops = max(chains, key=lambda c: c[1])
    assert 2 <= hops <= spec_of("hycube_4x4").hop_limit
    src, rest = key.split("->")
    dst = rest.split(":")[0]
    trace = []
    simulate(rg, bs, layout, bundle.mem_in, 1, trace=trace)
    issue = {line.split()[2]: int(line.split()[0]) for line in trace if "it=0" in line}
    assert issue[dst] == issue[src] + m.latency[src]
    assert validate(rg, bs, layout, bundle).passed


def test_trace_line_format():
    dfg, layout, _, bs, bundle = pipeline("vecadd", "hycube_4x4")
    trace = []
    simulate(rg_of("hycube_4x4"), bs, layout, bundle.mem_in, 2, trace=trace)
    ops = [t for t in trace if " store " not in t]
    stores = [t for t in trace if " store " in t]
    assert len(stores) == 2 * sum(n.opcode == "STORE" for n in dfg.nodes)
    cyc, pe, node, opcode, it, out = ops[0].split()
    assert cyc.isdigit() and pe.startswith("pe_") and it.startswith("it=") and out.startswith("out=")
    assert stores[0].split()[2].startswith("bank=")


def test_alu_basics():
    assert execute("ADD", 0xFFFFFFFF, 1, 32) == 0
    assert execute("SUB", 0, 1, 32) == 0xFFFFFFFF
    assert execute("SHL", 1, 33, 32) == 2
    assert execute("CMP", 0xFFFFFFFF, 0, 32) == 1     # signed: -1 < 0
    assert execute("CMP", 1, 0xFFFFFFFF, 32) == 0


# -- energy ----------------------------------------------------------------------

def _stats(kernel="fir", preset="hycube_4x4"):
    _, layout, _, bs, bundle = pipeline(kernel, preset)
    return simulate(rg_of(preset), bs, layout, bundle.mem_in, bundle.iterations)[1]


def test_zero_cost_model_gives_zero():
    zero = EnergyModel(0, 0, 0, 0, 0, 0)
    assert estimate_energy(_stats(), zero).total == 0


def test_doubling_cm_cost_doubles_cm_exactly():
    st = _stats()
    base = estimate_energy(st)
    dbl = estimate_energy(st, replace(EnergyModel(), cm_read=2 * EnergyModel().cm_read))
    assert dbl.breakdown["cm"] == 2 * base.breakdown["cm"]
    assert {k: v for k, v in dbl.breakdown.items() if k != "cm"} == \
        {k: v for k, v in base.breakdown.items() if k != "cm"}


def test_percentages_sum_to_100():
    assert sum(estimate_energy(_stats()).percent.values()) == pytest.approx(100.0)


@pytest.mark.parametrize("preset", PRESETS)
@pytest.mark.parametrize("kernel", ("fir", "gemm_tile", "stencil_3pt"))
def test_cm_is_largest_on_dense_kernels(kernel, preset):
    assert estimate_energy(_stats(kernel, preset)).largest == "cm"


def test_energy_model_rejects_unknown_cost():
    with pytest.raises(ValueError):
        EnergyModel.from_dict({"controller": 1})
