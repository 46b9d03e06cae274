import random

import pytest

from cgrakit.dfg.interp import Interpreter, reference_execute
from cgrakit.dfg.kernels import ALL_KERNELS, load_kernel
from cgrakit.dfg.memory import MemoryImage
from cgrakit.dfg.model import (
    DATA, RECURRENCE, Dfg, compute_asap_alap, dfg_from_dict, parse_dfg, serialize_dfg,
)
from cgrakit.errors import BadDistance, CycleError, OutOfBoundsAccess, SchemaError
from cgrakit.layout import LayoutEntry, LayoutFile


def chain(n):
    nodes = [{"id": f"n{i}", "opcode": "ADD", "constant": 1} for i in range(n)]
    edges = [{"src": f"n{i}", "dst": f"n{i + 1}"} for i in range(n - 1)]
    return dfg_from_dict({"name": "chain", "nodes": nodes, "edges": edges})


def vecadd_doc():
    return {"name": "va", "live_in": ["a", "b"], "live_out": ["c"], "nodes": [
        {"id": "la", "opcode": "LOAD", "variable": "a"},
        {"id": "lb", "opcode": "LOAD", "variable": "b"},
        {"id": "s", "opcode": "ADD"},
        {"id": "st", "opcode": "STORE", "variable": "c"}],
        "edges": [{"src": "la", "dst": "s"}, {"src": "lb", "dst": "s", "slot": "right"},
                  {"src": "s", "dst": "st"}]}


def test_add_chain_parses_with_data_edges():
    d = chain(4)
    assert len(d.edges) == 3 and all(e.kind == DATA for e in d.edges)


def test_accumulate_kernel_has_distance_one_recurrence():
    d = load_kernel("accumulate")
    rec = [e for e in d.edges if e.kind == RECURRENCE]
    assert rec and all(e.distance == 1 for e in rec)


def test_bad_distance_and_cycles_rejected():
    doc = {"name": "x", "nodes": [{"id": "a", "opcode": "ADD"}],
           "edges": [{"src": "a", "dst": "a", "kind": "recurrence", "distance": 0}]}
    with pytest.raises(BadDistance):
        dfg_from_dict(doc)
    doc = {"name": "x", "nodes": [{"id": "a", "opcode": "ADD"}, {"id": "b", "opcode": "ADD"}],
           "edges": [{"src": "a", "dst": "b"}, {"src": "b", "dst": "a", "slot": "right"}]}
    with pytest.raises(CycleError):
        dfg_from_dict(doc)


@pytest.mark.parametrize("doc", [
    {"name": "x", "nodes": [{"id": "a", "opcode": "FOO"}], "edges": []},
    {"name": "x", "nodes": [{"id": "a", "opcode": "LOAD"}], "edges": []},
    {"name": "x", "nodes": [{"id": "a", "opcode": "ADD"}], "edges": [{"src": "a", "dst": "q"}]},
    {"name": "x", "nodes": [{"id": "a", "opcode": "ADD"}, {"id": "a", "opcode": "ADD"}], "edges": []},
    {"name": "x", "nodes": [], "edges": [], "extra": 1},
])
def test_schema_errors(doc):
    with pytest.raises(SchemaError):
        dfg_from_dict(doc)


@pytest.mark.parametrize("name", ALL_KERNELS)
def test_kernel_round_trip(name):
    d = load_kernel(name)
    text = serialize_dfg(d)
    assert serialize_dfg(parse_dfg(text)) == text


def test_asap_alap_chain_and_diamond():
    d = compute_asap_alap(chain(3))
    assert [(n.asap, n.alap) for n in d.nodes] == [(0, 0), (1, 1), (2, 2)]
    doc = {"name": "dia", "nodes": [{"id": k, "opcode": "ADD"} for k in "abcd"],
           "edges": [{"src": "a", "dst": "b"}, {"src": "a", "dst": "c"},
                     {"src": "b", "dst": "d"}, {"src": "c", "dst": "d", "slot": "right"}]}
    d = compute_asap_alap(dfg_from_dict(doc))
    by = {n.id: (n.asap, n.alap) for n in d.nodes}
    assert by["b"] == (1, 1) and by["c"] == (1, 1)


def test_asap_alap_short_path_has_slack():
    # a -> b -> c -> d (long) and a -> e -> d (short): e can slide by one
    doc = {"name": "fan", "nodes": [{"id": k, "opcode": "ADD"} for k in "abcde"],
           "edges": [{"src": "a", "dst": "b"}, {"src": "b", "dst": "c"}, {"src": "c", "dst": "d"},
                     {"src": "a", "dst": "e"}, {"src": "e", "dst": "d", "slot": "right"}]}
    by = {n.id: (n.asap, n.alap) for n in compute_asap_alap(dfg_from_dict(doc)).nodes}
    assert by == {"a": (0, 0), "b": (1, 1), "c": (2, 2), "d": (3, 3), "e": (1, 2)}


def _mem(words_per_bank, banks=2):
    return MemoryImage(32, [[0] * words_per_bank for _ in range(banks)])


def test_vecadd_reference():
    d = dfg_from_dict(vecadd_doc())
    lay = LayoutFile([LayoutEntry("a", 0, 0, 8), LayoutEntry("b", 1, 0, 8),
                      LayoutEntry("c", 0, 8, 8)])
    mem = _mem(16)
    mem.banks[0][:8] = range(1, 9)
    mem.banks[1][:8] = range(1, 9)
    out = reference_execute(d, mem, lay, 8)
    assert out.banks[0][8:16] == [2 * i for i in range(1, 9)]
    assert mem.banks[0][8:16] == [0] * 8      # input untouched


def test_predicated_select_reference():
    doc = {"name": "ps", "live_in": ["a"], "live_out": ["c"], "nodes": [
        {"id": "la", "opcode": "LOAD", "variable": "a"},
        {"id": "gt", "opcode": "CMP", "constant": 0},
        {"id": "z", "opcode": "AND", "constant": 0},
        {"id": "sel", "opcode": "SELECT"},
        {"id": "st", "opcode": "STORE", "variable": "c"}],
        "edges": [{"src": "la", "dst": "gt", "slot": "right"},
                  {"src": "la", "dst": "sel"}, {"src": "z", "dst": "sel", "slot": "right"},
                  {"src": "gt", "dst": "sel", "kind": "predicate"},
                  {"src": "sel", "dst": "st"}]}
    d = dfg_from_dict(doc)
    lay = LayoutFile([LayoutEntry("a", 0, 0, 4), LayoutEntry("c", 0, 4, 4)])
    mem = _mem(8, 1)
    mem.banks[0][:4] = [(-1) & 0xFFFFFFFF, 2, (-3) & 0xFFFFFFFF, 4]
    assert reference_execute(d, mem, lay, 4).banks[0][4:] == [0, 2, 0, 4]


def test_accumulator_reference():
    doc = {"name": "acc", "live_in": ["a"], "live_out": ["s"], "nodes": [
        {"id": "la", "opcode": "LOAD", "variable": "a"},
        {"id": "add", "opcode": "ADD"},
        {"id": "st", "opcode": "STORE", "variable": "s", "stride": 0}],
        "edges": [{"src": "la", "dst": "add"},
                  {"src": "add", "dst": "add", "kind": "recurrence", "slot": "right",
                   "distance": 1, "init": 0},
                  {"src": "add", "dst": "st"}]}
    d = dfg_from_dict(doc)
    lay = LayoutFile([LayoutEntry("a", 0, 0, 4), LayoutEntry("s", 0, 4, 1)])
    mem = _mem(5, 1)
    mem.banks[0][:4] = [1, 2, 3, 4]
    assert reference_execute(d, mem, lay, 4).banks[0][4] == 10


def test_word_arithmetic_wraps():
    d = dfg_from_dict(vecadd_doc())
    lay = LayoutFile([LayoutEntry("a", 0, 0, 1), LayoutEntry("b", 1, 0, 1),
                      LayoutEntry("c", 0, 1, 1)])
    mem = _mem(2)
    mem.banks[0][0] = 0xFFFFFFFF
    mem.banks[1][0] = 2
    assert reference_execute(d, mem, lay, 1).banks[0][1] == 1


def test_out_of_bounds_access():
    d = dfg_from_dict(vecadd_doc())
    lay = LayoutFile([LayoutEntry("a", 0, 0, 1), LayoutEntry("b", 1, 0, 1),
                      LayoutEntry("c", 0, 1, 1)])
    with pytest.raises(OutOfBoundsAccess):
        reference_execute(d, _mem(2), lay, 3)


def _kernel_setup(name, n, seed=1):
    from cgrakit.layout import infer_sizes
    d = load_kernel(name)
    sizes = infer_sizes(d, n)
    entries, base = [], 0
    for v in d.variables:
        entries.append(LayoutEntry(v, 0, base, sizes[v]))
        base += sizes[v]
    rnd = random.Random(seed)
    mem = MemoryImage(32, [[rnd.randrange(1 << 32) for _ in range(base)]])
    return d, LayoutFile(entries), mem


@pytest.mark.parametrize("name", ["fir", "accumulate", "stencil_3pt", "poly"])
def test_composability(name):
    d, lay, mem = _kernel_setup(name, 10)
    whole = reference_execute(d, mem, lay, 10)
    part = mem.copy()
    it = Interpreter(d, lay, 32)
    it.run(part, 4)
    it.run(part, 6)
    assert part == whole


@pytest.mark.parametrize("name", ["fir", "stencil_3pt", "gemm_tile"])
def test_every_node_executes_n_times_without_predicates(name):
    d, lay, mem = _kernel_setup(name, 7)
    it = Interpreter(d, lay, 32)
    it.run(mem, 7)
    assert set(it.exec_count.values()) == {7}


def test_node_order_does_not_matter():
    d, lay, mem = _kernel_setup("fir", 8)
    shuffled = Dfg(d.name, list(reversed(d.nodes)), list(d.edges), d.live_in, d.live_out)
    assert reference_execute(shuffled, mem, lay, 8) == reference_execute(d, mem, lay, 8)


def test_zero_iterations_is_identity():
    d, lay, mem = _kernel_setup("vecadd", 4)
    assert reference_execute(d, mem, lay, 0) == mem


def test_memory_image_hex_round_trip(tmp_path):
    mem = MemoryImage(16, [[1, 0xFFFF, 3], [7]])
    paths = mem.save(tmp_path)
    assert MemoryImage.load(paths, 16) == mem
    assert mem.diff(MemoryImage(16, [[1, 2, 3], [7]])) == [(0, 1, 0xFFFF, 2)]
