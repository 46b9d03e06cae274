"""Regenerate the bundled DFG documents under src/cgrakit/dfg/kernels/."""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "cgrakit" / "dfg" / "kernels"


class K:
    def __init__(self, name, iterations, live_in, live_out):
        self.doc = {"name": name, "nodes": [], "edges": [], "live_in": live_in,
                    "live_out": live_out, "iterations": iterations}

    def node(self, nid, op, **kw):
        self.doc["nodes"].append({"id": nid, "opcode": op, **kw})
        return nid

    def edge(self, src, dst, slot="left", kind="data", **kw):
        self.doc["edges"].append({"src": src, "dst": dst, "kind": kind, "slot": slot, **kw})

    def op(self, nid, op, left=None, right=None, pred=None, **kw):
        self.node(nid, op, **kw)
        if left is not None:
            self.edge(left, nid, "left")
        if right is not None:
            self.edge(right, nid, "right")
        if pred is not None:
            self.edge(pred, nid, "predicate", "predicate")
        return nid


def vecadd():
    k = K("vecadd", 8, ["a", "b"], ["c", "d"])
    k.node("la", "LOAD", variable="a")
    k.node("lb", "LOAD", variable="b")
    k.op("add", "ADD", "la", "lb")
    k.op("sub", "SUB", "la", "lb")
    k.op("sc", "STORE", "add", variable="c")
    k.op("sd", "STORE", "sub", variable="d")
    return k


def accumulate():
    k = K("accumulate", 16, ["x"], ["acc"])
    k.node("lx", "LOAD", variable="x")
    k.op("sum", "ADD", "lx")
    k.edge("sum", "sum", "right", "recurrence", distance=1, init=0)
    k.op("st", "STORE", "sum", variable="acc", stride=0)
    return k


def predicated_select():
    k = K("predicated_select", 8, ["a"], ["c", "d"])
    k.node("la", "LOAD", variable="a")
    k.op("pos", "CMP", right="la", constant=0)          # 0 < a
    k.op("keep", "NOP", "la", pred="pos")
    k.op("zero", "AND", "la", constant=0)
    k.op("sel", "SELECT", "keep", "zero", pred="pos")
    k.op("sc", "STORE", "sel", variable="c")
    k.op("sd", "STORE", "la", pred="pos", variable="d")
    return k


def fir():
    k = K("fir", 12, ["x"], ["y"])
    taps = [3, 5, 7, 2]
    prods = []
    for t, c in enumerate(taps):
        k.node(f"lx{t}", "LOAD", variable="x", offset=t)
        prods.append(k.op(f"m{t}", "MUL", f"lx{t}", constant=c))
    k.op("s0", "ADD", prods[0], prods[1])
    k.op("s1", "ADD", prods[2], prods[3])
    k.op("s2", "ADD", "s0", "s1")
    k.op("st", "STORE", "s2", variable="y")
    return k


def gemm_tile():
    n = 8
    k = K("gemm_tile", n, ["a", "b"], ["c"])
    prods = []
    for r in range(4):
        k.node(f"la{r}", "LOAD", variable="a", offset=r, stride=0)
        k.node(f"lb{r}", "LOAD", variable="b", offset=r * n)
        prods.append(k.op(f"m{r}", "MUL", f"la{r}", f"lb{r}"))
    k.op("s0", "ADD", prods[0], prods[1])
    k.op("s1", "ADD", prods[2], prods[3])
    k.op("s2", "ADD", "s0", "s1")
    k.op("st", "STORE", "s2", variable="c")
    return k


def stencil_3pt():
    k = K("stencil_3pt", 12, ["x"], ["y"])
    for t in range(3):
        k.node(f"lx{t}", "LOAD", variable="x", offset=t)
    k.op("dbl", "SHL", "lx1", constant=1)
    k.op("s0", "ADD", "lx0", "dbl")
    k.op("s1", "ADD", "s0", "lx2")
    k.op("avg", "SHR", "s1", constant=2)
    k.op("st", "STORE", "avg", variable="y")
    return k


def fanout_fig():
    # one loaded value feeding four consumers, n1 -> {n2, n3, n5, n6};
    # n6 is a comparison that steers the final SELECT
    k = K("fanout_fig", 8, ["a"], ["c"])
    k.node("n1", "LOAD", variable="a")
    k.op("n2", "SHL", "n1", constant=1)
    k.op("n3", "ADD", "n1", constant=7)
    k.op("n5", "MUL", "n1", constant=3)
    k.op("n6", "CMP", "n1", constant=100)
    k.op("n4", "ADD", "n2", "n3")
    k.op("n7", "SELECT", "n4", "n5", pred="n6")
    k.op("n8", "STORE", "n7", variable="c")
    return k


def poly():
    # wide fanout of one input, reduced by a tree
    k = K("poly", 8, ["x"], ["y"])
    k.node("lx", "LOAD", variable="x")
    terms = [
        k.op("t0", "MUL", "lx", "lx"),
        k.op("t1", "MUL", "lx", constant=5),
        k.op("t2", "XOR", "lx", constant=0x55),
        k.op("t3", "SHL", "lx", constant=3),
        k.op("t4", "SUB", "lx", constant=9),
        k.op("t5", "AND", "lx", constant=0xF0),
    ]
    k.op("r0", "ADD", terms[0], terms[1])
    k.op("r1", "ADD", terms[2], terms[3])
    k.op("r2", "ADD", terms[4], terms[5])
    k.op("r3", "ADD", "r0", "r1")
    k.op("r4", "ADD", "r3", "r2")
    k.op("st", "STORE", "r4", variable="y")
    return k


def butterfly():
    # two inputs each fanned out to four consumers, fft-like
    k = K("butterfly", 8, ["x", "y"], ["u", "v"])
    k.node("lx", "LOAD", variable="x")
    k.node("ly", "LOAD", variable="y")
    k.op("a0", "ADD", "lx", "ly")
    k.op("a1", "SUB", "lx", "ly")
    k.op("b0", "MUL", "lx", constant=3)
    k.op("b1", "MUL", "ly", constant=5)
    k.op("c0", "XOR", "lx", "ly")
    k.op("c1", "SHL", "ly", constant=2)
    k.op("d0", "ADD", "a0", "b0")
    k.op("d1", "SUB", "a1", "b1")
    k.op("e0", "ADD", "d0", "c0")
    k.op("e1", "ADD", "d1", "c1")
    k.op("su", "STORE", "e0", variable="u")
    k.op("sv", "STORE", "e1", variable="v")
    return k


def bcast():
    # one input broadcast to seven consumers, then summed
    k = K("bcast", 8, ["x"], ["y"])
    k.node("lx", "LOAD", variable="x")
    ops = [("MUL", 3), ("MUL", 7), ("SHL", 1), ("SHR", 2), ("XOR", 0x3C), ("SUB", 11), ("AND", 0x7F)]
    terms = [k.op(f"t{i}", op, "lx", constant=c) for i, (op, c) in enumerate(ops)]
    k.op("r0", "ADD", terms[0], terms[1])
    k.op("r1", "ADD", terms[2], terms[3])
    k.op("r2", "ADD", terms[4], terms[5])
    k.op("r3", "ADD", "r0", "r1")
    k.op("r4", "ADD", "r2", terms[6])
    k.op("r5", "ADD", "r3", "r4")
    k.op("st", "STORE", "r5", variable="y")
    return k


def fft4():
    # two radix-2 stages over a pair of inputs
    k = K("fft4", 8, ["x", "y"], ["u", "v"])
    k.node("lx", "LOAD", variable="x")
    k.node("ly", "LOAD", variable="y")
    k.op("s0", "ADD", "lx", "ly")
    k.op("s1", "SUB", "lx", "ly")
    k.op("s2", "MUL", "lx", constant=3)
    k.op("s3", "MUL", "ly", constant=5)
    k.op("u0", "ADD", "s0", "s2")
    k.op("u1", "SUB", "s0", "s3")
    k.op("u2", "ADD", "s1", "s2")
    k.op("u3", "SUB", "s1", "s3")
    k.op("v0", "XOR", "u0", "u1")
    k.op("v1", "ADD", "u2", "u3")
    k.op("su", "STORE", "v0", variable="u")
    k.op("sv", "STORE", "v1", variable="v")
    return k


KERNELS = [vecadd, accumulate, predicated_select, fir, gemm_tile, stencil_3pt,
           fanout_fig, poly, butterfly, bcast, fft4]

if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    for fn in KERNELS:
        doc = fn().doc
        (OUT / f"{doc['name']}.json").write_text(json.dumps(doc, indent=1) + "\n")
        print("wrote", doc["name"], len(doc["nodes"]), "nodes")
