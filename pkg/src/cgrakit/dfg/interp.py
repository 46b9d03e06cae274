"""Reference interpreter: sequential, iteration-by-iteration execution of a
DFG.  It is the functional oracle the cycle-accurate simulator is checked
against, so it deliberately shares no code with the mapper or simulator."""

from __future__ import annotations

from collections import deque

from cgrakit.dfg.memory import MemoryImage
from cgrakit.dfg.model import LEFT, PRED, RECURRENCE, RIGHT, Dfg
from cgrakit.errors import MissingVariable

# a value is (word, valid)
INVALID = (0, False)


def to_signed(word: int, width: int) -> int:
    return word - (1 << width) if word >> (width - 1) else word


def alu(opcode: str, a: int, b: int, width: int) -> int:
    mask = (1 << width) - 1
    if opcode == "ADD":
        r = a + b
    elif opcode == "SUB":
        r = a - b
    elif opcode == "MUL":
        r = a * b
    elif opcode == "AND":
        r = a & b
    elif opcode == "OR":
        r = a | b
    elif opcode == "XOR":
        r = a ^ b
    elif opcode == "SHL":
        r = a << (b % width)
    elif opcode == "SHR":
        r = a >> (b % width)
    elif opcode == "CMP":
        r = int(to_signed(a, width) < to_signed(b, width))
    elif opcode == "NOP":
        r = a
    else:
        raise ValueError(f"not an ALU opcode: {opcode}")
    return r & mask


def evaluate(opcode: str, left, right, pred, width: int):
    """Apply predication and validity rules; returns the output value.

    Memory opcodes are handled by the caller; for them this only decides
    whether the access happens (valid output) or is suppressed.
    """
    if opcode == "SELECT":
        if not pred[1]:
            return INVALID
        first, second = (left, right) if pred[0] else (right, left)
        return first if first[1] else second
    if pred is not None and not (pred[1] and pred[0]):
        return INVALID
    if opcode == "LOAD":
        return (0, True)
    if not (left[1] and right[1]):
        return INVALID
    if opcode == "STORE":
        return left
    return (alu(opcode, left[0], right[0], width), True)


class Interpreter:
    """Stateful interpreter; successive ``run`` calls continue the loop."""

    def __init__(self, dfg: Dfg, layout, word_width: int):
        self.dfg = dfg
        self.layout = layout
        self.width = word_width
        self.order = dfg.topo_order()
        self.iteration = 0
        depth = max((e.distance for e in dfg.edges if e.kind == RECURRENCE), default=0)
        self.history = {n.id: deque(maxlen=max(depth, 1)) for n in dfg.nodes}
        self.exec_count = {n.id: 0 for n in dfg.nodes}
        for n in dfg.nodes:
            if n.is_memory and layout.get(n.variable) is None:
                raise MissingVariable(f"variable {n.variable!r} has no layout entry")
        self._ops = {}
        for n in dfg.nodes:
            self._ops[n.id] = {s: dfg.operand(n.id, s) for s in (LEFT, RIGHT, PRED)}

    def _operand(self, nid, slot, values):
        e = self._ops[nid][slot]
        node = self.dfg.node(nid)
        if e is None:
            if slot == PRED:
                return None
            return ((node.constant or 0) & ((1 << self.width) - 1), True)
        if e.kind == RECURRENCE:
            if self.iteration - e.distance < 0:
                return (e.init & ((1 << self.width) - 1), True)
            return self.history[e.src][-e.distance]
        return values[e.src]

    def step(self, mem: MemoryImage) -> None:
        values = {}
        for nid in self.order:
            node = self.dfg.node(nid)
            left = self._operand(nid, LEFT, values)
            right = self._operand(nid, RIGHT, values)
            pred = self._operand(nid, PRED, values)
            out = evaluate(node.opcode, left, right, pred, self.width)
            if node.is_memory and out[1]:
                entry = self.layout.get(node.variable)
                addr = entry.base + node.offset + node.stride * self.iteration
                if node.opcode == "LOAD":
                    out = (mem.read(entry.bank, addr), True)
                else:
                    mem.write(entry.bank, addr, out[0])
            if out[1]:
                self.exec_count[nid] += 1
            values[nid] = out
        for nid, v in values.items():
            self.history[nid].append(v)
        self.iteration += 1

    def run(self, mem: MemoryImage, iterations: int) -> MemoryImage:
        for _ in range(iterations):
            self.step(mem)
        return mem


def reference_execute(dfg: Dfg, mem: MemoryImage, layout, iterations: int) -> MemoryImage:
    """Run ``iterations`` loop iterations on a copy of ``mem``."""
    out = mem.copy()
    Interpreter(dfg, layout, mem.word_width).run(out, iterations)
    return out
