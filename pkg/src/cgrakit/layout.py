"""Scratchpad data layout: bank/base assignment and address embedding."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from cgrakit.arch.adl import ArchSpec
from cgrakit.dfg.model import Dfg
from cgrakit.errors import BankOverflow, MissingVariable, SchemaError


@dataclass(frozen=True)
class LayoutEntry:
    var: str
    bank: int
    base: int
    len: int


@dataclass
class LayoutFile:
    entries: list[LayoutEntry]

    def get(self, var: str) -> LayoutEntry | None:
        for e in self.entries:
            if e.var == var:
                return e
        return None

    def check(self, depths: list[int]) -> None:
        """Entries fit their bank and never overlap."""
        for e in self.entries:
            if not 0 <= e.bank < len(depths):
                raise SchemaError(f"{e.var}: bank {e.bank} does not exist")
            if e.base < 0 or e.len < 1 or e.base + e.len > depths[e.bank]:
                raise BankOverflow(f"{e.var} does not fit bank {e.bank}")
        by_bank: dict[int, list[LayoutEntry]] = {}
        for e in self.entries:
            by_bank.setdefault(e.bank, []).append(e)
        for bank, es in by_bank.items():
            es = sorted(es, key=lambda e: e.base)
            for a, b in zip(es, es[1:]):
                if a.base + a.len > b.base:
                    raise SchemaError(f"{a.var} and {b.var} overlap in bank {bank}")

    def to_json(self) -> str:
        rows = [{"var": e.var, "bank": e.bank, "base": e.base, "len": e.len} for e in self.entries]
        return json.dumps(rows, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> LayoutFile:
        rows = json.loads(text)
        try:
            return cls([LayoutEntry(r["var"], r["bank"], r["base"], r["len"]) for r in rows])
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"bad layout entry: {exc}") from exc


def bank_depths(spec: ArchSpec) -> list[int]:
    """Depth of every bank, in global bank order (MU instances in document
    order, banks within an MU in index order)."""
    depths = []

    def walk(mod_name):
        mod = spec.module(mod_name)
        if mod.kind == "MU":
            depths.extend([mod.depth] * mod.banks)
        elif mod.kind == "Composite":
            for inst in mod.instances:
                walk(inst.module)

    for inst in spec.instances:
        walk(inst.module)
    return depths


def infer_sizes(dfg: Dfg, iterations: int) -> dict[str, int]:
    """Smallest length per variable that keeps every access in range."""
    sizes: dict[str, int] = {}
    for n in dfg.nodes:
        if n.variable is None:
            continue
        hi = n.offset + n.stride * max(iterations - 1, 0)
        sizes[n.variable] = max(sizes.get(n.variable, 1), n.offset + 1, hi + 1)
    return sizes


def assign_layout(dfg: Dfg, spec: ArchSpec, sizes: dict[str, int]) -> LayoutFile:
    """Round-robin bank assignment keyed on first use in the node list.

    Arrays are placed first, then single-word scalars continue the same
    round-robin pointer and pack after the arrays of their bank.  A variable
    that does not fit its turn's bank probes the following banks.
    """
    depths = bank_depths(spec)
    if not depths:
        raise BankOverflow("architecture has no memory banks")
    order = dfg.variables
    for v in order:
        if v not in sizes:
            raise MissingVariable(f"no size given for variable {v!r}")
    arrays = [v for v in order if sizes[v] > 1]
    scalars = [v for v in order if sizes[v] == 1]
    used = [0] * len(depths)
    entries = []
    rr = 0
    for v in arrays + scalars:
        n = sizes[v]
        for probe in range(len(depths)):
            b = (rr + probe) % len(depths)
            if used[b] + n <= depths[b]:
                entries.append(LayoutEntry(v, b, used[b], n))
                used[b] += n
                rr = b + 1
                break
        else:
            raise BankOverflow(f"variable {v!r} ({n} words) does not fit any bank")
    return LayoutFile(entries)


def embed_addresses(dfg: Dfg, layout: LayoutFile) -> Dfg:
    """Copy each memory node's base address into its constant and record
    its bank."""
    nodes = []
    for n in dfg.nodes:
        if n.is_memory:
            e = layout.get(n.variable)
            if e is None:
                raise MissingVariable(f"variable {n.variable!r} absent from layout")
            n = replace(n, constant=e.base, bank=e.bank)
        nodes.append(n)
    return dfg.replace_nodes(nodes)
