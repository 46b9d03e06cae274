"""Seeded test vectors, end-to-end validation and fault injection.

Random words come from SplitMix64 (Steele, Lea and Flood's 64-bit mixer),
chosen because it is tiny, has no platform-dependent state and is easy to
re-implement bit-exactly in any language.

Dead fields
-----------
A corrupted field may legitimately leave the output unchanged.  Such a
corruption is accepted only when ``is_dead`` proves it: both bitstreams are
run in a shadow domain that carries, next to each concrete word, a
hash-consed term describing how the word was computed from the initial
memory.  The corruption is dead when every stored term and every control
decision (operand validity, predicate term and outcome) is identical; the
two configurations then agree on every input, not just on the test bundle.
The term builder applies only these identities, which are exactly the
dead-field classes on the whitelist:

* the constant of an operation that never reads it (both data operands
  wired, or NOP);
* shift-amount bits at or above log2(word width), since shifts use the
  amount modulo the width;
* the opcode of a route-through slot whose constant is 0, replaced by an
  opcode that is the identity for a zero right operand (ADD, SUB, OR, XOR,
  SHL, SHR);
* a crossbar or register-write select moved to another source that carries
  the same value at that cycle (for example the producer's result register
  still holding the routed value).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from cgrakit.arch.adl import ArchSpec
from cgrakit.arch.elaborate import RoutingGraph, elaborate
from cgrakit.dfg.interp import reference_execute
from cgrakit.dfg.memory import MemoryImage
from cgrakit.dfg.model import OPCODES, Dfg
from cgrakit.errors import CgraError, SchemaError
from cgrakit.sim.alu import execute
from cgrakit.sim.bitstream import Bitstream
from cgrakit.sim.simulator import Concrete, simulate

_M64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _M64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _M64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next()
            if x < limit:
                return x % n

    def choice(self, seq):
        return seq[self.below(len(seq))]


# -- test bundles -------------------------------------------------------------

@dataclass
class TestBundle:
    __test__ = False    # not a pytest class

    seed: int
    mem_in: MemoryImage
    expected: MemoryImage
    iterations: int
    kernel: str
    preset: str | None = None

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        ins = self.mem_in.save(directory, "mem_in_bank")
        exp = self.expected.save(directory, "expected_bank")
        meta = {"seed": self.seed, "iterations": self.iterations, "kernel": self.kernel,
                "preset": self.preset, "word_width": self.mem_in.word_width,
                "mem_in": [p.name for p in ins], "expected": [p.name for p in exp]}
        path = directory / "bundle.json"
        path.write_text(json.dumps(meta, indent=1) + "\n")
        return path

    @classmethod
    def load(cls, path: str | Path) -> TestBundle:
        path = Path(path)
        try:
            meta = json.loads(path.read_text())
            ww = meta["word_width"]
            mem_in = MemoryImage.load([path.parent / n for n in meta["mem_in"]], ww)
            expected = MemoryImage.load([path.parent / n for n in meta["expected"]], ww)
            return cls(meta["seed"], mem_in, expected, meta["iterations"], meta["kernel"],
                       meta.get("preset"))
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise SchemaError(f"{path}: malformed bundle: {exc}") from exc


def _layout_depths(layout) -> list[int]:
    depths: dict[int, int] = {}
    for e in layout.entries:
        depths[e.bank] = max(depths.get(e.bank, 0), e.base + e.len)
    return [depths.get(b, 0) for b in range(max(depths, default=-1) + 1)]


def gen_vectors(dfg: Dfg, layout, seed: int, iterations: int, *, word_width: int = 32,
                depths: list[int] | None = None, preset: str | None = None) -> TestBundle:
    """Fill every memory word from SplitMix64(seed), bank by bank in address
    order, and compute the expected image with the reference interpreter.

    ``depths`` defaults to the smallest banks covering the layout.
    """
    depths = _layout_depths(layout) if depths is None else list(depths)
    rng = SplitMix64(seed)
    mask = (1 << word_width) - 1
    mem = MemoryImage(word_width, [[rng.next() & mask for _ in range(d)] for d in depths])
    expected = reference_execute(dfg, mem, layout, iterations)
    return TestBundle(seed, mem, expected, iterations, dfg.name, preset)


# -- validation ---------------------------------------------------------------

@dataclass
class VerdictReport:
    verdict: str
    mismatches: list[tuple[int, int, int, int]] = field(default_factory=list)
    total_mismatches: int = 0
    cycles: int = 0
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "cycles": self.cycles,
                "total_mismatches": self.total_mismatches,
                "mismatches": [{"bank": b, "addr": a, "got": g, "want": w}
                               for b, a, g, w in self.mismatches],
                "error": self.error}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


def validate(arch: ArchSpec | RoutingGraph, bitstream: Bitstream, layout, bundle: TestBundle,
             limit: int = 10, gating: bool = True) -> VerdictReport:
    """PASS iff the simulated memory equals ``bundle.expected`` bit-exactly.

    A bitstream the simulator rejects (select loop, unknown source,
    unsupported opcode, out-of-range access) is a FAIL, not an exception.
    """
    try:
        got, stats = simulate(arch, bitstream, layout, bundle.mem_in, bundle.iterations,
                              gating=gating)
    except CgraError as exc:
        return VerdictReport("FAIL", error=f"{type(exc).__name__}: {exc}")
    diffs = got.diff(bundle.expected)
    return VerdictReport("PASS" if not diffs else "FAIL", diffs[:limit], len(diffs),
                         stats.cycles)


# -- shadow domain ------------------------------------------------------------

_ZERO_IDENTITY = ("ADD", "SUB", "OR", "XOR", "SHL", "SHR")


class Shadow(Concrete):
    """Concrete words paired with hash-consed provenance terms."""

    def __init__(self, width: int, mem: MemoryImage, terms: dict):
        super().__init__(width, mem)
        self.terms = terms
        self.rev = terms.setdefault(None, [])
        self.written: dict[tuple[int, int], int] = {}
        self.decisions: dict = {}
        self.undriven = ((0, self.intern(("x",))), False)

    def intern(self, term: tuple) -> int:
        tid = self.terms.get(term)
        if tid is None:
            tid = self.terms[term] = len(self.rev)
            self.rev.append(term)
        return tid

    def const(self, k: int):
        k &= self.mask
        return (k, self.intern(("k", k)))

    def alu(self, opcode: str, a, b):
        word = execute(opcode, a[0], b[0], self.width)
        bt = self.rev[b[1]]
        if opcode == "NOP":
            return (word, a[1])
        if opcode in ("SHL", "SHR") and bt[0] == "k":
            bt = ("k", bt[1] % self.width)
        if bt == ("k", 0) and opcode in _ZERO_IDENTITY:
            return (word, a[1])
        return (word, self.intern((opcode, a[1], self.intern(bt))))

    def truth(self, w) -> bool:
        return w[0] != 0

    def load(self, bank: int, addr: int):
        word = self.mem.read(bank, addr)
        tid = self.written.get((bank, addr))
        return (word, self.intern(("m", bank, addr)) if tid is None else tid)

    def store(self, bank: int, addr: int, w) -> None:
        self.mem.write(bank, addr, w[0])
        self.written[(bank, addr)] = w[1]

    def show(self, w) -> str:
        return str(w[0])

    def decide(self, key, a_valid, b_valid, pred, taken) -> None:
        p = None if pred is None else (pred[1], pred[0][1] if pred[1] else None)
        self.decisions[key] = (a_valid, b_valid, p, taken)


def _shadow_run(rg, bs, layout, bundle, terms):
    box = {}

    def make(mem):
        box["dom"] = Shadow(bs.word_width, mem, terms)
        return box["dom"]

    simulate(rg, bs, layout, bundle.mem_in, bundle.iterations, domain=make)
    dom = box["dom"]
    return dom.written, dom.decisions


def is_dead(arch: ArchSpec | RoutingGraph, original: Bitstream, corrupted: Bitstream, layout,
            bundle: TestBundle) -> bool:
    """True when the corruption provably cannot change any output."""
    rg = elaborate(arch) if isinstance(arch, ArchSpec) else arch
    terms: dict = {}
    ref = _shadow_run(rg, original, layout, bundle, terms)
    try:
        alt = _shadow_run(rg, corrupted, layout, bundle, terms)
    except (CgraError, ValueError):
        return False
    return ref == alt


# -- fault injection ----------------------------------------------------------

@dataclass(frozen=True)
class Fault:
    kind: str           # "opcode", "select" or "constant"
    pe: str
    slot: int
    target: str         # FU id, or the resource whose select/write enable changes
    old: str | int
    new: str | int
    table: str = ""     # "sel" or "wen" for select faults

    def to_dict(self) -> dict:
        return {"kind": self.kind, "pe": self.pe, "slot": self.slot, "target": self.target,
                "table": self.table, "old": self.old, "new": self.new}


def fault_sites(bitstream: Bitstream, rg: RoutingGraph) -> dict[str, list]:
    """Every corruptible field, grouped by kind."""
    preds = {r.id: [rg.resources[p].id for p in rg.pred[i]] for i, r in enumerate(rg.resources)}
    sites: dict[str, list] = {"opcode": [], "select": [], "constant": []}
    for pe, cfg in sorted(bitstream.pes.items()):
        for s, ins in enumerate(cfg.slots):
            for fu, op in sorted(ins.ops.items()):
                sites["opcode"].append((pe, s, fu))
                sites["constant"].append((pe, s, fu))
            for table in ("sel", "wen"):
                for res, src in sorted(getattr(ins, table).items()):
                    if len([p for p in preds.get(res, []) if p != src]) >= 1:
                        sites["select"].append((pe, s, res, table))
    return sites


def random_fault(bitstream: Bitstream, rg: RoutingGraph, rng: SplitMix64) -> Fault:
    sites = fault_sites(bitstream, rg)
    kinds = [k for k in ("opcode", "select", "constant") if sites[k]]
    kind = rng.choice(kinds)
    site = rng.choice(sites[kind])
    pe, s = site[0], site[1]
    ins = bitstream.pes[pe].slots[s]
    if kind == "opcode":
        old = ins.ops[site[2]].opcode
        return Fault(kind, pe, s, site[2], old, rng.choice([o for o in OPCODES if o != old]))
    if kind == "constant":
        old = ins.ops[site[2]].const
        return Fault(kind, pe, s, site[2], old, old ^ (1 << rng.below(bitstream.word_width)))
    res, table = site[2], site[3]
    old = getattr(ins, table)[res]
    alts = [rg.resources[p].id for p in rg.pred[rg.index[res]]]
    return Fault(kind, pe, s, res, old, rng.choice([a for a in alts if a != old]), table)


def inject(bitstream: Bitstream, fault: Fault) -> Bitstream:
    bs = bitstream.copy()
    ins = bs.pes[fault.pe].slots[fault.slot]
    if fault.kind == "opcode":
        ins.ops[fault.target].opcode = fault.new
    elif fault.kind == "constant":
        ins.ops[fault.target].const = fault.new
    elif fault.kind == "select":
        getattr(ins, fault.table)[fault.target] = fault.new
    else:
        raise ValueError(f"unknown fault kind {fault.kind!r}")
    return bs


@dataclass
class FaultOutcome:
    fault: Fault
    verdict: str
    dead: bool

    @property
    def silent(self) -> bool:
        """A live corruption that still passed validation."""
        return self.verdict == "PASS" and not self.dead

    def to_dict(self) -> dict:
        return {"fault": self.fault.to_dict(), "verdict": self.verdict, "dead": self.dead}


def fault_campaign(arch: ArchSpec | RoutingGraph, bitstream: Bitstream, layout,
                   bundle: TestBundle, count: int, seed: int) -> list[FaultOutcome]:
    rg = elaborate(arch) if isinstance(arch, ArchSpec) else arch
    rng = SplitMix64(seed)
    out = []
    for _ in range(count):
        fault = random_fault(bitstream, rg, rng)
        bad = inject(bitstream, fault)
        verdict = validate(rg, bad, layout, bundle).verdict
        dead = verdict == "PASS" and is_dead(rg, bitstream, bad, layout, bundle)
        out.append(FaultOutcome(fault, verdict, dead))
    return out
