"""Architecture description documents: parsing, validation, serialization.

An architecture is a set of module definitions (FU, RF, MU primitives and
Composite modules that instantiate and wire other modules) plus a top level
that instantiates modules and connects their ports.  Port references inside
a composite are either ``port`` (the composite's own port) or
``inst.port`` (a port of a child instance).  Top-level references are always
``inst.port``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from cgrakit.errors import DanglingPort, DirectionMismatch, SchemaError

KINDS = ("Composite", "FU", "RF", "MU")
DIRECTIONS = ("in", "out")


@dataclass(frozen=True)
class Port:
    name: str
    dir: str
    width: int = 32


@dataclass(frozen=True)
class Instance:
    name: str
    module: str


@dataclass(frozen=True)
class Connection:
    src: str
    dst: str


@dataclass
class ModuleDecl:
    name: str
    kind: str
    ports: list[Port]
    # FU
    opcodes: dict[str, int] = field(default_factory=dict)
    operands: list[str] = field(default_factory=list)
    mem_port: str | None = None
    # RF
    regs: int = 0
    # MU
    banks: int = 0
    depth: int = 0
    bank_width: int = 0
    ports_per_bank: int = 0
    # Composite
    instances: list[Instance] = field(default_factory=list)
    connections: list[Connection] = field(default_factory=list)

    def port(self, name: str) -> Port | None:
        for p in self.ports:
            if p.name == name:
                return p
        return None

    @property
    def inputs(self) -> list[Port]:
        return [p for p in self.ports if p.dir == "in"]

    @property
    def outputs(self) -> list[Port]:
        return [p for p in self.ports if p.dir == "out"]

    @property
    def operand_ports(self) -> list[str]:
        """Operand ports in slot order (left, right, predicate)."""
        return list(self.operands) if self.operands else [p.name for p in self.inputs]

    @property
    def result_port(self) -> str | None:
        for p in self.outputs:
            if p.name != self.mem_port:
                return p.name
        return None


@dataclass
class ArchSpec:
    name: str
    word_width: int
    hop_limit: int
    modules: list[ModuleDecl]
    instances: list[Instance]
    top_connections: list[Connection]
    cm_bytes: int | None = None
    instr_bytes: int = 8

    def module(self, name: str) -> ModuleDecl:
        for m in self.modules:
            if m.name == name:
                return m
        raise SchemaError(f"unknown module {name!r}")

    @property
    def max_ii(self) -> int | None:
        """Largest II whose instructions fit one PE's configuration memory."""
        if self.cm_bytes is None:
            return None
        return self.cm_bytes // self.instr_bytes

    def with_hop_limit(self, hop_limit: int) -> ArchSpec:
        if hop_limit < 1:
            raise SchemaError("hop_limit must be >= 1")
        return ArchSpec(
            self.name, self.word_width, hop_limit, self.modules,
            self.instances, self.top_connections, self.cm_bytes, self.instr_bytes,
        )


_TOP_KEYS = {"name", "word_width", "hop_limit", "modules", "instances", "connections", "config"}
_MODULE_KEYS = {
    "Composite": {"name", "kind", "ports", "instances", "connections"},
    "FU": {"name", "kind", "ports", "opcodes", "operands", "mem_port"},
    "RF": {"name", "kind", "ports", "regs"},
    "MU": {"name", "kind", "ports", "banks", "depth", "bank_width", "ports_per_bank"},
}


def _req(obj: dict, key: str, typ, where: str):
    if key not in obj:
        raise SchemaError(f"{where}: missing field {key!r}")
    val = obj[key]
    if typ is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise SchemaError(f"{where}.{key}: expected integer")
    if typ is not int and not isinstance(val, typ):
        raise SchemaError(f"{where}.{key}: expected {typ.__name__}")
    return val


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected object")
    extra = set(obj) - allowed
    if extra:
        raise SchemaError(f"{where}: unknown field(s) {sorted(extra)}")


def _parse_ports(raw, where: str, default_width: int) -> list[Port]:
    ports = []
    for i, p in enumerate(raw):
        _check_keys(p, {"name", "dir", "width"}, f"{where}.ports[{i}]")
        name = _req(p, "name", str, where)
        d = _req(p, "dir", str, where)
        if d not in DIRECTIONS:
            raise SchemaError(f"{where}.{name}: dir must be 'in' or 'out'")
        width = p.get("width", default_width)
        ports.append(Port(name, d, width))
    names = [p.name for p in ports]
    if len(set(names)) != len(names):
        raise SchemaError(f"{where}: duplicate port names")
    return ports


def _parse_conns(raw, where: str) -> list[Connection]:
    out = []
    for i, c in enumerate(raw):
        _check_keys(c, {"from", "to"}, f"{where}.connections[{i}]")
        out.append(Connection(_req(c, "from", str, where), _req(c, "to", str, where)))
    return out


def _parse_instances(raw, where: str) -> list[Instance]:
    out = []
    for i, inst in enumerate(raw):
        _check_keys(inst, {"name", "module"}, f"{where}.instances[{i}]")
        out.append(Instance(_req(inst, "name", str, where), _req(inst, "module", str, where)))
    names = [i.name for i in out]
    if len(set(names)) != len(names):
        raise SchemaError(f"{where}: duplicate instance names")
    return out


def _parse_module(raw: dict, word_width: int) -> ModuleDecl:
    if not isinstance(raw, dict):
        raise SchemaError("module: expected object")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise SchemaError(f"module {raw.get('name')!r}: unknown kind {kind!r}")
    name = _req(raw, "name", str, "module")
    where = f"module {name}"
    _check_keys(raw, _MODULE_KEYS[kind], where)
    m = ModuleDecl(name, kind, _parse_ports(raw.get("ports", []), where, word_width))
    if kind == "FU":
        ops = _req(raw, "opcodes", dict, where)
        if not ops:
            raise SchemaError(f"{where}: opcode set must be non-empty")
        for op, lat in ops.items():
            if isinstance(lat, bool) or not isinstance(lat, int) or lat < 0:
                raise SchemaError(f"{where}: latency of {op} must be an integer >= 0")
        m.opcodes = dict(ops)
        m.operands = list(raw.get("operands", []))
        m.mem_port = raw.get("mem_port")
        for pn in m.operands:
            p = m.port(pn)
            if p is None or p.dir != "in":
                raise SchemaError(f"{where}: operand {pn!r} is not an input port")
        if m.mem_port is not None:
            p = m.port(m.mem_port)
            if p is None or p.dir != "out":
                raise SchemaError(f"{where}: mem_port {m.mem_port!r} is not an output port")
    elif kind == "RF":
        m.regs = _req(raw, "regs", int, where)
        if m.regs < 1:
            raise SchemaError(f"{where}: register count must be >= 1")
        if not m.inputs or not m.outputs:
            raise SchemaError(f"{where}: RF needs at least one write and one read port")
    elif kind == "MU":
        m.banks = _req(raw, "banks", int, where)
        m.depth = _req(raw, "depth", int, where)
        m.bank_width = raw.get("bank_width", word_width)
        m.ports_per_bank = raw.get("ports_per_bank", 1)
        if m.banks < 1 or m.depth < 1 or m.ports_per_bank < 1:
            raise SchemaError(f"{where}: banks, depth and ports_per_bank must be >= 1")
    else:
        m.instances = _parse_instances(raw.get("instances", []), where)
        m.connections = _parse_conns(raw.get("connections", []), where)
    return m


def spec_from_dict(doc: dict) -> ArchSpec:
    _check_keys(doc, _TOP_KEYS, "architecture")
    name = _req(doc, "name", str, "architecture")
    width = _req(doc, "word_width", int, "architecture")
    hop = _req(doc, "hop_limit", int, "architecture")
    if hop < 1:
        raise SchemaError("hop_limit must be >= 1")
    if width < 1 or width > 64:
        raise SchemaError("word_width must be in 1..64")
    cfg = doc.get("config", {})
    _check_keys(cfg, {"cm_bytes", "instr_bytes"}, "config")
    modules = [_parse_module(m, width) for m in _req(doc, "modules", list, "architecture")]
    if len({m.name for m in modules}) != len(modules):
        raise SchemaError("duplicate module names")
    spec = ArchSpec(
        name=name,
        word_width=width,
        hop_limit=hop,
        modules=modules,
        instances=_parse_instances(_req(doc, "instances", list, "architecture"), "top"),
        top_connections=_parse_conns(doc.get("connections", []), "top"),
        cm_bytes=cfg.get("cm_bytes"),
        instr_bytes=cfg.get("instr_bytes", 8),
    )
    validate(spec)
    return spec


def parse_arch(text: str) -> ArchSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    return spec_from_dict(doc)


def _resolve(ref: str, owner: ModuleDecl | None, children: dict[str, ModuleDecl], where: str):
    """Return (is_own_port, Port) for a reference inside ``owner``."""
    if "." in ref:
        inst, port = ref.split(".", 1)
        if inst not in children:
            raise DanglingPort(f"{where}: no instance {inst!r} (in {ref!r})")
        p = children[inst].port(port)
        if p is None:
            raise DanglingPort(f"{where}: {children[inst].name} has no port {port!r}")
        return False, p
    if owner is None:
        raise DanglingPort(f"{where}: top-level reference {ref!r} needs 'inst.port'")
    p = owner.port(ref)
    if p is None:
        raise DanglingPort(f"{where}: {owner.name} has no port {ref!r}")
    return True, p


def _check_scope(owner, instances, conns, spec, where):
    children = {}
    for inst in instances:
        children[inst.name] = spec.module(inst.module)
    for c in conns:
        own_s, ps = _resolve(c.src, owner, children, where)
        own_d, pd = _resolve(c.dst, owner, children, where)
        # drivers: child outputs or own inputs; sinks: child inputs or own outputs
        src_ok = (ps.dir == "out") != own_s
        dst_ok = (pd.dir == "in") != own_d
        if not (src_ok and dst_ok):
            raise DirectionMismatch(f"{where}: {c.src} -> {c.dst} does not run output->input")


def validate(spec: ArchSpec) -> None:
    """Check every type invariant; raise on the first violation."""
    names = {m.name for m in spec.modules}
    for m in spec.modules:
        if m.kind == "Composite":
            for inst in m.instances:
                if inst.module not in names:
                    raise SchemaError(f"module {m.name}: unknown module {inst.module!r}")
                if inst.module == m.name:
                    raise SchemaError(f"module {m.name} instantiates itself")
            _check_scope(m, m.instances, m.connections, spec, f"module {m.name}")
    for inst in spec.instances:
        if inst.module not in names:
            raise SchemaError(f"top: unknown module {inst.module!r}")
    _check_scope(None, spec.instances, spec.top_connections, spec, "top")


def _port_dict(p: Port) -> dict:
    return {"name": p.name, "dir": p.dir, "width": p.width}


def _module_dict(m: ModuleDecl) -> dict:
    d: dict = {"name": m.name, "kind": m.kind, "ports": [_port_dict(p) for p in m.ports]}
    if m.kind == "FU":
        d["opcodes"] = dict(m.opcodes)
        if m.operands:
            d["operands"] = list(m.operands)
        if m.mem_port is not None:
            d["mem_port"] = m.mem_port
    elif m.kind == "RF":
        d["regs"] = m.regs
    elif m.kind == "MU":
        d.update(banks=m.banks, depth=m.depth, bank_width=m.bank_width,
                 ports_per_bank=m.ports_per_bank)
    else:
        d["instances"] = [{"name": i.name, "module": i.module} for i in m.instances]
        d["connections"] = [{"from": c.src, "to": c.dst} for c in m.connections]
    return d


def spec_to_dict(spec: ArchSpec) -> dict:
    return {
        "name": spec.name,
        "word_width": spec.word_width,
        "hop_limit": spec.hop_limit,
        "config": {"cm_bytes": spec.cm_bytes, "instr_bytes": spec.instr_bytes},
        "modules": [_module_dict(m) for m in spec.modules],
        "instances": [{"name": i.name, "module": i.module} for i in spec.instances],
        "connections": [{"from": c.src, "to": c.dst} for c in spec.top_connections],
    }


def serialize_arch(spec: ArchSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=1) + "\n"
