"""Regenerate the bundled architecture documents under
src/cgrakit/arch/presets/.  The JSON files are the source of truth that
ships with the package; this script only saves typing."""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "cgrakit" / "arch" / "presets"

DIRS = ("N", "E", "S", "W")
ALU_OPS = ["ADD", "SUB", "MUL", "AND", "OR", "XOR", "SHL", "SHR", "CMP", "SELECT", "NOP"]


def fu(name, width, mem):
    ports = [{"name": n, "dir": "in", "width": width} for n in ("a", "b", "p")]
    ports.append({"name": "out", "dir": "out", "width": width})
    ops = {op: 1 for op in ALU_OPS}
    d = {"name": name, "kind": "FU", "ports": ports, "opcodes": ops, "operands": ["a", "b", "p"]}
    if mem:
        ports.append({"name": "mem", "dir": "out", "width": width})
        ops.update(LOAD=1, STORE=1)
        d["mem_port"] = "mem"
    return d


def pe(name, fu_mod, width, xbar, mem):
    ports = [{"name": f"in_{d}", "dir": "in", "width": width} for d in DIRS]
    ports += [{"name": f"out_{d}", "dir": "out", "width": width} for d in DIRS]
    insts = [{"name": "fu", "module": fu_mod}]
    conns = []
    for d in DIRS:
        conns.append({"from": "fu.out", "to": f"out_{d}"})
    if xbar:
        insts += [{"name": f"r{d}", "module": "inreg"} for d in DIRS]
        for d in DIRS:
            conns.append({"from": f"in_{d}", "to": f"r{d}.w0"})
            for x in DIRS:
                if x != d:
                    conns.append({"from": f"in_{d}", "to": f"out_{x}"})
                    conns.append({"from": f"r{d}.r0", "to": f"out_{x}"})
    for op in ("a", "b", "p"):
        for d in DIRS:
            conns.append({"from": f"in_{d}", "to": f"fu.{op}"})
            if xbar:
                conns.append({"from": f"r{d}.r0", "to": f"fu.{op}"})
        conns.append({"from": "fu.out", "to": f"fu.{op}"})
    if mem:
        ports.append({"name": "lsu", "dir": "out", "width": width})
        conns.append({"from": "fu.mem", "to": "lsu"})
    return {"name": name, "kind": "Composite", "ports": ports, "instances": insts,
            "connections": conns}


def grid(name, rows, cols, width, hop, xbar, banks, depth, mu_ports, cm_bytes=None):
    mods = [fu("alu", width, False), fu("alu_lsu", width, True)]
    if xbar:
        mods.append({"name": "inreg", "kind": "RF", "regs": 1,
                     "ports": [{"name": "w0", "dir": "in", "width": width},
                               {"name": "r0", "dir": "out", "width": width}]})
    mods.append(pe("pe", "alu", width, xbar, False))
    mods.append(pe("pe_mem", "alu_lsu", width, xbar, True))
    mods.append({"name": "spm", "kind": "MU", "banks": banks, "depth": depth,
                 "bank_width": width, "ports_per_bank": 1,
                 "ports": [{"name": f"p{k}", "dir": "in", "width": width} for k in range(mu_ports)]})
    insts, conns = [], []
    for r in range(rows):
        for c in range(cols):
            insts.append({"name": f"pe_{r}_{c}", "module": "pe_mem" if c == 0 else "pe"})
    insts.append({"name": "mem", "module": "spm"})
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                conns.append({"from": f"pe_{r}_{c}.out_E", "to": f"pe_{r}_{c+1}.in_W"})
                conns.append({"from": f"pe_{r}_{c+1}.out_W", "to": f"pe_{r}_{c}.in_E"})
            if r + 1 < rows:
                conns.append({"from": f"pe_{r}_{c}.out_S", "to": f"pe_{r+1}_{c}.in_N"})
                conns.append({"from": f"pe_{r+1}_{c}.out_N", "to": f"pe_{r}_{c}.in_S"})
        conns.append({"from": f"pe_{r}_0.lsu", "to": f"mem.p{r % mu_ports}"})
    return {"name": name, "word_width": width, "hop_limit": hop,
            "config": {"cm_bytes": cm_bytes, "instr_bytes": 8},
            "modules": mods, "instances": insts, "connections": conns}


PRESETS = {
    "n2n_2x2": grid("n2n_2x2", 2, 2, 32, 1, False, 2, 64, 2),
    "hycube_2x2": grid("hycube_2x2", 2, 2, 32, 4, True, 2, 64, 2),
    "n2n_4x4": grid("n2n_4x4", 4, 4, 32, 1, False, 4, 256, 4),
    "hycube_4x4": grid("hycube_4x4", 4, 4, 32, 4, True, 4, 256, 4),
    "pace_8x8": grid("pace_8x8", 8, 8, 16, 4, True, 8, 512, 8, cm_bytes=256),
}

if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    for name, doc in PRESETS.items():
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")
        print("wrote", name)
