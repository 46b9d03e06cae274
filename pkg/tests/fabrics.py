"""Tiny hand-written fabrics for constructed mapper instances."""

from cgrakit.arch import elaborate, spec_from_dict
from cgrakit.dfg.model import dfg_from_dict


def _fu(name, ops):
    return {"name": name, "kind": "FU", "opcodes": {o: 1 for o in ops}, "operands": ["a", "b", "p"],
            "ports": [{"name": n, "dir": "in"} for n in ("a", "b", "p")]
            + [{"name": "out", "dir": "out"}]}


def cut_fabric(links: int = 2, width: int = 3):
    """``width`` producer FUs on the left reach ``width`` consumer FUs on the
    right only through ``links`` parallel links."""
    left = {"name": "left", "kind": "Composite",
            "ports": [{"name": f"o{j}", "dir": "out"} for j in range(links)],
            "instances": [{"name": f"f{i}", "module": "src"} for i in range(width)],
            "connections": [{"from": f"f{i}.out", "to": f"o{j}"}
                            for i in range(width) for j in range(links)]}
    right = {"name": "right", "kind": "Composite",
             "ports": [{"name": f"i{j}", "dir": "in"} for j in range(links)],
             "instances": [{"name": f"g{i}", "module": "dst"} for i in range(width)],
             "connections": [{"from": f"i{j}", "to": f"g{i}.a"}
                             for i in range(width) for j in range(links)]}
    doc = {"name": "cut", "word_width": 32, "hop_limit": 1,
           "modules": [_fu("src", ["SUB"]), _fu("dst", ["ADD"]), left, right],
           "instances": [{"name": "L", "module": "left"}, {"name": "R", "module": "right"}],
           "connections": [{"from": f"L.o{j}", "to": f"R.i{j}"} for j in range(links)]}
    return elaborate(spec_from_dict(doc))


def pairs_dfg(n: int):
    """``n`` independent producer -> consumer pairs."""
    nodes = [{"id": f"p{i}", "opcode": "SUB", "constant": i + 1} for i in range(n)]
    nodes += [{"id": f"c{i}", "opcode": "ADD", "constant": 1} for i in range(n)]
    edges = [{"src": f"p{i}", "dst": f"c{i}"} for i in range(n)]
    return dfg_from_dict({"name": f"pairs{n}", "nodes": nodes, "edges": edges})
