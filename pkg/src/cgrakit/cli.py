"""Command-line entry point: ``cgrakit {map,validate,sweep-hops,compare-quadrants}``.

Exit codes: 0 success, 1 usage or input error, 2 mapping failure,
3 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

from cgrakit.arch.adl import ArchSpec
from cgrakit.arch.elaborate import elaborate
from cgrakit.arch.presets import load_arch
from cgrakit.dfg.kernels import FANOUT_KERNELS, KERNEL_NAMES, load_dfg
from cgrakit.dfg.model import Dfg, serialize_dfg
from cgrakit.errors import CgraError, MappingFailed
from cgrakit.layout import LayoutFile, assign_layout, bank_depths, embed_addresses, infer_sizes
from cgrakit.mapper import Mapping, MapperConfig, map_dfg
from cgrakit.oracle import gen_vectors, validate
from cgrakit.sim.bitstream import Bitstream, extract_bitstream
from cgrakit.sim.energy import estimate_energy
from cgrakit.sim.simulator import simulate

EXIT_OK, EXIT_USAGE, EXIT_MAPPING, EXIT_VALIDATION = 0, 1, 2, 3
DEFAULT_ITERATIONS = 16
DEFAULT_ARCH = "preset:hycube_4x4"


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    arch: str = DEFAULT_ARCH
    dfgs: list[str] = field(default_factory=list)
    config: str | None = None
    seed: int = 0
    out: Path = Path("out")
    strategy: str | None = None
    max_ii: int | None = None
    hops: list[int] = field(default_factory=lambda: [1, 2, 3, 4])
    iterations: int | None = None
    trace: bool = False
    gating: bool = True
    bitstream: str | None = None
    layout: str | None = None

    def mapper_config(self, **overrides) -> MapperConfig:
        opts: dict = {}
        if self.config is not None:
            doc = json.loads(_read(self.config))
            known = {f.name for f in fields(MapperConfig)}
            unknown = set(doc) - known
            if unknown:
                raise UsageError(f"{self.config}: unknown mapper option(s) {sorted(unknown)}")
            opts.update(doc)
        opts["seed"] = self.seed
        if self.strategy is not None:
            opts["strategy"] = self.strategy
        if self.max_ii is not None:
            opts["max_ii"] = self.max_ii
        opts.update(overrides)
        try:
            return MapperConfig(**opts)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad mapper configuration: {exc}") from exc


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _arch(ref: str) -> ArchSpec:
    try:
        return load_arch(ref)
    except OSError as exc:
        raise UsageError(f"cannot read {ref}: {exc.strerror}") from exc


def _dfg(ref: str) -> Dfg:
    try:
        return load_dfg(ref)
    except OSError as exc:
        raise UsageError(f"cannot read {ref}: {exc.strerror}") from exc
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc


# -- artifact writers -----------------------------------------------------------

def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _json(path: Path, doc) -> None:
    _write(path, json.dumps(doc, indent=1) + "\n")


def _csv(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    _write(path, buf.getvalue())


def _markdown(header: list[str], rows: list[list]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(str(c) for c in r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


# -- pipeline -------------------------------------------------------------------

def prepare(dfg: Dfg, spec: ArchSpec, iterations: int) -> tuple[Dfg, LayoutFile]:
    """Assign a memory layout and embed bank/base into the memory nodes."""
    layout = assign_layout(dfg, spec, infer_sizes(dfg, iterations))
    return embed_addresses(dfg, layout), layout


def _iterations(m: RunManifest, dfg: Dfg) -> int:
    if m.iterations is not None:
        return m.iterations
    return dfg.iteration_count_hint or DEFAULT_ITERATIONS


def _attempt_rows(attempts: list[dict]) -> list[list]:
    return [[a["ii"], a["pass"], a["placed"], a["overuse"], a["status"]] for a in attempts]


_ATTEMPT_HEADER = ["ii", "pass", "placed", "overuse", "status"]


def _map_one(spec: ArchSpec, dfg: Dfg, cfg: MapperConfig) -> Mapping:
    if cfg.max_ii is not None and cfg.max_ii < 1:
        raise MappingFailed(f"{dfg.name}: max II {cfg.max_ii} admits no schedule")
    return map_dfg(dfg, spec, cfg)


def cmd_map(m: RunManifest, mappings: list[Mapping] | None = None) -> int:
    spec = _arch(m.arch)
    if len(m.dfgs) != 1:
        raise UsageError("map needs exactly one --dfg")
    raw = _dfg(m.dfgs[0])
    dfg, layout = prepare(raw, spec, _iterations(m, raw))
    out = m.out
    _write(out / "layout.json", layout.to_json())
    _write(out / "dfg.json", serialize_dfg(dfg))
    t0 = time.perf_counter()
    try:
        mapping = _map_one(spec, dfg, m.mapper_config())
    except MappingFailed as exc:
        _json(out / "error.json", {"error": "MappingFailed", "message": str(exc),
                                   "attempts": exc.attempts})
        _csv(out / "attempts.csv", _ATTEMPT_HEADER, _attempt_rows(exc.attempts))
        print(f"mapping failed: {exc}", file=sys.stderr)
        return EXIT_MAPPING
    wall = time.perf_counter() - t0
    if mappings is not None:
        mappings.append(mapping)
    _write_mapping(out, mapping, wall)
    _write(out / "bitstream.json", extract_bitstream(mapping, spec).to_json())
    print(f"{dfg.name} on {spec.name}: II {mapping.ii} (MII {mapping.mii.mii})")
    return EXIT_OK


def _write_mapping(out: Path, mapping: Mapping, wall: float | None) -> None:
    _write(out / "mapping.json", mapping.report_json(wall))
    _csv(out / "placement.csv", ["node", "fu", "t", "lat"],
         [[v, fu, t, mapping.latency[v]] for v, (fu, t) in sorted(mapping.placement.items())])
    _csv(out / "routes.csv", ["edge", "step", "resource", "t"],
         [[k, i, r, t] for k, p in sorted(mapping.routes.items()) for i, (r, t) in enumerate(p)])
    _csv(out / "attempts.csv", _ATTEMPT_HEADER, _attempt_rows(mapping.attempts))


def cmd_validate(m: RunManifest, mappings: list[Mapping] | None = None) -> int:
    spec = _arch(m.arch)
    rg = elaborate(spec)
    if len(m.dfgs) != 1:
        raise UsageError("validate needs exactly one --dfg")
    raw = _dfg(m.dfgs[0])
    n = _iterations(m, raw)
    out = m.out
    if m.bitstream is not None:
        if m.layout is None:
            raise UsageError("--bitstream needs --layout")
        layout = LayoutFile.from_json(_read(m.layout))
        dfg = embed_addresses(raw, layout)
        bs = Bitstream.from_json(_read(m.bitstream))
    else:
        dfg, layout = prepare(raw, spec, n)
        try:
            mapping = _map_one(spec, dfg, m.mapper_config())
        except MappingFailed as exc:
            _json(out / "error.json", {"error": "MappingFailed", "message": str(exc),
                                       "attempts": exc.attempts})
            print(f"mapping failed: {exc}", file=sys.stderr)
            return EXIT_MAPPING
        if mappings is not None:
            mappings.append(mapping)
        bs = extract_bitstream(mapping, spec, gating=m.gating)
        _write_mapping(out, mapping, None)
        _write(out / "bitstream.json", bs.to_json())
        _write(out / "layout.json", layout.to_json())
    bundle = gen_vectors(dfg, layout, m.seed, n, word_width=spec.word_width,
                         depths=bank_depths(spec), preset=spec.name)
    bundle.save(out / "bundle")
    verdict = validate(rg, bs, layout, bundle, gating=m.gating)
    _json(out / "verdict.json", verdict.to_dict())
    _csv(out / "verdict.csv", ["bank", "addr", "got", "want"], [list(x) for x in verdict.mismatches])
    if verdict.error is None:
        trace: list[str] | None = [] if m.trace else None
        _, stats = simulate(rg, bs, layout, bundle.mem_in, n, gating=m.gating, trace=trace)
        sd = stats.to_dict()
        _json(out / "stats.json", sd)
        _csv(out / "stats.csv", ["counter", "value"],
             [[k, v] for k, v in sd.items() if k != "pe_active"]
             + [[f"pe_active.{pe}", v] for pe, v in sd["pe_active"].items()])
        energy = estimate_energy(stats)
        _json(out / "energy.json", energy.to_dict())
        _csv(out / "energy.csv", ["category", "energy", "percent"],
             [[k, v, round(energy.percent[k], 4)] for k, v in energy.breakdown.items()])
        if trace is not None:
            _write(out / "trace.txt", "\n".join(trace) + ("\n" if trace else ""))
    print(f"{dfg.name} on {spec.name}: {verdict.verdict}"
          + (f" ({verdict.total_mismatches} mismatches)" if verdict.total_mismatches else "")
          + (f" ({verdict.error})" if verdict.error else ""))
    return EXIT_OK if verdict.passed else EXIT_VALIDATION


def sweep_hops(spec: ArchSpec, dfgs: list[Dfg], hops: list[int], m: RunManifest,
               mappings: list[Mapping] | None = None) -> list[dict]:
    """II per hop limit; every successful mapping is appended to ``mappings``."""
    rows = []
    for raw in dfgs:
        dfg, _ = prepare(raw, spec, _iterations(m, raw))
        iis: dict[int, int | None] = {}
        for h in hops:
            try:
                mapping = _map_one(spec, dfg, m.mapper_config(hop_limit=h))
            except MappingFailed:
                iis[h] = None
                continue
            iis[h] = mapping.ii
            if mappings is not None:
                mappings.append(mapping)
        seq = [iis[h] for h in hops]
        known = [x for x in seq if x is not None]
        monotone = all(a >= b for a, b in zip(known, known[1:]))
        rows.append({"kernel": dfg.name, "ii": {str(h): iis[h] for h in hops},
                     "monotone": monotone})
    return rows


def cmd_sweep_hops(m: RunManifest, mappings: list[Mapping] | None = None) -> int:
    spec = _arch(m.arch)
    refs = m.dfgs or [f"kernel:{k}" for k in FANOUT_KERNELS]
    dfgs = [_dfg(r) for r in refs]
    if not m.hops or any(h < 0 for h in m.hops):
        raise UsageError("--hops needs non-negative integers")
    rows = sweep_hops(spec, dfgs, m.hops, m, mappings)
    header = ["kernel"] + [f"hop{h}" for h in m.hops] + ["monotone"]
    table = [[r["kernel"]] + [_cell(r["ii"][str(h)]) for h in m.hops]
             + ["yes" if r["monotone"] else "FLAG"] for r in rows]
    _json(m.out / "sweep.json", {"arch": spec.name, "hops": m.hops, "rows": rows})
    _csv(m.out / "sweep.csv", header, table)
    _write(m.out / "sweep.md", _markdown(header, table))
    print(_markdown(header, table), end="")
    return EXIT_OK


def _cell(ii: int | None) -> str:
    return "infeasible" if ii is None else str(ii)


def compare_quadrants(spec: ArchSpec, dfgs: list[Dfg], m: RunManifest,
                      mappings: list[Mapping] | None = None) -> list[dict]:
    """Spatial-style (single-instruction, max II 1) vs spatio-temporal II."""
    rows = []
    for raw in dfgs:
        dfg, _ = prepare(raw, spec, _iterations(m, raw))
        res = {}
        for mode, cap in (("spatial", 1), ("spatio_temporal", m.max_ii)):
            try:
                mapping = _map_one(spec, dfg, m.mapper_config(max_ii=cap))
            except MappingFailed:
                res[mode] = None
                continue
            res[mode] = mapping.ii
            if mappings is not None:
                mappings.append(mapping)
        s, st = res["spatial"], res["spatio_temporal"]
        rows.append({"kernel": dfg.name, "spatial": s, "spatio_temporal": st,
                     "spatial_ge": s is None or (st is not None and s >= st)})
    return rows


def cmd_compare_quadrants(m: RunManifest, mappings: list[Mapping] | None = None) -> int:
    spec = _arch(m.arch)
    refs = m.dfgs or [f"kernel:{k}" for k in KERNEL_NAMES]
    rows = compare_quadrants(spec, [_dfg(r) for r in refs], m, mappings)
    header = ["kernel", "spatial_ii", "spatio_temporal_ii", "spatial_ge"]
    table = [[r["kernel"], _cell(r["spatial"]), _cell(r["spatio_temporal"]),
              "yes" if r["spatial_ge"] else "no"] for r in rows]
    _json(m.out / "quadrants.json", {"arch": spec.name, "rows": rows})
    _csv(m.out / "quadrants.csv", header, table)
    _write(m.out / "quadrants.md", _markdown(header, table))
    print(_markdown(header, table), end="")
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _hop_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad hop list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cgrakit", description="CGRA modelling, mapping and validation toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, multi_dfg: bool = False):
        sp.add_argument("--arch", default=DEFAULT_ARCH, help="architecture file or preset:NAME")
        sp.add_argument("--dfg", action="append", default=[],
                        help="DFG file or kernel:NAME" + (" (repeatable)" if multi_dfg else ""))
        sp.add_argument("--config", help="mapper configuration JSON")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--strategy", choices=("adaptive", "sa"))
        sp.add_argument("--max-ii", type=int)
        sp.add_argument("--iterations", type=int)
        sp.add_argument("--out", type=Path, default=Path("out"))

    common(sub.add_parser("map", help="map a DFG and emit a bitstream"))
    v = sub.add_parser("validate", help="map, simulate and diff against the reference")
    common(v)
    v.add_argument("--bitstream", help="validate this bitstream instead of mapping")
    v.add_argument("--layout", help="layout file matching --bitstream")
    v.add_argument("--trace", action="store_true", help="write a per-cycle event log")
    v.add_argument("--no-gating", action="store_true", help="disable idle-slot clock gating")
    s = sub.add_parser("sweep-hops", help="II per hop limit for each DFG")
    common(s, multi_dfg=True)
    s.add_argument("--hops", type=_hop_list, default=[1, 2, 3, 4])
    common(sub.add_parser("compare-quadrants", help="spatial-style vs spatio-temporal II"),
           multi_dfg=True)
    return p


COMMANDS = {"map": cmd_map, "validate": cmd_validate, "sweep-hops": cmd_sweep_hops,
            "compare-quadrants": cmd_compare_quadrants}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    m = RunManifest(arch=args.arch, dfgs=args.dfg, config=args.config, seed=args.seed,
                    out=args.out, strategy=args.strategy, max_ii=args.max_ii,
                    iterations=args.iterations, trace=getattr(args, "trace", False),
                    gating=not getattr(args, "no_gating", False),
                    bitstream=getattr(args, "bitstream", None),
                    layout=getattr(args, "layout", None))
    if hasattr(args, "hops"):
        m.hops = args.hops
    try:
        return COMMANDS[args.command](m)
    except UsageError as exc:
        print(f"cgrakit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MappingFailed as exc:
        print(f"cgrakit: mapping failed: {exc}", file=sys.stderr)
        return EXIT_MAPPING
    except CgraError as exc:
        print(f"cgrakit: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
