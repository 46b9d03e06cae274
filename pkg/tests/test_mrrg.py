from collections import deque
from dataclasses import replace

import pytest

from cgrakit.arch import FU_SLOT, LINK, MU_PORT, REG, elaborate, preset
from cgrakit.mapper.check import check_mapping
from cgrakit.mrrg import build_mrrg, reachable

from support import mapped, rg_of


def _fu(rg, pe):
    return next(f for f in rg.fus if f.pe == pe)


def test_ii_one_wraps_to_same_step():
    rg = rg_of("n2n_2x2")
    m = build_mrrg(rg, 1)
    f = rg.fus[0]
    assert ((f.slot, 0), (f.out, 0)) in set(m.arcs())


def test_ii_three_replicates_resources():
    rg = rg_of("n2n_2x2")
    m = build_mrrg(rg, 3)
    assert m.num_rnodes == 3 * len(rg.resources)
    arcs = set(m.arcs())
    f = rg.fus[0]
    for t in range(3):
        assert ((f.slot, t), (f.out, (t + 1) % 3)) in arcs


@pytest.mark.parametrize("ii", [1, 2, 5])
def test_resource_count_linear_in_ii(ii):
    rg = rg_of("hycube_4x4")
    assert build_mrrg(rg, ii).num_rnodes == ii * build_mrrg(rg, 1).num_rnodes


def _links_within_cycle(rg, src, dst):
    """Independent BFS: fewest links from ``src`` to ``dst`` without crossing
    a register or an FU."""
    dist = {src: 0}
    q = deque([src])
    while q:
        a = q.popleft()
        for b in rg.succ[a]:
            if rg.kind(b) in (REG, FU_SLOT) and b != dst:
                continue
            d = dist[a] + (rg.kind(b) == LINK)
            if b not in dist or d < dist[b]:
                dist[b] = d
                q.append(b)
    return dist.get(dst)


def test_hycube_three_hop_path_same_step():
    rg = rg_of("hycube_4x4")
    src, dst = _fu(rg, "pe_0_0").out, _fu(rg, "pe_3_0").slot
    assert _links_within_cycle(rg, src, dst) == 3
    m = build_mrrg(rg, 2)
    for t in range(2):
        assert reachable(m, (src, t), (dst, t), max_cycles=0)


def test_reachable_examples():
    rg = rg_of("hycube_4x4")
    m = build_mrrg(rg, 2)
    f = _fu(rg, "pe_0_3")
    assert reachable(m, (f.out, 1), (f.out, 1))
    # compute-only tile on the right column has no memory port
    assert f.mem is None
    for b in rg.banks:
        for t in range(2):
            assert not reachable(m, (f.slot, 0), (b, t))
    n2n = rg_of("n2n_2x2")
    mn = build_mrrg(n2n, 1)
    a, z = _fu(n2n, "pe_0_0"), _fu(n2n, "pe_1_1")
    assert not reachable(mn, (a.out, 0), (z.slot, 0), max_cycles=0)
    assert reachable(mn, (a.out, 0), (z.slot, 1), max_cycles=1)


@pytest.mark.parametrize("name", ["n2n_2x2", "hycube_4x4"])
def test_arcs_monotone_in_hop_limit(name):
    rg = rg_of(name)
    prev = None
    for h in range(1, 5):
        arcs = set(build_mrrg(rg, 2, hop_limit=h).arcs())
        if prev is not None:
            assert prev <= arcs
        prev = arcs


@pytest.mark.parametrize("kernel,name", [("vecadd", "n2n_2x2"), ("fanout_fig", "hycube_2x2"),
                                         ("fir", "hycube_4x4")])
def test_mapping_lifts_to_multiple_ii(kernel, name):
    m = mapped(kernel, name)
    for k in (2, 3):
        lifted = replace(m, ii=k * m.ii)
        assert check_mapping(lifted, m.dfg, rg_of(name)) == []


def test_to_dot_mentions_every_rnode():
    rg = rg_of("n2n_2x2")
    dot = build_mrrg(rg, 2).to_dot()
    decls = [ln for ln in dot.splitlines() if ln.endswith('@1";') and "->" not in ln]
    assert len(decls) == len(rg.resources)
