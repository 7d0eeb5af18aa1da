from fractions import Fraction

import pytest
from conftest import RHO, R, exifs, rational_ifs

from ifsgraph.config import load_config
from ifsgraph.errors import OracleBudgetExceeded
from ifsgraph.ifs import Similarity
from ifsgraph.netiv import (AttractorOracle, NeighbourSet, _Key, children, global_net_intervals, realize,
                            root_neighbours)

F = Fraction


def word_generation(ifs, oracle, lo, hi, t):
    """tg and ag of the net interval [lo, hi] of generation t, straight from the word cut."""
    tg, ag = None, None
    for w, f in ifs.iter_cut(t):
        if oracle.meets_image(f, lo, hi):
            r, rm = abs(f.ratio), abs(ifs.compose(w[:-1]).ratio)
            tg = r if tg is None or r > tg else tg
            ag = rm if ag is None or rm < ag else ag
    return tg, ag


def test_oracle_basic():
    ifs = exifs()
    o = AttractorOracle(ifs)
    assert o.meets(F(0), F(7, 20))
    assert not o.meets(F(13, 20), F(7, 10))     # the gap between S2 and S3
    assert o.meets(F(-1), F(0, 1) + F(1, 10 ** 9))
    assert not o.meets(F(1), F(2))


def test_oracle_budget():
    ifs = load_config_ifs("golden")
    o = AttractorOracle(ifs, max_states=1)
    with pytest.raises(OracleBudgetExceeded):
        # a gap-free interval deep inside forces a long pull-back search
        o.meets(F(1, 3), F(1, 3) + F(1, 10 ** 12))


def load_config_ifs(name):
    from conftest import CONFIGS
    return load_config(str(CONFIGS / f"{name}.toml")).build_ifs()


def test_root_children_of_exifs():
    ifs = exifs()
    o = AttractorOracle(ifs)
    recs = children(ifs, o, root_neighbours(ifs))
    assert [rec.position for rec in recs] == [0, F(7, 20), F(1, 2), F(7, 10)]
    assert [rec.length for rec in recs] == [RHO, RHO, R, R]
    assert recs[0].neighbours == NeighbourSet((Similarity(1 / (1 - R), F(0)),))
    assert recs[1].neighbours == NeighbourSet.of([Similarity(1 / R, -(1 - R) / R), Similarity(1 / RHO, F(0))])
    assert recs[2].neighbours == NeighbourSet((Similarity(1 / (1 - RHO), -RHO / (1 - RHO)),))
    assert recs[3].neighbours == root_neighbours(ifs)


def test_children_tile_the_parent():
    ifs = exifs()
    o = AttractorOracle(ifs)
    nodes = list(realize(ifs, o, max_depth=4))
    by_parent: dict = {}
    for n in nodes:
        if n.path:
            by_parent.setdefault(n.path[:-1], []).append(n)
    parents = {n.path: n for n in nodes}
    for path, kids in by_parent.items():
        parent = parents[path]
        kids.sort(key=lambda n: n.path)
        assert kids[0].lo >= parent.lo and kids[-1].hi <= parent.hi
        edges = [parent.lo] + [x for k in kids for x in (k.lo, k.hi)] + [parent.hi]
        for lo, hi in zip(edges[::2], edges[1::2]):
            assert lo <= hi
            if lo < hi:
                assert not o.meets(lo, hi)       # uncovered gaps miss the attractor


@pytest.mark.parametrize("name", ["exifs", "cantor", "cantor_convolution", "golden"])
def test_realize_matches_brute_force(name):
    ifs = load_config_ifs(name)
    o = AttractorOracle(ifs)
    tgs = sorted({n.tg for n in realize(ifs, o, max_depth=3)}, key=_Key)
    for t in tgs + [(a + b) / 2 for a, b in zip(tgs, tgs[1:])]:
        got = [((n.lo, n.hi), n.neighbours) for n in realize(ifs, o, t=t)]
        assert got == global_net_intervals(ifs, o, t)


def test_transition_generation_matches_words():
    ifs = exifs()
    o = AttractorOracle(ifs)
    for n in realize(ifs, o, max_depth=4):
        if n.depth == 0:
            continue
        t = n.ag if n.ag is not None else F(1)
        tg, ag = word_generation(ifs, o, n.lo, n.hi, t)
        assert tg == n.tg
        assert ag == n.ag


def test_neighbour_set_is_canonical():
    a, b = Similarity(F(2), F(0)), Similarity(F(10, 3), F(-7, 3))
    assert NeighbourSet.of([a, b, a]) == NeighbourSet.of([b, a])
    assert NeighbourSet.of([a, b]).lm == F(10, 3)
