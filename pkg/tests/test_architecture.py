import math

import networkx as nx
import numpy as np
import pytest

from ftqcr import architecture as arch
from ftqcr.architecture import DefectMap, Layout, RoutingError
from ftqcr.params import HardwareParams

P = HardwareParams()


def _oracle_hops(rows, cols, blocked, a, b):
    g = nx.grid_2d_graph(rows, cols)
    g.remove_nodes_from(blocked)
    try:
        return nx.shortest_path_length(g, a, b)
    except nx.NetworkXNoPath:
        return None


def test_lane_anchors():
    assert P.t_lane == pytest.approx(125e-9, rel=1e-12)
    assert P.t_step == pytest.approx(12.5e-9, rel=1e-12)
    assert arch.op_latency(Layout("sparse"), "lane_shuttle", P) == P.t_lane
    assert arch.op_latency(Layout("dense"), "lane_shuttle", P) == 0.0


def test_manhattan_without_defects():
    lay = Layout("sparse", rows=5, cols=5)
    r = arch.route(lay, DefectMap.none(5, 5), (0, 0), (3, 4))
    assert r.hops == 7
    assert r.corners == 1  # one turn suffices on an empty grid
    assert r.duration == pytest.approx(7 * P.t_step)


def test_single_defect_on_one_wide_lane():
    # a 3-row strip where the middle row is the corridor; block the direct cell
    lay = Layout("sparse", rows=3, cols=6)
    defects = DefectMap(frozenset({(1, 3)}), 0, 0.0, 3, 6)
    r = arch.route(lay, defects, (1, 0), (1, 5))
    assert r.hops == 5 + 2
    assert (1, 3) not in r.path


def test_defective_destination_can_shorten():
    lay = Layout("sparse", rows=5, cols=5)
    defects = DefectMap(frozenset({(4, 4)}), 0, 0.0, 5, 5)
    r = arch.route(lay, defects, (0, 0), (4, 4))
    assert r.hops < 8
    assert r.remapped == ((4, 4),)


def test_disconnected_reported():
    lay = Layout("sparse", rows=3, cols=3)
    wall = frozenset({(0, 1), (1, 1), (2, 1)})
    with pytest.raises(RoutingError):
        arch.route(lay, DefectMap(wall, 0, 0.0, 3, 3), (0, 0), (0, 2))


def test_route_matches_networkx_small_sample():
    rng = np.random.default_rng(7)
    for k in range(30):
        n = int(rng.integers(3, 12))
        defects = DefectMap.generate(n, n, 0.1, k)
        good = [(r, c) for r in range(n) for c in range(n) if (r, c) not in defects.defective]
        a, b = (good[i] for i in rng.choice(len(good), 2, replace=False))
        ref = _oracle_hops(n, n, defects.defective, a, b)
        lay = Layout("sparse", rows=n, cols=n)
        if ref is None:
            with pytest.raises(RoutingError):
                arch.route(lay, defects, a, b)
        else:
            r = arch.route(lay, defects, a, b)
            assert r.hops == ref == arch.bfs_hops(n, n, defects.defective, a, b)
            assert all(p not in defects.defective for p in r.path)


def test_route_additivity():
    lay = Layout("sparse", rows=6, cols=6)
    none = DefectMap.none(6, 6)
    r1 = arch.route(lay, none, (0, 0), (2, 3))
    r2 = arch.route(lay, none, (2, 3), (5, 5))
    tot = r1 + r2
    assert tot.hops == r1.hops + r2.hops
    assert tot.duration == pytest.approx(r1.duration + r2.duration)


def test_corner_penalty_factor():
    e = P.eps_shuttle_per_dot
    straight = arch.Route([], 10, 0, 0.0).error(P)
    bent = arch.Route([], 10, 1, 0.0).error(P)
    assert 1 - bent == pytest.approx((1 - straight) * (1 - 4 * e), rel=1e-14)
    assert straight == pytest.approx(1 - (1 - 1e-5) ** 10, rel=1e-14)


def test_shuttle_stats_zero_defects():
    s = arch.shuttle_stats(0.0, 10, trials=20, seed=1)
    assert s.mean_extra_hops == 0.0
    assert s.mean_added_error == 0.0


def test_shuttle_stats_independent_seed():
    a = arch.shuttle_stats(1e-3, 20, trials=300, seed=1)
    b = arch.shuttle_stats(1e-3, 20, trials=300, seed=99)
    sigma = math.hypot(a.std_extra_hops / math.sqrt(a.trials), b.std_extra_hops / math.sqrt(b.trials))
    assert abs(a.mean_extra_hops - b.mean_extra_hops) <= 3 * max(sigma, 1e-3)


def test_dense_cycle_two_microseconds():
    assert arch.op_latency(Layout("dense"), "stabilizer_cycle", P) == pytest.approx(2.0e-6, rel=1e-12)


@pytest.mark.parametrize("op", arch.OP_KINDS)
@pytest.mark.parametrize("mode", arch.MODES)
def test_latency_ordering(op, mode):
    d = arch.op_latency(Layout("dense"), op, P, mode)
    pa = arch.op_latency(Layout("patched"), op, P, mode)
    s = arch.op_latency(Layout("sparse"), op, P, mode)
    assert d <= pa <= s


def test_logical_cycle_ordering():
    cyc = [arch.logical_cycle(Layout.from_label(x), P) for x in ("dense", "patched2", "patched1", "sparse")]
    assert cyc == sorted(cyc)


def test_pulse_mode_never_slower():
    for lay in ("dense", "patched1", "sparse"):
        L = Layout.from_label(lay)
        assert arch.logical_cycle(L, P, "pulse") <= arch.logical_cycle(L, P, "gate")


def test_layout_validation():
    with pytest.raises(ValueError):
        Layout("hex")
    with pytest.raises(ValueError):
        Layout("patched", logical_per_patch=3)
    with pytest.raises(ValueError):
        arch.op_latency(Layout(), "teleport", P)
