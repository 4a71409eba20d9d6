import math

import networkx as nx
import pytest

from ftqcr import msd, qec
from ftqcr import workloads as wl


def test_synthesis_cost():
    assert wl.synthesis_cost(1e-10) == 100
    assert wl.synthesis_cost(1.0) == 0
    assert wl.synthesis_cost(1.0, a=2.5) == 3
    # halving precision adds b before the ceiling
    assert wl.synthesis_cost(2**-10) == 30 and wl.synthesis_cost(2**-11) == 33
    with pytest.raises(ValueError):
        wl.synthesis_cost(0.0)


def test_ising_term_count_by_enumeration():
    g = nx.grid_2d_graph(10, 10)
    assert wl.ising_terms(10) == (g.number_of_edges(), g.number_of_nodes()) == (180, 100)
    w = wl.ising_workload()
    assert w.rotation_count == 5 * (180 + 100) * 20
    assert w.rotation_precision == pytest.approx(1e-3 / w.rotation_count, rel=1e-15)
    assert w.M == w.rotation_count * wl.synthesis_cost(1e-3 / w.rotation_count)


def test_ising_linearity_and_edges():
    assert wl.ising_workload(steps=0).M == 0
    a, b = wl.ising_workload(steps=10), wl.ising_workload(steps=20)
    assert b.rotation_count == 2 * a.rotation_count
    with pytest.raises(ValueError):
        wl.ising_workload(n_spins=99)


def test_external_counts():
    w = wl.external_workload("x", logical_qubits=10, cycles=5, toffoli_count=1)
    assert w.M == 4
    assert wl.external_workload("y", logical_qubits=10, cycles=5, t_count=17).M == 17
    with pytest.raises(ValueError):
        wl.external_workload("z", logical_qubits=10, cycles=5)


def test_shipped_workloads_golden():
    assert {"factoring2048", "chemistry_zns", "ising100"} <= set(wl.shipped_workloads())
    f = wl.load_workload("factoring2048")
    assert f.M == f.meta["expected_M"] == 10496900068
    n = 2048
    assert f.toffoli_count == math.floor(0.3 * n**3 + 0.0005 * n**3 * math.log2(n))
    with pytest.raises(KeyError):
        wl.load_workload("nope")


def test_production_cycles():
    assert wl.production_cycles(10, 100, 10) == 100
    assert wl.production_cycles(3, 10, 4) == 8
    with pytest.raises(ValueError):
        wl.production_cycles(1, 1, 0)


@pytest.fixture(scope="module")
def ising_estimate():
    return wl.estimate(wl.load_workload("ising100"))


def test_tradeoff_frontier(ising_estimate):
    rep, pts = ising_estimate
    w = wl.load_workload("ising100")
    n_cycle = math.ceil(rep.tau / rep.cycle_time - 1e-9)
    assert pts
    for a, b in zip(pts, pts[1:]):
        assert a.n_phys_total < b.n_phys_total
        assert a.wallclock > b.wallclock
    for t in pts:
        assert t.n_t >= wl.production_cycles(n_cycle, w.M, t.m)
        assert t.n_t >= w.cycles
        assert 0 < t.msd_fraction < 1


def test_wallclock_monotone_in_m(ising_estimate):
    rep, _ = ising_estimate
    w = wl.load_workload("ising100")
    pts = wl.tradeoff_sweep(w, rep, [1, 2, 4, 8, 16, 32, 64, 10**6], code=qec.CodeModel(), p=rep.p_phys,
                            keep_dominated=True)
    walls = [t.wallclock for t in pts]
    assert walls == sorted(walls, reverse=True)
    assert pts[-1].n_t == w.cycles  # algorithm-limited floor
    with pytest.raises(ValueError):
        wl.tradeoff_sweep(w, rep, [0], code=qec.CodeModel(), p=rep.p_phys)


def test_dense_not_slower_than_sparse():
    w = wl.load_workload("ising100")
    dense, _ = wl.estimate(w, layout="dense")
    sparse, _ = wl.estimate(w, layout="sparse")
    m = 16
    pd = wl.tradeoff_point(w, dense, m, qec.CodeModel(), dense.p_phys)
    ps = wl.tradeoff_point(w, sparse, m, qec.CodeModel(), sparse.p_phys)
    assert pd.wallclock <= ps.wallclock


def test_factory_target_scales_with_M(ising_estimate):
    rep, _ = ising_estimate
    assert rep.q_out <= wl.FAILURE_BUDGET / wl.load_workload("ising100").M
    assert isinstance(rep, msd.FactoryReport)
