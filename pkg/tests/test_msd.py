import itertools
import math

import numpy as np
import pytest

from ftqcr import enumeration, msd, qec
from ftqcr.msd import BudgetSource, LogicalErrorBudget
from ftqcr.params import HardwareParams

SURF = qec.CodeModel("surface_unrotated")


# enumeration -----------------------------------------------------------------

def _brute_fifteen(q):
    """Independent 2^15 sweep of Z patterns through the Hamming checks."""
    H = enumeration.hamming_checks()
    rej = fail = 0.0
    for bits in itertools.product((0, 1), repeat=15):
        e = np.array(bits, dtype=np.uint8)
        w = int(e.sum())
        pw = q**w * (1 - q) ** (15 - w)
        if (H @ e % 2).any():
            rej += pw
        elif w % 2:
            fail += pw
    return rej, fail


def test_fifteen_to_one_matches_full_sweep():
    for q in (1e-3, 0.05):
        assert enumeration.enumerate_protocol("fifteen_to_one", q) == pytest.approx(_brute_fifteen(q), rel=1e-12)


def test_enumeration_zero_and_leading_terms():
    assert enumeration.enumerate_protocol("fifteen_to_one", 0.0) == (0.0, 0.0)
    assert enumeration.enumerate_protocol("five_to_one", 0.0) == (0.0, 0.0)
    assert enumeration.leading_coefficients("fifteen_to_one") == {"rejection": (1, 15.0), "failure": (3, 35.0)}
    lc = enumeration.leading_coefficients("five_to_one")
    assert lc["rejection"][0] == 1 and lc["failure"][0] == 2
    with pytest.raises(ValueError):
        enumeration.enumerate_protocol("fifteen_to_one", 0.2)
    with pytest.raises(ValueError):
        enumeration.enumerate_protocol("fifteen_to_one", 0.01, max_weight=16)


def test_five_to_one_constants_come_from_circuit():
    coef = enumeration.five_to_one_circuit_coefficients()
    c = msd.get_protocol("5to1").coefficients
    for name in ("rej_prep", "rej_idle", "rej_cnot", "fail_prep", "fail_idle", "fail_cnot"):
        assert getattr(c, name) == pytest.approx(coef[name], rel=1e-12, abs=1e-15)
    assert msd.get_protocol("5to1").depth == coef["depth"]


# round_probs -----------------------------------------------------------------

def test_round_probs_examples():
    rej, fail = msd.round_probs(LogicalErrorBudget(p_idle=1e-6), 0.0, 11)
    assert rej == pytest.approx((466 + 4.13 * 11) * 1e-6, rel=1e-12)
    assert rej == pytest.approx(5.1143e-4, rel=1e-12)
    assert fail == pytest.approx(16.9e-6, rel=1e-12)
    rej, fail = msd.round_probs(LogicalErrorBudget(p_cnot=1e-6), 0.0, 11)
    assert fail == pytest.approx(1.93e-6, rel=1e-12)
    assert rej == pytest.approx(51.7e-6, rel=1e-12)
    # no logical errors: only the input terms
    q = 3e-3
    assert msd.round_probs(LogicalErrorBudget(), q, 9) == enumeration.enumerate_protocol("fifteen_to_one", q)


def test_round_probs_clipped():
    rej, fail = msd.round_probs(LogicalErrorBudget(p_idle=1.0, p_cnot=1.0), 0.1, 25)
    assert rej == 1.0 and fail == 1.0
    with pytest.raises(ValueError):
        LogicalErrorBudget(p_idle=-1e-3)


# formulas --------------------------------------------------------------------

def test_n_phys_examples():
    n_of_d = SURF.n_qubits
    assert n_of_d(7) == 85
    assert msd.n_phys_formula("15to1", (7,), (1.0,), n_of_d) == 2635
    assert msd.n_phys_formula("15to1", (7,), (0.9,), n_of_d) == math.ceil(2635 / 0.9) == 2928
    assert msd.n_phys_formula("15to1", (), (), n_of_d) == 15 * n_of_d(3)
    with pytest.raises(msd.DistillationError):
        msd.n_phys_formula("15to1", (7,), (0.0,), n_of_d)


def test_runtime_formula():
    cost = qec.LogicalOpCost("surgery")
    tau = msd.runtime_formula("15to1", (5, 15), 2e-6, cost)
    assert tau == pytest.approx((2 + 6 * 5 + 6 * 15) * 2e-6, rel=1e-12)
    tt = msd.runtime_formula("15to1", (5, 15), 2e-6, qec.LogicalOpCost("transversal"))
    assert tt == pytest.approx((2 + 2 * 6 * 2) * 2e-6, rel=1e-12)


def test_run_plan_identities():
    src = BudgetSource(SURF, 1e-3)
    rep = msd.run_plan("15to1", src, 1e-10, cycle=2e-6)
    assert rep.spacetime == rep.n_phys * rep.tau
    assert rep.q_out <= 1e-10
    n = msd.n_phys_formula("15to1", rep.plan.distances, rep.plan.r, src.n_qubits)
    assert rep.n_phys == n
    assert rep.tau == msd.runtime_formula("15to1", rep.plan.distances, 2e-6, src.cost)
    assert list(rep.plan.distances) == sorted(rep.plan.distances)
    assert rep.n_phys_with_injection >= rep.n_phys


def test_target_at_q0_needs_no_distillation():
    src = BudgetSource(SURF, 1e-3)
    rep = msd.run_plan("15to1", src, 1e-3, cycle=2e-6)
    assert rep.plan.rounds == 0
    assert rep.n_phys == 15 * SURF.n_qubits(3)


def test_unreachable_and_threshold():
    with pytest.raises(msd.DistillationError):
        msd.run_plan("15to1", BudgetSource(SURF, 1e-3), 1e-30, cycle=2e-6)
    with pytest.raises(qec.ThresholdError):
        msd.run_plan("15to1", BudgetSource(SURF, 0.02), 1e-10, cycle=2e-6, q0=0.01)


def test_monotone_targets_and_determinism():
    src = BudgetSource(SURF, 5e-4)
    reps = [msd.run_plan("15to1", src, t, cycle=2e-6) for t in (1e-6, 1e-8, 1e-10, 1e-12, 1e-14)]
    st = [r.spacetime for r in reps]
    assert st == sorted(st)
    again = msd.run_plan("15to1", src, 1e-10, cycle=2e-6)
    assert again == reps[2]


def test_factory_reports_serialize():
    rep = msd.factory(target=1e-10)
    d = rep.to_dict()
    assert d["plan"]["distances"] == list(rep.plan.distances)
    assert rep.to_csv().splitlines()[0].startswith("protocol,rounds,distances")


def test_fifteen_beats_five_at_target():
    a = msd.factory(protocol="15to1", target=1e-12)
    b = msd.factory(protocol="5to1", target=1e-12)
    assert a.spacetime < b.spacetime


def test_protocol_ordering_small_q():
    for q in (1e-4, 1e-3, 1e-2):
        assert (enumeration.enumerate_protocol("fifteen_to_one", q)[1]
                <= enumeration.enumerate_protocol("five_to_one", q)[1])
    assert msd.protocol_crossover() == 0.5


def test_xzzx_compare_properties():
    targets = (1e-8, 1e-12)
    biased = msd.xzzx_factory_compare(None, 100, targets)
    assert all(r["ratio"] > 1 for r in biased)
    sym = msd.xzzx_factory_compare(None, 0.5, targets)
    assert all(r["ratio"] == pytest.approx(1.0, rel=1e-12) for r in sym)
    hi = msd.xzzx_factory_compare(None, 1000, targets, capped=True)
    lo = msd.xzzx_factory_compare(None, 5, targets, capped=True)
    assert hi == lo


def test_unknown_protocol():
    with pytest.raises(KeyError):
        msd.get_protocol("7to1")
