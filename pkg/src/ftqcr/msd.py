"""Magic-state distillation factories.

A factory runs ``k`` rounds of a distillation protocol. Round ``i`` is
executed on logical qubits of distance ``d_i`` (grow-and-distill: distances
never shrink). Each round maps its input infidelity ``q_{i-1}`` to an output
infidelity ``q_i`` and accepts with probability ``r_i``. Logical faults
inside the round enter linearly through per-location-class coefficients.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

from scipy.optimize import brentq

from . import architecture as arch
from . import enumeration, noise, qec
from .params import HardwareParams

D_MIN, D_LIMIT, K_MAX = 3, 25, 4
INJECTION_ROUNDS = 2


class DistillationError(ValueError):
    """No admissible distillation plan exists for the request."""


@dataclass(frozen=True)
class RoundCoefficients:
    """Linear weights of logical faults in one round.

    ``p_rej = rej_prep p_prep + (rej_idle + rej_idle_d d) p_idle + rej_cnot p_cnot``
    and likewise for failure (which has no distance term).
    """

    rej_prep: float
    rej_idle: float
    rej_idle_d: float
    rej_cnot: float
    fail_prep: float
    fail_idle: float
    fail_cnot: float


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    R: int
    alpha0: float
    alpha_later: float
    order: int
    depth: int  # CNOT layers of the distillation circuit, in logical operations
    coefficients: RoundCoefficients
    base_acceptance: float = 1.0  # ideal acceptance (1/6 for 5-to-1 with T-type inputs)

    def to_dict(self) -> dict:
        out = asdict(self)
        return out


PROTOCOLS = {
    "fifteen_to_one": ProtocolSpec(
        "fifteen_to_one", R=15, alpha0=15, alpha_later=(16 + 15) / 15, order=3, depth=6,
        coefficients=RoundCoefficients(12.3, 466.0, 4.13, 51.7, 0.0, 16.9, 1.93),
    ),
    # Coefficients from exact single-fault injection on the four-ancilla check
    # circuit (enumeration.five_to_one_circuit_coefficients); depth is the
    # greedy schedule of that circuit.
    "five_to_one": ProtocolSpec(
        "five_to_one", R=5, alpha0=5, alpha_later=(6 + 5) / 5, order=2, depth=5,
        coefficients=RoundCoefficients(4 / 3, 14 / 9, 0.0, 16 / 5, 4 / 9, 44 / 27, 134 / 135),
        base_acceptance=1 / 6,
    ),
}
PROTOCOL_ALIASES = {"15to1": "fifteen_to_one", "5to1": "five_to_one", "15-to-1": "fifteen_to_one",
                    "5-to-1": "five_to_one"}


def get_protocol(name: str | ProtocolSpec) -> ProtocolSpec:
    if isinstance(name, ProtocolSpec):
        return name
    key = PROTOCOL_ALIASES.get(name, name)
    if key not in PROTOCOLS:
        raise KeyError(f"unknown protocol {name!r}; expected one of {sorted(PROTOCOLS)} or {sorted(PROTOCOL_ALIASES)}")
    return PROTOCOLS[key]


@dataclass(frozen=True)
class LogicalErrorBudget:
    p_prep: float = 0.0
    p_idle: float = 0.0
    p_cnot: float = 0.0

    def __post_init__(self):
        for name in ("p_prep", "p_idle", "p_cnot"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")


def _clip(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def input_terms(protocol, q: float, max_weight: int | None = None) -> tuple[float, float]:
    """T-input contributions ``(p_rej_T, p_fail_T)`` from the enumeration oracle."""
    return enumeration.enumerate_protocol(get_protocol(protocol).name, q, max_weight)


def round_probs(budget: LogicalErrorBudget, q: float, d: int, protocol="fifteen_to_one",
                max_weight: int | None = None) -> tuple[float, float]:
    """``(p_rej, p_fail)`` of one round at distance ``d`` with input infidelity ``q``."""
    spec = get_protocol(protocol)
    c = spec.coefficients
    rej_t, fail_t = input_terms(spec, q, max_weight)
    p_rej = (rej_t + c.rej_prep * budget.p_prep + (c.rej_idle + c.rej_idle_d * d) * budget.p_idle
             + c.rej_cnot * budget.p_cnot)
    p_fail = fail_t + c.fail_prep * budget.p_prep + c.fail_idle * budget.p_idle + c.fail_cnot * budget.p_cnot
    return _clip(p_rej), _clip(p_fail)


# Formulas ----------------------------------------------------------------

def _ceil(x: float) -> int:
    """Ceiling that ignores floating round-off just above an integer."""
    n = round(x)
    return n if abs(x - n) <= 1e-12 * max(abs(x), 1.0) else math.ceil(x)


def n_phys_formula(protocol, distances, acceptances, n_of_d: Callable[[int], int],
                   include_injection: bool = False) -> int:
    """Qubits needed to sustain one output: the largest round footprint.

    Round ``i`` must supply ``prod_{j>=i} R / r_j`` inputs per output, each on
    ``alpha_later`` logical patches of distance ``d_i``. The optional ``i = 0``
    term charges the injection layer ``alpha0`` patches at distance ``d_1``.
    """
    spec = get_protocol(protocol)
    k = len(distances)
    if k == 0:
        return _ceil(spec.alpha0 * n_of_d(D_MIN))
    if len(acceptances) != k:
        raise ValueError("need one acceptance per round")
    if any(r <= 0 for r in acceptances):
        raise DistillationError("acceptance must be positive")
    terms = []
    for i in range(k):
        mult = 1.0
        for j in range(i, k):
            mult *= spec.R / acceptances[j]
        terms.append(spec.alpha_later * n_of_d(distances[i]) * mult)
    if include_injection:
        mult = 1.0
        for j in range(k):
            mult *= spec.R / acceptances[j]
        terms.append(spec.alpha0 * n_of_d(distances[0]) * mult)
    return _ceil(max(terms))


def runtime_formula(protocol, distances, cycle: float, cost: qec.LogicalOpCost,
                    injection_rounds: int = INJECTION_ROUNDS) -> float:
    """``tau = tau_init + sum_i rounds(d_i) * depth * cycle``."""
    spec = get_protocol(protocol)
    tau = injection_rounds * cycle
    for d in distances:
        tau += cost.rounds(d) * spec.depth * cycle
    return tau


# Plans and reports -------------------------------------------------------------

@dataclass(frozen=True)
class DistillationPlan:
    protocol: str
    distances: tuple[int, ...]
    q0: float
    q: tuple[float, ...]
    r: tuple[float, ...]
    p_rej: tuple[float, ...]
    d_x: tuple[int, ...] = ()  # xzzx only

    @property
    def rounds(self) -> int:
        return len(self.distances)

    @property
    def q_out(self) -> float:
        return self.q[-1] if self.q else self.q0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["distances"] = list(self.distances)
        out["rounds"] = self.rounds
        return out


@dataclass(frozen=True)
class FactoryReport:
    n_phys: int
    tau: float
    spacetime: float
    q_out: float
    plan: DistillationPlan
    n_phys_with_injection: int = 0
    cycle_time: float = 0.0
    p_phys: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.spacetime != self.n_phys * self.tau:
            raise ValueError("spacetime must equal n_phys * tau")

    def to_dict(self) -> dict:
        return {
            "n_phys": self.n_phys,
            "n_phys_with_injection": self.n_phys_with_injection,
            "tau": self.tau,
            "spacetime": self.spacetime,
            "q_out": self.q_out,
            "cycle_time": self.cycle_time,
            "p_phys": self.p_phys,
            "plan": self.plan.to_dict(),
            **self.meta,
        }

    def csv_row(self) -> dict:
        return {
            "protocol": self.plan.protocol,
            "rounds": self.plan.rounds,
            "distances": "-".join(map(str, self.plan.distances)),
            "n_phys": self.n_phys,
            "n_phys_with_injection": self.n_phys_with_injection,
            "tau": self.tau,
            "spacetime": self.spacetime,
            "q_out": self.q_out,
            "p_phys": self.p_phys,
            **{k: v for k, v in self.meta.items() if not isinstance(v, (dict, list))},
        }

    def to_csv(self) -> str:
        row = self.csv_row()
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(row))
        w.writeheader()
        w.writerow(row)
        return buf.getvalue()


@dataclass(frozen=True)
class BudgetSource:
    """Maps a schedule distance to the logical budget and per-patch qubit count."""

    code: qec.CodeModel
    p: float
    cost: qec.LogicalOpCost = qec.LogicalOpCost()
    eta: float = 0.5

    def _pair(self, d: int) -> tuple[int, int]:
        """``(d_x, d_z)``; for xzzx the smallest odd ``d_x`` whose X term does not exceed the Z term."""
        if self.code.family != "xzzx":
            return d, d
        px_star, pz_star = qec.xzzx_thresholds(self.code, self.eta)
        z_term = self.code.az * (self.p / pz_star) ** ((d + 1) / 2)
        dx = D_MIN
        while dx < d and self.code.ax * (self.p / px_star) ** ((dx + 1) / 2) > z_term:
            dx += 2
        return dx, d

    def logical_rate(self, d: int) -> float:
        if self.code.family == "xzzx":
            dx, dz = self._pair(d)
            return qec.biased_logical_error_rate(self.code, qec.BiasedNoise(self.p, self.eta), dx, dz)
        return qec.logical_error_rate(self.code, self.p, d)

    def budget(self, d: int) -> LogicalErrorBudget:
        pl = self.logical_rate(d)
        r = self.cost.rounds(d)
        return LogicalErrorBudget(p_prep=_clip(r * pl), p_idle=_clip(pl), p_cnot=_clip(2 * r * pl))

    def n_qubits(self, d: int) -> int:
        if self.code.family == "xzzx":
            dx, dz = self._pair(d)
            return self.code.n_qubits(dx, dz)
        return self.code.n_qubits(d)


def evaluate_schedule(protocol, source: BudgetSource, q0: float, distances) -> DistillationPlan:
    spec = get_protocol(protocol)
    q, rs, rejs = [], [], []
    prev = q0
    for d in distances:
        p_rej, p_fail = round_probs(source.budget(d), min(prev, 0.1), d, spec)
        q.append(p_fail)
        rejs.append(p_rej)
        rs.append((1 - p_rej) * spec.base_acceptance)
        prev = p_fail
    dx = tuple(source._pair(d)[0] for d in distances) if source.code.family == "xzzx" else ()
    return DistillationPlan(spec.name, tuple(distances), q0, tuple(q), tuple(rs), tuple(rejs), dx)


def _admissible(plan: DistillationPlan, target: float) -> bool:
    prev = plan.q0
    for i, (qi, ri) in enumerate(zip(plan.q, plan.r)):
        if ri <= 0 or not qi < prev:
            return False
        # a round after the target is already met is wasted
        if i < plan.rounds - 1 and qi <= target:
            return False
        prev = qi
    return plan.q_out <= target


def candidate_schedules(d_min: int = D_MIN, d_max: int = D_LIMIT, k_max: int = K_MAX):
    ds = range(d_min, d_max + 1, 2)
    for k in range(1, k_max + 1):
        yield from itertools.combinations_with_replacement(ds, k)


def run_plan(protocol, source: BudgetSource, target: float, *, cycle: float, q0: float | None = None,
             c_inj: float = 1.0, d_max: int = D_LIMIT, k_max: int = K_MAX, meta: dict | None = None) -> FactoryReport:
    """Cheapest (space-time) admissible plan reaching ``target``.

    ``q0`` defaults to ``c_inj * p``. Plans are compared by space-time volume,
    then qubits, rounds and distances, so the choice is deterministic.
    """
    spec = get_protocol(protocol)
    q0 = c_inj * source.p if q0 is None else q0
    if not 0 < q0 <= 0.1:
        raise DistillationError(f"injection infidelity {q0:g} outside (0, 0.1]")
    if target <= 0:
        raise DistillationError("target must be positive")
    if source.p >= source.code.p_star:
        raise qec.ThresholdError(f"p={source.p:g} is not below threshold p*={source.code.p_star:g}")
    meta = dict(meta or {})
    if target >= q0:
        plan = DistillationPlan(spec.name, (), q0, (), (), ())
        n = n_phys_formula(spec, (), (), source.n_qubits)
        tau = runtime_formula(spec, (), cycle, source.cost)
        return FactoryReport(n, tau, n * tau, q0, plan, n, cycle, source.p, meta)
    best = None
    for sched in candidate_schedules(D_MIN, d_max, k_max):
        plan = evaluate_schedule(spec, source, q0, sched)
        if not _admissible(plan, target):
            continue
        n = n_phys_formula(spec, plan.distances, plan.r, source.n_qubits)
        tau = runtime_formula(spec, plan.distances, cycle, source.cost)
        key = (n * tau, n, plan.rounds, plan.distances)
        if best is None or key < best[0]:
            best = (key, plan, n, tau)
    if best is None:
        raise DistillationError(f"target {target:g} unreachable with d <= {d_max} and at most {k_max} rounds")
    _, plan, n, tau = best
    n_inj = n_phys_formula(spec, plan.distances, plan.r, source.n_qubits, include_injection=True)
    return FactoryReport(n, tau, n * tau, plan.q_out, plan, n_inj, cycle, source.p, meta)


def factory(params: HardwareParams | None = None, *, protocol="fifteen_to_one", layout="dense", code="surface",
            ops: str = "surgery", mode: str = "gate", target: float = 1e-12, model: str = "filter",
            policy: str = "max", eta: float = noise.DEFAULT_BIAS, c_inj: float = 1.0, code_model: qec.CodeModel | None = None,
            d_max: int = D_LIMIT, k_max: int = K_MAX) -> FactoryReport:
    """End-to-end factory estimate from hardware parameters."""
    params = params or HardwareParams()
    lay = layout if isinstance(layout, arch.Layout) else arch.Layout.from_label(layout)
    cm = code_model or qec.CodeModel.named(code)
    cost = qec.LogicalOpCost(ops)
    p = arch.physical_error(lay, params, mode, model, cm.layers, policy)
    cycle = arch.logical_cycle(lay, params, mode, cm.layers, model)
    source = BudgetSource(cm, p, cost, eta)
    meta = {"layout": lay.label, "code": cm.family, "ops": ops, "mode": mode, "target": target, "model": model}
    return run_plan(protocol, source, target, cycle=cycle, c_inj=c_inj, d_max=d_max, k_max=k_max, meta=meta)


def xzzx_factory_compare(p: float | None, eta: float, targets, *, params: HardwareParams | None = None,
                         protocol="fifteen_to_one", ops: str = "surgery", capped: bool = True,
                         base: qec.CodeModel | None = None) -> list[dict]:
    """Space-time ratio standard/xzzx per target on the sparse layout.

    ``p=None`` takes the aggregated physical error of the sparse layout.
    """
    params = params or HardwareParams()
    lay = arch.Layout("sparse")
    base = base or qec.CodeModel("surface_unrotated")
    if p is None:
        p = arch.physical_error(lay, params, "gate", "filter", base.layers)
    xz = qec.CodeModel("xzzx", A=base.A, p_star=base.p_star, capped=capped)
    cycle = arch.logical_cycle(lay, params, "gate", base.layers)
    cost = qec.LogicalOpCost(ops)
    rows = []
    for t in targets:
        std = run_plan(protocol, BudgetSource(base, p, cost), t, cycle=cycle)
        bia = run_plan(protocol, BudgetSource(xz, p, cost, eta), t, cycle=cycle)
        rows.append({"target": t, "standard": std.spacetime, "xzzx": bia.spacetime,
                     "ratio": std.spacetime / bia.spacetime})
    return rows


def protocol_crossover(q_hi: float = 0.5) -> float:
    """Input infidelity below which 15-to-1 outputs a better state than 5-to-1 (ideal Cliffords).

    Uses the full weight tables, so the bracket may exceed the 0.1 limit of
    :func:`enumeration.enumerate_protocol`.
    """
    t15, t5 = enumeration.fifteen_to_one_table(), enumeration.five_to_one_table()

    def diff(q):
        return t15.probabilities(q)[1] - t5.probabilities(q)[1]

    if diff(q_hi) <= 0:
        return q_hi
    return float(brentq(diff, 1e-6, q_hi, xtol=1e-14))
