"""Algorithm T-counts and the factory-count trade-off.

Every workload is reduced to Clifford + T. Toffolis cost ``c_toff`` T gates
each and arbitrary rotations cost ``synthesis_cost(precision)`` T gates.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources

from . import msd, qec

SYNTHESIS_A, SYNTHESIS_B = 0.0, 3.0
C_TOFF = 4
TROTTER_STAGES = {1: 1, 2: 2, 4: 5}  # exponential stages per step; 4th order = five 2nd-order stages
FAILURE_BUDGET = 0.1


def synthesis_cost(precision: float, a: float = SYNTHESIS_A, b: float = SYNTHESIS_B) -> int:
    """T gates for one single-qubit rotation at the given precision."""
    if not 0 < precision <= 1:
        raise ValueError("precision must lie in (0, 1]")
    return math.ceil(a + b * math.log2(1 / precision))


@dataclass(frozen=True)
class Workload:
    name: str
    logical_qubits: int
    t_count: int = 0  # native T gates
    toffoli_count: int = 0
    rotation_count: int = 0
    rotation_precision: float | None = None
    cycles: int = 0
    c_toff: int = C_TOFF
    synthesis: tuple[float, float] = (SYNTHESIS_A, SYNTHESIS_B)
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def t_per_rotation(self) -> int:
        if self.rotation_count == 0:
            return 0
        return synthesis_cost(self.rotation_precision, *self.synthesis)

    @property
    def M(self) -> int:
        """Total T count."""
        return self.t_count + self.toffoli_count * self.c_toff + self.rotation_count * self.t_per_rotation

    def to_dict(self) -> dict:
        out = asdict(self)
        out["M"] = self.M
        return out


def ising_terms(L: int) -> tuple[int, int]:
    """``(bonds, sites)`` of an open L x L square lattice."""
    return 2 * L * (L - 1), L * L


def ising_workload(n_spins: int = 100, steps: int = 20, order: int = 4, error_budget: float = 1e-3) -> Workload:
    """Transverse-field Ising dynamics with a Trotter-Suzuki product formula.

    Logical cycles assume T gates are applied one per cycle along each
    rotation layer: four bond colours plus one site layer per stage.
    """
    L = math.isqrt(n_spins)
    if L * L != n_spins:
        raise ValueError(f"n_spins must be a perfect square, got {n_spins}")
    if order not in TROTTER_STAGES:
        raise ValueError(f"unsupported product-formula order {order}")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    bonds, sites = ising_terms(L)
    stages = TROTTER_STAGES[order]
    rotations = stages * (bonds + sites) * steps
    precision = error_budget / rotations if rotations else 1.0
    layers = (4 if L > 2 else 2) + 1
    w = Workload(f"ising{n_spins}", n_spins, rotation_count=rotations, rotation_precision=precision,
                 meta={"bonds": bonds, "sites": sites, "stages": stages, "steps": steps, "order": order,
                       "error_budget": error_budget})
    cycles = stages * layers * steps * w.t_per_rotation
    return Workload(**{**asdict(w), "cycles": cycles, "meta": w.meta})


def external_workload(name: str, *, logical_qubits: int, cycles: int, t_count: int = 0, toffoli_count: int = 0,
                      c_toff: int = C_TOFF, meta: dict | None = None) -> Workload:
    if t_count < 0 or toffoli_count < 0 or (t_count == 0 and toffoli_count == 0):
        raise ValueError("need a positive t_count or toffoli_count")
    if logical_qubits <= 0 or cycles <= 0:
        raise ValueError("logical_qubits and cycles must be positive")
    return Workload(name, logical_qubits, t_count=t_count, toffoli_count=toffoli_count, cycles=cycles,
                    c_toff=c_toff, meta=dict(meta or {}))


def shipped_workloads() -> list[str]:
    root = resources.files("ftqcr").joinpath("data/workloads")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_workload(name: str, c_toff: int = C_TOFF) -> Workload:
    try:
        text = resources.files("ftqcr").joinpath(f"data/workloads/{name}.json").read_text()
    except FileNotFoundError:
        raise KeyError(f"unknown workload {name!r}; shipped: {shipped_workloads()}") from None
    cfg = json.loads(text)
    if cfg.get("generator") == "ising":
        return ising_workload(cfg["n_spins"], cfg["steps"], cfg["order"], cfg["error_budget"])
    missing = [k for k in ("logical_qubits", "cycles") if k not in cfg]
    if missing or ("t_count" not in cfg and "toffoli_count" not in cfg):
        raise ValueError(f"workload {name!r} is missing fields: {missing or ['t_count/toffoli_count']}")
    meta = {k: cfg[k] for k in ("provenance", "illustrative", "expected_M") if k in cfg}
    return external_workload(cfg["name"], logical_qubits=cfg["logical_qubits"], cycles=cfg["cycles"],
                             t_count=cfg.get("t_count", 0), toffoli_count=cfg.get("toffoli_count", 0),
                             c_toff=c_toff, meta=meta)


# Trade-off -------------------------------------------------------------------

@dataclass(frozen=True)
class TradeoffPoint:
    m: int
    msd_fraction: float
    n_phys_total: int
    wallclock: float
    n_t: int
    production_cycles: int
    d_alg: int

    @property
    def spacetime(self) -> float:
        return self.n_phys_total * self.wallclock

    def to_dict(self) -> dict:
        return {**asdict(self), "spacetime": self.spacetime}


def production_cycles(n_cycle: int, M: int, m: int) -> int:
    """Cycles for ``m`` factories, each needing ``n_cycle`` cycles per state, to make ``M`` states."""
    if m <= 0:
        raise ValueError("need at least one factory")
    return -(-n_cycle * M // m)


def tradeoff_point(workload: Workload, factory: msd.FactoryReport, m: int, code: qec.CodeModel, p: float,
                   eta: float = 100.0) -> TradeoffPoint:
    cycle = factory.cycle_time
    n_cycle = max(1, math.ceil(factory.tau / cycle - 1e-9))
    prod = production_cycles(n_cycle, workload.M, m)
    n_t = max(workload.cycles, prod)
    target = FAILURE_BUDGET / (n_t * workload.logical_qubits)
    d = qec.min_distance_for(code, p, target, eta)
    n_alg = workload.logical_qubits * (code.n_qubits(*d) if isinstance(d, tuple) else code.n_qubits(d))
    d_alg = max(d) if isinstance(d, tuple) else d
    total = n_alg + m * factory.n_phys
    return TradeoffPoint(m, m * factory.n_phys / total, total, n_t * cycle, n_t, prod, d_alg)


def pareto(points: list[TradeoffPoint]) -> list[TradeoffPoint]:
    """Points not dominated in (qubits, wallclock), sorted by qubit count."""
    pts = sorted(points, key=lambda t: (t.n_phys_total, t.wallclock, t.m))
    out: list[TradeoffPoint] = []
    for t in pts:
        if out and t.wallclock >= out[-1].wallclock:
            continue
        out.append(t)
    return out


def default_m_grid(workload: Workload, factory: msd.FactoryReport, n: int = 40) -> list[int]:
    """Geometric grid up to the factory count where T production stops binding."""
    n_cycle = max(1, math.ceil(factory.tau / factory.cycle_time - 1e-9))
    m_sat = max(1, math.ceil(n_cycle * workload.M / max(workload.cycles, 1)))
    top = max(2, 4 * m_sat)
    grid = sorted({max(1, round(top ** (i / (n - 1)))) for i in range(n)} | {m_sat})
    return grid


def tradeoff_sweep(workload: Workload, factory: msd.FactoryReport, m_values=None, *, code: qec.CodeModel,
                   p: float, eta: float = 100.0, keep_dominated: bool = False) -> list[TradeoffPoint]:
    m_values = default_m_grid(workload, factory) if m_values is None else list(m_values)
    if any(m <= 0 for m in m_values):
        raise ValueError("factory counts must be positive")
    pts = [tradeoff_point(workload, factory, m, code, p, eta) for m in m_values]
    return pts if keep_dominated else pareto(pts)


def estimate(workload: Workload, *, params=None, layout="dense", code="surface", ops="surgery", mode="gate",
             protocol="fifteen_to_one", m_values=None, eta: float = 100.0, **factory_kw):
    """Factory sized for the workload plus its trade-off frontier.

    The factory output target is ``FAILURE_BUDGET / M`` so that all T states
    together consume the same failure budget as the algorithm patches.
    """
    cm = qec.CodeModel.named(code)
    target = FAILURE_BUDGET / max(workload.M, 1)
    rep = msd.factory(params, protocol=protocol, layout=layout, code=code, ops=ops, mode=mode, target=target,
                      code_model=cm, eta=eta, **factory_kw)
    return rep, tradeoff_sweep(workload, rep, m_values, code=cm, p=rep.p_phys, eta=eta)
