"""Code families, logical error scaling and logical-operation costs.

The logical error rate per syndrome round follows the usual below-threshold
law ``p_L = A (p / p*)^((d + 1) / 2)``. The constants ``A`` and ``p*`` are
calibration inputs, not derived quantities; defaults are common literature
values and every one of them can be overridden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import architecture as arch
from . import noise
from .params import HardwareParams

FAMILIES = ("surface_rotated", "surface_unrotated", "color_triangular", "xzzx")
ALIASES = {"surface": "surface_unrotated", "surface-rotated": "surface_rotated",
           "surface-unrotated": "surface_unrotated", "color": "color_triangular"}
D_MAX = 99
_REL = 1e-12  # tolerance for "meets target" comparisons


class ThresholdError(ValueError):
    """Raised when a physical error rate is at or above threshold."""


@dataclass(frozen=True)
class CodeModel:
    family: str = "surface_unrotated"
    A: float = 0.1
    p_star: float = 1e-2
    # xzzx only: per-sector prefactors and the bias dependence of p*_x
    A_x: float | None = None
    A_z: float | None = None
    bias_gain: float = 1.0
    capped: bool = True
    eta_cap: float = 5.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown code family {self.family!r}; expected one of {FAMILIES}")
        if not 0 < self.p_star < 0.5 or self.A <= 0:
            raise ValueError("need 0 < p_star < 0.5 and A > 0")

    @classmethod
    def named(cls, name: str, **overrides) -> "CodeModel":
        family = ALIASES.get(name, name)
        defaults = {"color_triangular": dict(A=0.3, p_star=3e-3)}.get(family, {})
        return cls(family, **{**defaults, **overrides})

    @property
    def layers(self) -> int:
        """CNOT layers per syndrome round."""
        return 6 if self.family == "color_triangular" else 4

    @property
    def ax(self) -> float:
        return self.A / 2 if self.A_x is None else self.A_x

    @property
    def az(self) -> float:
        return self.A / 2 if self.A_z is None else self.A_z

    def n_qubits(self, d: int, d_z: int | None = None) -> int:
        _check_distance(d)
        if self.family == "surface_rotated":
            return 2 * d * d - 1
        if self.family == "surface_unrotated":
            return d * d + (d - 1) ** 2
        if self.family == "color_triangular":
            return self.color_data(d) + 3 * (d * d - 1) // 4
        dz = d if d_z is None else d_z
        _check_distance(dz)
        return d * dz + (d - 1) * (dz - 1)

    @staticmethod
    def color_data(d: int) -> int:
        # (3d^2 - 1)/4 is a half-integer for odd d; rounding up gives the usual count
        return math.ceil((3 * d * d - 1) / 4)

    def to_dict(self) -> dict:
        out = {"family": self.family, "A": self.A, "p_star": self.p_star}
        if self.family == "xzzx":
            out.update(A_x=self.ax, A_z=self.az, bias_gain=self.bias_gain, capped=self.capped, eta_cap=self.eta_cap)
        return out


def _check_distance(d: int) -> None:
    if int(d) != d or d < 3 or d % 2 == 0:
        raise ValueError(f"code distance must be an odd integer >= 3, got {d!r}")


def above_threshold(code: CodeModel, p: float) -> bool:
    return p >= code.p_star


def logical_error_rate(code: CodeModel, p: float, d: int) -> float:
    _check_distance(d)
    if p <= 0:
        return 0.0
    return float(min(code.A * (p / code.p_star) ** ((d + 1) / 2), 1.0))


@dataclass(frozen=True)
class BiasedNoise:
    p: float
    eta: float = noise.DEFAULT_BIAS

    @property
    def r_z(self) -> float:
        return self.p * self.eta / (self.eta + 1)

    @property
    def r_x(self) -> float:
        return self.p / (2 * (self.eta + 1))

    r_y = r_x


def effective_bias(code: CodeModel, eta: float, capped: bool | None = None) -> float:
    capped = code.capped if capped is None else capped
    return min(eta, code.eta_cap) if capped else eta


def xzzx_thresholds(code: CodeModel, eta: float, capped: bool | None = None) -> tuple[float, float]:
    """``(p*_x, p*_z)``. The sector protected against the rare errors gains
    ``1 + g ln(2 eta)``; at eta = 1/2 both equal ``p*``."""
    eff = effective_bias(code, eta, capped)
    gain = 1 + code.bias_gain * math.log(max(2 * eff, 1.0))
    return code.p_star * gain, code.p_star


def biased_logical_error_rate(code: CodeModel, nz: BiasedNoise, d_x: int, d_z: int, capped: bool | None = None) -> float:
    _check_distance(d_x)
    _check_distance(d_z)
    if nz.p <= 0:
        return 0.0
    px_star, pz_star = xzzx_thresholds(code, nz.eta, capped)
    val = code.az * (nz.p / pz_star) ** ((d_z + 1) / 2) + code.ax * (nz.p / px_star) ** ((d_x + 1) / 2)
    return float(min(val, 1.0))


def _min_exponent(a: float, ratio: float, target: float) -> int:
    """Smallest n >= 2 with a * ratio**n <= target, computed in log space."""
    if a <= target:
        return 2
    n = math.log(target / a) / math.log(ratio)
    k = max(2, math.ceil(n - 1e-9))
    while a * ratio**k > target * (1 + _REL):
        k += 1
    while k > 2 and a * ratio ** (k - 1) <= target * (1 + _REL):
        k -= 1
    return k


def min_distance_for(code: CodeModel, p: float, target_pL: float, eta: float = noise.DEFAULT_BIAS,
                     capped: bool | None = None, d_max: int = D_MAX):
    """Smallest odd distance meeting ``target_pL`` per round.

    For xzzx the pair ``(d_x, d_z)`` with the fewest qubits is returned
    (ties broken by smaller ``d_z``).
    """
    if p >= code.p_star:
        raise ThresholdError(f"p={p:g} is not below threshold p*={code.p_star:g}")
    if target_pL <= 0:
        raise ValueError("target must be positive")
    if code.family != "xzzx":
        d = 2 * _min_exponent(code.A, p / code.p_star, target_pL) - 1
        if d > d_max:
            raise ThresholdError(f"target {target_pL:g} needs d={d} > {d_max}")
        return d
    nz = BiasedNoise(p, eta)
    best = None
    # p_L falls in each distance separately, so for every d_z the smallest
    # passing d_x is the only candidate worth keeping
    for dz in range(3, d_max + 1, 2):
        for dx in range(3, d_max + 1, 2):
            if biased_logical_error_rate(code, nz, dx, dz, capped) <= target_pL * (1 + _REL):
                cand = (code.n_qubits(dx, dz), dz, dx)
                if best is None or cand < best:
                    best = cand
                break
    if best is None:
        raise ThresholdError(f"target {target_pL:g} unreachable with distances <= {d_max}")
    return best[2], best[1]


@dataclass(frozen=True)
class LogicalOpCost:
    mode: str = "surgery"
    c_s: float = 1.0
    c_t: float = 2.0

    def __post_init__(self):
        if self.mode not in ("surgery", "transversal"):
            raise ValueError(f"unknown logical-op mode {self.mode!r}")

    def rounds(self, d: int) -> float:
        return self.c_s * d if self.mode == "surgery" else self.c_t


def cycle_time(code: CodeModel, layout: arch.Layout, params: HardwareParams, mode: str = "gate",
               model: str = "filter") -> float:
    return arch.op_latency(layout, "stabilizer_cycle", params, mode, code.layers, model)


def cycle_error(code: CodeModel, layout: arch.Layout, params: HardwareParams, mode: str = "gate",
                model: str = "markov", policy: str = "max") -> float:
    return arch.physical_error(layout, params, mode, model, code.layers, policy)


def t2star_threshold(code: CodeModel, layout: arch.Layout, params: HardwareParams, mode: str = "gate",
                     model: str = "markov", policy: str = "max", lo: float = 1e-8, rtol: float = 1e-6) -> float:
    """Smallest T2* (bisection in log space) with the aggregated cycle error below ``p*``."""
    hi = 2 * params.t1

    def below(t2: float) -> bool:
        return cycle_error(code, layout, params.replace(t2_star=t2), mode, model, policy) < code.p_star

    if not below(hi):
        raise ThresholdError("threshold not reached even at T2* = 2 T1")
    if below(lo):
        return lo
    while hi / lo > 1 + rtol:
        mid = math.sqrt(lo * hi)
        if below(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class Crossover:
    t_cycle: np.ndarray
    t2_star: np.ndarray
    physical: np.ndarray  # shape (len(t_cycle), len(t2_star))
    logical: np.ndarray
    boundary: list  # per t_cycle: smallest T2* with logical advantage, or None

    def rows(self):
        for i, tc in enumerate(self.t_cycle):
            for j, t2 in enumerate(self.t2_star):
                yield {"t_cycle": float(tc), "t2_star": float(t2), "physical": float(self.physical[i, j]),
                       "logical": float(self.logical[i, j]), "logical_wins": bool(self.logical[i, j] < self.physical[i, j])}


def memory_crossover(params: HardwareParams, code: CodeModel, d: int, t_cycle_grid, t2_grid) -> Crossover:
    """Idle physical qubit versus a distance-``d`` logical memory over one cycle.

    The physical side is Markovian dephasing over the cycle. The logical side
    feeds the full Pauli error of one cycle (T1, T2*, readout) into the
    scaling law.
    """
    tc = np.asarray(list(t_cycle_grid), dtype=float)
    t2 = np.asarray(list(t2_grid), dtype=float)
    if tc.size == 0 or t2.size == 0:
        raise ValueError("grids must be non-empty")
    phys = np.zeros((tc.size, t2.size))
    logi = np.zeros_like(phys)
    for i, t in enumerate(tc):
        for j, s in enumerate(t2):
            phys[i, j] = -math.expm1(-t / s) / 2
            relax = -math.expm1(-t / params.t1)
            p = min(phys[i, j] + relax / 4 + params.eps_readout, 1.0)
            logi[i, j] = logical_error_rate(code, p, d)
    boundary = []
    for i in range(tc.size):
        wins = [t2[j] for j in range(t2.size) if logi[i, j] < phys[i, j]]
        boundary.append(min(wins) if wins else None)
    return Crossover(tc, t2, phys, logi, boundary)


def logical_budget(code: CodeModel, p: float, d: int, cost: LogicalOpCost) -> dict[str, float]:
    """Per-operation logical failure probabilities at distance ``d``."""
    pl = logical_error_rate(code, p, d)
    r = cost.rounds(d)
    clip = lambda x: min(max(x, 0.0), 1.0)  # noqa: E731
    return {"p_idle": clip(pl), "p_cnot": clip(2 * r * pl), "p_prep": clip(r * pl)}


def with_overrides(code: CodeModel, **kw) -> CodeModel:
    return replace(code, **kw)
