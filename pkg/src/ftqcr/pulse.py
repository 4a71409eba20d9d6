"""Driven Heisenberg spin-chain emulator, GRAPE and minimal evolution times.

Frequencies (``delta_b``, ``j_max``, ``i_max``, ``q_max``, amplitudes) are
ordinary frequencies in Hz. The Hamiltonian multiplies them by 2*pi. In the
frame rotating with each qubit's Zeeman term and under the rotating-wave
approximation, a tone at ``omega_i`` with quadratures ``(I_i, Q_i)`` acts on
qubit ``j`` as::

    -1/4 [(I_i - i Q_i) exp(i (omega_i - B_j) t) sigma_+^j + h.c.]

so a resonant ``I`` drive is ``-(2 pi I / 4) sigma_x`` and an X gate takes
``1 / I`` seconds. Exchange on edge ``(a, b)`` is
``J/4 [Z_a Z_b + 2 (sigma_+^a sigma_-^b exp(-i (B_a - B_b) t) + h.c.)]``.
Only Zeeman differences enter, so a common field offset is irrelevant.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
MAX_COMPARTMENT_QUBITS = 4

_SP = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1| raises spin index 1 -> 0
_Z = np.diag([1.0, -1.0]).astype(complex)


class PulseError(RuntimeError):
    pass


def _embed(op: np.ndarray, site: int, n: int) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for k in range(n):
        out = np.kron(out, op if k == site else np.eye(2))
    return out


@dataclass(frozen=True)
class DeviceModel:
    n_qubits: int
    edges: tuple[tuple[int, int], ...] = ()
    delta_b: float = 10e6
    j_max: float = 10e6
    i_max: float = 4e6
    q_max: float = 4e6
    b_offset: float = 0.0
    drive_frequencies: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        for a, b in self.edges:
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits and a != b):
                raise ValueError(f"invalid edge {(a, b)}")

    @classmethod
    def chain(cls, n_qubits: int, **kwargs) -> "DeviceModel":
        edges = tuple((i, i + 1) for i in range(n_qubits - 1))
        return cls(n_qubits, edges, **kwargs)

    @classmethod
    def grid(cls, rows: int, cols: int, **kwargs) -> "DeviceModel":
        idx = lambda r, c: r * cols + c  # noqa: E731
        edges = []
        for r in range(rows):
            for c in range(cols):
                if c + 1 < cols:
                    edges.append((idx(r, c), idx(r, c + 1)))
                if r + 1 < rows:
                    edges.append((idx(r, c), idx(r + 1, c)))
        return cls(rows * cols, tuple(edges), **kwargs)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def zeeman(self) -> np.ndarray:
        """Zeeman frequencies B_i in Hz."""
        return self.b_offset + self.delta_b * np.arange(self.n_qubits)

    @property
    def tones(self) -> np.ndarray:
        if self.drive_frequencies is None:
            return self.zeeman
        return np.asarray(self.drive_frequencies, dtype=float)

    @property
    def n_controls(self) -> int:
        return 2 * self.n_qubits + len(self.edges)

    def control_labels(self) -> list[str]:
        return (
            [f"I{i}" for i in range(self.n_qubits)]
            + [f"Q{i}" for i in range(self.n_qubits)]
            + [f"J{a}{b}" for a, b in self.edges]
        )

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.n_qubits
        lo = np.concatenate([-self.i_max * np.ones(n), -self.q_max * np.ones(n), np.zeros(len(self.edges))])
        hi = np.concatenate([self.i_max * np.ones(n), self.q_max * np.ones(n), self.j_max * np.ones(len(self.edges))])
        return lo, hi

    @cached_property
    def _generators(self) -> list[list[tuple[float, np.ndarray]]]:
        # Each control c contributes x_c * sum_k (exp(i nu_k t) O_k + h.c.), angular units.
        n = self.n_qubits
        B = TWO_PI * self.zeeman
        w = TWO_PI * self.tones
        sp = [_embed(_SP, j, n) for j in range(n)]
        gens: list[list[tuple[float, np.ndarray]]] = []
        for i in range(n):
            gens.append([(w[i] - B[j], -0.25 * TWO_PI * sp[j]) for j in range(n)])
        for i in range(n):
            gens.append([(w[i] - B[j], 0.25j * TWO_PI * sp[j]) for j in range(n)])
        for a, b in self.edges:
            zz = _embed(_Z, a, n) @ _embed(_Z, b, n)
            flip = sp[a] @ sp[b].conj().T
            gens.append([(0.0, 0.125 * TWO_PI * zz), (-(B[a] - B[b]), 0.5 * TWO_PI * flip)])
        return gens

    def max_detuning(self) -> float:
        nus = [abs(nu) for g in self._generators for nu, _ in g]
        return max(nus) if nus else 0.0

    def control_hamiltonians(self, t: float) -> np.ndarray:
        """Array (n_controls, D, D) of Hermitian generators at time t (rad/s per Hz)."""
        out = np.zeros((self.n_controls, self.dim, self.dim), dtype=complex)
        for c, terms in enumerate(self._generators):
            for nu, op in terms:
                m = np.exp(1j * nu * t) * op
                out[c] += m + m.conj().T
        return out


@dataclass
class PulseSchedule:
    duration: float
    amplitudes: np.ndarray  # (n_segments, n_controls), Hz
    drive_frequencies: tuple[float, ...] = ()

    def __post_init__(self):
        self.amplitudes = np.atleast_2d(np.asarray(self.amplitudes, dtype=float))

    @property
    def n_segments(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def segment_duration(self) -> float:
        return self.duration / self.n_segments

    @classmethod
    def zeros(cls, device: DeviceModel, duration: float, n_segments: int = 32) -> "PulseSchedule":
        return cls(duration, np.zeros((n_segments, device.n_controls)), tuple(device.tones))

    @classmethod
    def constant(cls, device: DeviceModel, duration: float, n_segments: int = 1, **controls) -> "PulseSchedule":
        labels = device.control_labels()
        amps = np.zeros((n_segments, device.n_controls))
        for name, value in controls.items():
            amps[:, labels.index(name)] = value
        return cls(duration, amps, tuple(device.tones))

    def check_bounds(self, device: DeviceModel, atol: float = 1e-9) -> None:
        lo, hi = device.bounds()
        scale = np.maximum(np.abs(hi), 1.0)
        if np.any(self.amplitudes < lo - atol * scale) or np.any(self.amplitudes > hi + atol * scale):
            raise PulseError("pulse amplitudes violate device bounds")

    def to_dict(self) -> dict:
        return {
            "duration": self.duration,
            "n_segments": self.n_segments,
            "segment_grid": [self.segment_duration * k for k in range(self.n_segments + 1)],
            "amplitudes": self.amplitudes.tolist(),
            "drive_frequencies": list(self.drive_frequencies),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "PulseSchedule":
        return cls(float(data["duration"]), np.asarray(data["amplitudes"]), tuple(data.get("drive_frequencies", ())))


@dataclass
class Piece:
    """Constant-Hamiltonian interval used for exact filter-function integrals."""

    t0: float
    dt: float
    hamiltonian: np.ndarray


@dataclass
class PropagationResult:
    unitary: np.ndarray
    checkpoints: list[tuple[float, np.ndarray]]
    pieces: list[Piece] = field(default_factory=list)
    infidelity_vs_target: float | None = None

    @property
    def duration(self) -> float:
        return self.checkpoints[-1][0]

    @property
    def dim(self) -> int:
        return self.unitary.shape[0]


def operator_infidelity(target: np.ndarray, u: np.ndarray) -> float:
    d = target.shape[0]
    return float(1.0 - abs(np.trace(target.conj().T @ u)) ** 2 / d**2)


def default_substeps(device: DeviceModel, segment_duration: float, max_phase: float = 0.05) -> int:
    nu = device.max_detuning()
    if nu == 0.0:
        return 1
    return max(1, math.ceil(nu * segment_duration / max_phase))


def _expm_herm(h: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lam, v = np.linalg.eigh(h)
    ph = np.exp(-1j * lam * dt)
    return (v * ph) @ v.conj().T, lam, v


def propagate(
    device: DeviceModel,
    pulse: PulseSchedule,
    trotter_substeps: int | None = None,
    target: np.ndarray | None = None,
) -> PropagationResult:
    """Piecewise-constant propagation with midpoint sampling inside each substep."""
    if device.n_qubits > MAX_COMPARTMENT_QUBITS:
        raise PulseError(f"at most {MAX_COMPARTMENT_QUBITS} qubits per compartment")
    if pulse.amplitudes.shape[1] != device.n_controls:
        raise PulseError("amplitude matrix does not match the device's control count")
    pulse.check_bounds(device)
    dseg = pulse.segment_duration
    sub = trotter_substeps or default_substeps(device, dseg)
    h = dseg / sub
    u = np.eye(device.dim, dtype=complex)
    checkpoints = [(0.0, u.copy())]
    pieces = []
    for m in range(pulse.n_segments):
        x = pulse.amplitudes[m]
        for s in range(sub):
            t0 = m * dseg + s * h
            ham = np.tensordot(x, device.control_hamiltonians(t0 + h / 2), axes=1)
            e, _, _ = _expm_herm(ham, h)
            u = e @ u
            pieces.append(Piece(t0, h, ham))
            checkpoints.append((t0 + h, u.copy()))
    infid = operator_infidelity(target, u) if target is not None else None
    return PropagationResult(u, checkpoints, pieces, infid)


def _objective_and_gradient(x_flat, device, target, duration, n_segments, sub, gens):
    """Infidelity and its exact gradient; ``gens`` has shape (steps, controls, D, D)."""
    x = np.repeat(x_flat.reshape(n_segments, device.n_controls), sub, axis=0)
    h = duration / n_segments / sub
    d = device.dim
    lam, v = np.linalg.eigh(np.einsum("sc,scab->sab", x, gens))
    vh = np.conj(np.swapaxes(v, 1, 2))
    props = (v * np.exp(-1j * lam * h)[:, None, :]) @ vh
    n_steps = len(props)
    fwd = np.empty((n_steps + 1, d, d), dtype=complex)  # E_s ... E_1
    fwd[0] = np.eye(d)
    for k in range(n_steps):
        fwd[k + 1] = props[k] @ fwd[k]
    back = np.empty((n_steps, d, d), dtype=complex)  # W^dag E_N ... E_{s+1}
    acc = target.conj().T
    for k in range(n_steps - 1, -1, -1):
        back[k] = acc
        acc = acc @ props[k]
    g = np.trace(target.conj().T @ fwd[-1])
    infid = 1.0 - abs(g) ** 2 / d**2
    # derivative of exp(-i h H) along H_c in the eigenbasis (divided differences)
    mu = -1j * lam * h
    emu = np.exp(mu)
    diff = mu[:, :, None] - mu[:, None, :]
    num = emu[:, :, None] - emu[:, None, :]
    small = np.abs(diff) < 1e-12
    phi = np.where(small, emu[:, :, None], num / np.where(small, 1.0, diff))
    mmat = vh @ fwd[:-1] @ back @ v
    gv = vh[:, None] @ gens @ v[:, None]
    dg = np.einsum("scij,sji,sij->sc", gv, mmat, phi) * (-1j * h)
    grad = -2.0 * np.real(np.conj(g) * dg) / d**2
    grad = grad.reshape(n_segments, sub, device.n_controls).sum(axis=1)
    return float(infid), grad.ravel()


@dataclass
class GrapeResult:
    schedule: PulseSchedule
    infidelity: float
    history: list[float]
    grad_norm: float
    converged: bool
    stagnated: bool
    seed: int


def grape_optimize(
    device: DeviceModel,
    target: np.ndarray,
    duration: float,
    n_segments: int = 32,
    seed: int = 0,
    *,
    n_starts: int = 1,
    trotter_substeps: int | None = None,
    max_iter: int = 500,
    gtol: float = 1e-10,
    init: np.ndarray | None = None,
    stop_below: float | None = None,
) -> GrapeResult:
    """Box-bounded GRAPE (L-BFGS-B on the operator infidelity).

    Bounds are enforced by projection inside L-BFGS-B, so every iterate and the
    returned schedule are feasible. ``init`` seeds the first start; further
    starts draw uniformly inside the bounds from ``seed``.
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (device.dim, device.dim):
        raise PulseError("target dimension does not match the device")
    if not np.allclose(target.conj().T @ target, np.eye(device.dim), atol=1e-9):
        raise PulseError("target is not unitary")
    if duration <= 0 or n_segments <= 0:
        raise PulseError("duration and n_segments must be positive")
    lo, hi = device.bounds()
    sub = trotter_substeps or default_substeps(device, duration / n_segments)
    h = duration / n_segments / sub
    hams_cache = np.array([device.control_hamiltonians(k * h + h / 2) for k in range(n_segments * sub)])
    rng = np.random.default_rng(seed)
    # optimise in units of the allowed range so every control has O(1) scale
    span = np.tile(hi - lo, n_segments)
    ulo, uhi = np.tile(lo, n_segments) / span, np.tile(hi, n_segments) / span
    args = (device, target, duration, n_segments, sub, hams_cache)
    best: GrapeResult | None = None
    for start in range(n_starts):
        if start == 0 and init is not None:
            x0 = np.clip(np.asarray(init, dtype=float), lo, hi)
        else:
            scale = 0.05 if start == 0 else 1.0
            mid = (lo + hi) / 2
            x0 = mid + scale * rng.uniform(-0.5, 0.5, size=(n_segments, device.n_controls)) * (hi - lo)
        history: list[float] = []
        last = {}

        def fun(u):
            f, g = _objective_and_gradient(u * span, *args)
            last["f"] = f
            return f, g * span

        history.append(fun(x0.ravel() / span)[0])
        res = minimize(
            fun,
            x0.ravel() / span,
            jac=True,
            method="L-BFGS-B",
            bounds=list(zip(ulo, uhi)),
            callback=lambda uk: history.append(_objective_and_gradient(uk * span, *args)[0]),
            options={"maxiter": max_iter, "gtol": gtol, "ftol": 1e-14},
        )
        u = np.clip(res.x, ulo, uhi)
        x = (u * span).reshape(n_segments, device.n_controls)
        x = np.clip(x, lo, hi)
        f, grad = fun(x.ravel() / span)
        # projected gradient: drop components pushing against an active bound
        pg = grad.copy()
        flat = x.ravel()
        pg[(flat <= np.tile(lo, n_segments)) & (grad > 0)] = 0
        pg[(flat >= np.tile(hi, n_segments)) & (grad < 0)] = 0
        stagnated = len(history) < 2 or history[-1] >= history[0] - 1e-15
        result = GrapeResult(
            PulseSchedule(duration, x, tuple(device.tones)),
            f, history, float(np.linalg.norm(pg)), bool(res.success), stagnated and f > 1e-12, seed,
        )
        if best is None or result.infidelity < best.infidelity:
            best = result
        if stop_below is not None and best.infidelity <= stop_below:
            break
    return best


@dataclass
class MetResult:
    duration: float
    schedule: PulseSchedule | None
    infidelity: float
    failed_below: float  # largest tried duration that missed the cutoff
    evaluations: int


def find_met(
    device: DeviceModel,
    target: np.ndarray,
    infidelity_cutoff: float = 1e-3,
    seeds: int = 3,
    *,
    n_segments: int = 32,
    grid_step: float = 0.02,
    t_start: float | None = None,
    t_max: float = 20e-6,
    max_iter: int = 300,
) -> MetResult:
    """Minimal evolution time by exponential bracketing then bisection.

    A duration succeeds when any of ``seeds`` GRAPE starts reaches the cutoff.
    Bisection stops once the bracket ratio is below ``1 + grid_step``.
    """
    if not 0 < infidelity_cutoff < 1:
        raise PulseError("cutoff must lie in (0, 1)")
    target = np.asarray(target, dtype=complex)
    if operator_infidelity(target, np.eye(device.dim)) <= infidelity_cutoff:
        return MetResult(0.0, PulseSchedule.zeros(device, 0.0 + 1e-30, 1), 0.0, 0.0, 0)
    evaluations = 0
    best_at: dict[float, GrapeResult] = {}
    warm: list[np.ndarray] = []

    def attempt(duration: float) -> GrapeResult:
        nonlocal evaluations
        evaluations += 1
        init = warm[-1] if warm else None
        res = grape_optimize(
            device, target, duration, n_segments, seed=evaluations,
            n_starts=seeds + (init is not None), init=init, max_iter=max_iter,
            stop_below=infidelity_cutoff,
        )
        best_at[duration] = res
        if res.infidelity <= infidelity_cutoff:
            warm.append(res.schedule.amplitudes)
        return res

    t = t_start or 1.0 / max(device.i_max, device.j_max)
    res = attempt(t)
    if res.infidelity <= infidelity_cutoff:
        hi = t
        lo = t / 2
        while attempt(lo).infidelity <= infidelity_cutoff:
            hi, lo = lo, lo / 2
            if lo < 1e-12:
                break
    else:
        lo = t
        hi = 2 * t
        while attempt(hi).infidelity > infidelity_cutoff:
            lo, hi = hi, 2 * hi
            if hi > t_max:
                raise PulseError(f"cutoff {infidelity_cutoff:g} unreachable within {t_max:g} s")
    while hi / lo > 1 + grid_step:
        mid = math.sqrt(lo * hi)
        if attempt(mid).infidelity <= infidelity_cutoff:
            hi = mid
        else:
            lo = mid
    final = best_at[hi]
    return MetResult(hi, final.schedule, final.infidelity, lo, evaluations)


def analytic_x_met(i_max: float, infidelity_cutoff: float) -> float:
    """Shortest resonant x-rotation reaching the cutoff: angle 2*acos(sqrt(eps)) at rate pi*I."""
    return 2 * math.acos(math.sqrt(infidelity_cutoff)) / (math.pi * i_max)


# Standard targets ----------------------------------------------------------

def gate(name: str) -> np.ndarray:
    s2 = 1 / math.sqrt(2)
    table = {
        "I": np.eye(2),
        "X": np.array([[0, 1], [1, 0]]),
        "Y": np.array([[0, -1j], [1j, 0]]),
        "Z": np.diag([1, -1]),
        "H": s2 * np.array([[1, 1], [1, -1]]),
        "S": np.diag([1, 1j]),
        "T": np.diag([1, np.exp(1j * math.pi / 4)]),
        "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
        "CZ": np.diag([1, 1, 1, -1]),
        "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]),
    }
    if name not in table:
        raise KeyError(f"unknown gate {name!r}")
    return np.asarray(table[name], dtype=complex)


def cnot(n: int, control: int, target: int) -> np.ndarray:
    dim = 2**n
    u = np.zeros((dim, dim), dtype=complex)
    for basis in range(dim):
        bits = [(basis >> (n - 1 - k)) & 1 for k in range(n)]
        if bits[control]:
            bits[target] ^= 1
        out = sum(b << (n - 1 - k) for k, b in enumerate(bits))
        u[out, basis] = 1
    return u


def check_segment(n_data: int = 2) -> np.ndarray:
    """CNOTs from ``n_data`` data qubits onto a central ancilla (chain data-anc-data)."""
    if n_data != 2:
        raise ValueError("only the two-data-qubit chain segment is implemented")
    # qubit order: data_a, ancilla, data_b
    return cnot(3, 2, 1) @ cnot(3, 0, 1)


@dataclass
class Segment:
    name: str
    target: np.ndarray
    device: DeviceModel


@dataclass
class CompressedCircuit:
    segments: list[tuple[str, MetResult]]
    total_time: float
    cumulative_infidelity: float


def compress_circuit(segments: Sequence[Segment], infidelity_cutoff: float = 1e-3, seeds: int = 3, **met_kwargs) -> CompressedCircuit:
    """Compile each <=4-qubit segment at its MET and concatenate in time."""
    out = []
    for seg in segments:
        if seg.device.n_qubits > MAX_COMPARTMENT_QUBITS:
            raise PulseError(f"segment {seg.name!r} acts on more than {MAX_COMPARTMENT_QUBITS} qubits")
        out.append((seg.name, find_met(seg.device, seg.target, infidelity_cutoff, seeds, **met_kwargs)))
    total = sum(r.duration for _, r in out)
    infid = sum(r.infidelity for _, r in out)
    return CompressedCircuit(out, total, infid)
