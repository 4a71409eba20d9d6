"""Pauli noise channels for spin-qubit operations.

Two dephasing pictures are available. The Markovian one maps T1 and T2* to
Pauli probabilities at a given duration. The non-Markovian one feeds a 1/f
charge-noise spectrum through filter functions of the controlled evolution,
builds the second-order error generator, and projects the resulting channel
onto the nearest Pauli channel with matched fidelity.

Conventions
-----------
* Filter coefficients use plain Pauli strings: ``b_k(t) = Tr[U^dag B U P_k] / D``.
* ``F(w) = sum_k |int dt exp(i w t) b_k(t)|^2`` so a static qubit under Z noise
  gives ``tau^2 sinc^2(w tau / 2)``.
* ``eps = 1/(D+1) int dw/2pi S(w) F(w)`` and
  ``Gamma_kl = int dw/2pi S(w) conj(b_k(w)) b_l(w)``.
* The error generator uses normalised jump operators ``P_k / sqrt(D)``,
  which makes the average fidelity ``1 - kappa * gamma`` with
  ``gamma = sum_k Gamma_kk / D`` and ``kappa = D / (D + 1)``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.linalg import expm
from scipy.special import sici

from .params import HardwareParams
from .pulse import PropagationResult

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}

DEFAULT_F_LOW = 1.0  # Hz
DEFAULT_F_HIGH = 1e6  # Hz
DEFAULT_BIAS = 100.0


class NoiseError(RuntimeError):
    pass


# Markovian mapping -------------------------------------------------------

def markov_pauli_probs(t: float, params: HardwareParams) -> tuple[float, float, float]:
    if t < 0:
        raise ValueError("duration must be non-negative")
    relax = -math.expm1(-t / params.t1)
    deph = -math.expm1(-t / params.t2_star)
    px = relax / 4
    pz = deph / 2 - relax / 4
    clip = lambda p: min(max(p, 0.0), 1.0)  # noqa: E731
    return clip(px), clip(px), clip(pz)


# Spectrum ----------------------------------------------------------------

@dataclass(frozen=True)
class SpectralDensity:
    """``S(w) = A / (max(|w|, w_low) (1 + (w / w_high)^2))`` with angular w."""

    amplitude: float
    omega_low: float
    omega_high: float

    def __post_init__(self):
        if not 0 < self.omega_low < self.omega_high:
            raise ValueError("need 0 < omega_low < omega_high")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")

    def __call__(self, omega):
        w = np.abs(np.asarray(omega, dtype=float))
        return self.amplitude / (np.maximum(w, self.omega_low) * (1 + (w / self.omega_high) ** 2))

    def scaled(self, amplitude: float) -> "SpectralDensity":
        return SpectralDensity(amplitude, self.omega_low, self.omega_high)

    def to_dict(self) -> dict:
        return {"amplitude": self.amplitude, "omega_low": self.omega_low, "omega_high": self.omega_high}


def spectrum_eval(s: SpectralDensity, omega):
    return s(omega)


def correlation(s: SpectralDensity, tau: float) -> float:
    """``C(tau) = (1/pi) int_0^inf S(w) cos(w tau) dw`` by oscillatory quadrature."""
    tau = abs(tau)
    wl = s.omega_low
    plateau = s.amplitude / wl
    # [0, w_low]: S is the Lorentzian-damped plateau
    head = integrate.quad(lambda w: plateau / (1 + (w / s.omega_high) ** 2) * math.cos(w * tau), 0, wl, limit=200)[0]
    f = lambda w: s.amplitude / (w * (1 + (w / s.omega_high) ** 2))  # noqa: E731
    if tau == 0:
        tail = 0.5 * s.amplitude * math.log1p((s.omega_high / wl) ** 2)
    else:
        with warnings.catch_warnings():
            # the cosine-weighted tail converges slowly near tau ~ 1/w_high; the
            # estimate is still well inside the accuracy used downstream
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            tail = integrate.quad(f, wl, np.inf, weight="cos", wvar=tau, limlst=200)[0]
    return (head + tail) / math.pi


def correlation_band_limited(s: SpectralDensity, tau: float) -> float:
    """Closed form of the pure ``A/w`` band between the cut-offs: (A/pi)[Ci(wh t) - Ci(wl t)]."""
    ci_h = sici(s.omega_high * tau)[1]
    ci_l = sici(s.omega_low * tau)[1]
    return s.amplitude / math.pi * (ci_h - ci_l)


def correlation_log_approx(s: SpectralDensity, tau: float) -> float:
    """Intermediate-lag behaviour ``(A/pi)(ln(1/(w_low tau)) - gamma_E)``."""
    return s.amplitude / math.pi * (math.log(1 / (s.omega_low * tau)) - np.euler_gamma)


# Quadrature --------------------------------------------------------------

def _breakpoints(omega_low: float, omega_max: float) -> np.ndarray:
    start = omega_low / 10
    n_dec = max(1, math.ceil(math.log10(omega_max / start)))
    return np.concatenate([[0.0], start * 10.0 ** np.arange(n_dec + 1)])


def spectral_integral(fun, s: SpectralDensity, omega_max: float, tau: float, rtol: float = 1e-6, max_doublings: int = 12):
    """``(1/pi) int_0^omega_max S(w) fun(w) dw`` for vector-valued ``fun``.

    Composite Simpson on each decade between ``w_low/10`` and ``omega_max``
    (plus a ``[0, w_low/10]`` piece). The initial resolution resolves
    oscillations of period ``2 pi / tau``. All pieces are refined together
    until the relative change drops below ``rtol``.
    """
    edges = _breakpoints(s.omega_low, omega_max)
    base = [max(16, 2 * math.ceil((b - a) * tau / 2)) for a, b in zip(edges[:-1], edges[1:])]
    prev = None
    for level in range(max_doublings + 1):
        total = 0.0
        for (a, b), n0 in zip(zip(edges[:-1], edges[1:]), base):
            n = n0 * 2**level
            w = np.linspace(a, b, n + 1)
            vals = np.asarray(fun(w)) * s(w)
            wts = np.ones(n + 1)
            wts[1:-1:2] = 4
            wts[2:-1:2] = 2
            total = total + vals @ wts * (b - a) / (3 * n)
        total = np.asarray(total) / math.pi
        if prev is not None:
            scale = np.max(np.abs(total))
            if scale == 0 or np.max(np.abs(total - prev)) <= rtol * scale:
                return total
        prev = total
    raise NoiseError("spectral quadrature did not converge")


def static_dephasing_integral(s: SpectralDensity, t: float) -> float:
    """``I(t) = int dw/2pi S(w) t^2 sinc^2(w t / 2)``, the static-qubit Z filter weight."""
    return float(_static_integral_cached(s.amplitude, s.omega_low, s.omega_high, float(t)))


@lru_cache(maxsize=4096)
def _static_integral_cached(a, wl, wh, t):
    if t == 0 or a == 0:
        return 0.0
    s = SpectralDensity(a, wl, wh)
    omega_max = 10 * max(wh, 2 * math.pi / t)
    f = lambda w: (t * np.sinc(w * t / (2 * math.pi))) ** 2  # noqa: E731
    return float(spectral_integral(f, s, omega_max, t))


def calibrate_amplitude(t2_star: float, f_low: float = DEFAULT_F_LOW, f_high: float = DEFAULT_F_HIGH) -> float:
    """Amplitude for which free-induction decay reaches 1/e at ``t2_star``.

    Ramsey coherence under Gaussian dephasing is ``exp(-I(t))``; ``I`` is
    linear in ``A``, so the solution is ``1 / I_unit(t2_star)``.
    """
    unit = SpectralDensity(1.0, 2 * math.pi * f_low, 2 * math.pi * f_high)
    return 1.0 / static_dephasing_integral(unit, t2_star)


def default_spectrum(params: HardwareParams, f_low: float = DEFAULT_F_LOW, f_high: float = DEFAULT_F_HIGH) -> SpectralDensity:
    a = calibrate_amplitude(params.t2_star, f_low, f_high)
    return SpectralDensity(a, 2 * math.pi * f_low, 2 * math.pi * f_high)


def ramsey_coherence(s: SpectralDensity, t: float) -> float:
    return math.exp(-static_dephasing_integral(s, t))


# Pauli basis -------------------------------------------------------------

@lru_cache(maxsize=8)
def pauli_labels(n: int) -> tuple[str, ...]:
    return tuple("".join(p) for p in itertools.product("IXYZ", repeat=n))


@lru_cache(maxsize=8)
def pauli_matrices(n: int) -> np.ndarray:
    mats = []
    for label in pauli_labels(n):
        m = np.array([[1.0 + 0j]])
        for ch in label:
            m = np.kron(m, PAULI_1Q[ch])
        mats.append(m)
    return np.array(mats)


def pauli_string(label: str) -> np.ndarray:
    m = np.array([[1.0 + 0j]])
    for ch in label:
        m = np.kron(m, PAULI_1Q[ch])
    return m


@lru_cache(maxsize=8)
def commutation_signs(n: int) -> np.ndarray:
    labels = pauli_labels(n)

    def anti(a: str, b: str) -> int:
        return sum(1 for x, y in zip(a, b) if x != "I" and y != "I" and x != y) % 2

    return np.array([[-1 if anti(a, b) else 1 for b in labels] for a in labels], dtype=float)


@dataclass(frozen=True)
class NoiseChannelSpec:
    operator: str  # Pauli string, qubit 0 leftmost
    spectrum: SpectralDensity

    def __post_init__(self):
        if not self.operator or set(self.operator) - set("IXYZ") or set(self.operator) == {"I"}:
            raise ValueError(f"invalid noise operator {self.operator!r}")


def dephasing_channels(n_qubits: int, spectrum: SpectralDensity) -> list[NoiseChannelSpec]:
    """Independent 1/f Z noise on every qubit."""
    out = []
    for q in range(n_qubits):
        label = "".join("Z" if k == q else "I" for k in range(n_qubits))
        out.append(NoiseChannelSpec(label, spectrum))
    return out


# Filter functions --------------------------------------------------------

def _phi(x: np.ndarray, dt: float) -> np.ndarray:
    """int_0^dt exp(i x s) ds."""
    return dt * np.exp(0.5j * x * dt) * np.sinc(x * dt / (2 * math.pi))


def fourier_coefficients(prop: PropagationResult, operator: np.ndarray, omegas: np.ndarray) -> np.ndarray:
    """``b_k(w)`` for every Pauli k, exact for piecewise-constant Hamiltonians.

    Returns an array of shape ``(D^2, len(omegas))``.
    """
    omegas = np.asarray(omegas, dtype=float)
    d = prop.dim
    n = int(round(math.log2(d)))
    paulis = pauli_matrices(n)
    out = np.zeros((d * d, omegas.size), dtype=complex)
    if not prop.pieces:
        # no Hamiltonian recorded: treat the whole window as a static identity
        tau = prop.duration
        c = np.einsum("ab,kba->k", operator, paulis) / d
        return c[:, None] * _phi(omegas, tau)[None, :]
    for idx, piece in enumerate(prop.pieces):
        u0 = prop.checkpoints[idx][1]
        lam, v = np.linalg.eigh(piece.hamiltonian)
        w = v.conj().T @ u0
        bp = v.conj().T @ operator @ v
        q = w @ paulis @ w.conj().T  # (K, D, D)
        coef = (bp[None, :, :] * np.transpose(q, (0, 2, 1))).reshape(d * d, d * d) / d
        freq = (lam[:, None] - lam[None, :]).ravel()
        phase = _phi(omegas[None, :] + freq[:, None], piece.dt) * np.exp(1j * omegas * piece.t0)[None, :]
        out += coef @ phase
    return out


def filter_functions(prop: PropagationResult, channels: Sequence[NoiseChannelSpec], omegas) -> np.ndarray:
    """``F_alpha(w)`` for each channel, shape ``(n_channels, len(omegas))``."""
    omegas = np.asarray(omegas, dtype=float)
    return np.array([
        np.sum(np.abs(fourier_coefficients(prop, pauli_string(ch.operator), omegas)) ** 2, axis=0)
        for ch in channels
    ])


def spectral_lines(prop: PropagationResult) -> float:
    top = 0.0
    for piece in prop.pieces:
        lam = np.linalg.eigvalsh(piece.hamiltonian)
        top = max(top, float(lam.max() - lam.min()))
    return top


def _omega_max(prop: PropagationResult, s: SpectralDensity) -> float:
    return 10 * max(s.omega_high, spectral_lines(prop), 2 * math.pi / prop.duration)


def kernel_frequency_domain(prop: PropagationResult, channels: Sequence[NoiseChannelSpec], rtol: float = 1e-6) -> np.ndarray:
    """Summed ``Gamma_kl`` over channels (real symmetric ``D^2 x D^2``)."""
    k = prop.dim**2
    total = np.zeros((k, k))
    for ch in channels:
        if ch.spectrum.amplitude == 0:
            continue
        op = pauli_string(ch.operator)

        def integrand(w, op=op):
            b = fourier_coefficients(prop, op, w)
            return np.real(np.einsum("kw,lw->klw", b.conj(), b))

        total += spectral_integral(integrand, ch.spectrum, _omega_max(prop, ch.spectrum), prop.duration, rtol)
    return total


def infidelity_from_spectrum(prop: PropagationResult, channels: Sequence[NoiseChannelSpec], rtol: float = 1e-6) -> float:
    """``eps = 1/(D+1) sum_alpha int dw/2pi S_alpha F_alpha``."""
    d = prop.dim
    eps = 0.0
    for ch in channels:
        if ch.spectrum.amplitude == 0:
            continue
        op = pauli_string(ch.operator)
        f = lambda w, op=op: np.sum(np.abs(fourier_coefficients(prop, op, w)) ** 2, axis=0)  # noqa: E731
        eps += float(spectral_integral(f, ch.spectrum, _omega_max(prop, ch.spectrum), prop.duration, rtol))
    return eps / (d + 1)


def coefficient_trajectory(prop: PropagationResult, operator: np.ndarray, times: np.ndarray) -> np.ndarray:
    """``b_k(t)`` sampled at ``times`` (shape ``(D^2, len(times))``), exact within pieces."""
    d = prop.dim
    n = int(round(math.log2(d)))
    paulis = pauli_matrices(n)
    starts = np.array([p.t0 for p in prop.pieces]) if prop.pieces else np.array([0.0])
    out = np.zeros((d * d, len(times)))
    for j, t in enumerate(times):
        if prop.pieces:
            idx = min(max(int(np.searchsorted(starts, t, side="right")) - 1, 0), len(prop.pieces) - 1)
            piece = prop.pieces[idx]
            step = np.linalg.eigh(piece.hamiltonian)
            lam, v = step
            u = (v * np.exp(-1j * lam * (t - piece.t0))) @ v.conj().T @ prop.checkpoints[idx][1]
        else:
            u = np.eye(d)
        rot = u.conj().T @ operator @ u
        out[:, j] = np.real(np.einsum("ab,kba->k", rot, paulis)) / d
    return out


def kernel_time_domain(prop: PropagationResult, channel: NoiseChannelSpec, n_samples: int = 2001) -> np.ndarray:
    """``Gamma_kl = int int b_k(t1) C(t1 - t2) b_l(t2)`` on a uniform grid.

    The double integral is reduced to ``int ds C(s) R_kl(s)`` with the
    cross-correlation ``R_kl`` of the coefficient trajectories, trapezoid rule
    in both steps.
    """
    if channel.spectrum.amplitude == 0:
        k = prop.dim**2
        return np.zeros((k, k))
    tau = prop.duration
    t = np.linspace(0, tau, n_samples)
    h = t[1] - t[0]
    b = coefficient_trajectory(prop, pauli_string(channel.operator), t)
    wts = np.full(n_samples, h)
    wts[[0, -1]] = h / 2
    lags = np.arange(-(n_samples - 1), n_samples) * h
    c = np.array([correlation(channel.spectrum, s) for s in lags[n_samples - 1:]])
    c = np.concatenate([c[:0:-1], c])
    # Gamma_kl = sum_{i,j} w_i w_j b_k(t_i) C(t_i - t_j) b_l(t_j)
    cmat = c[(np.arange(n_samples)[:, None] - np.arange(n_samples)[None, :]) + n_samples - 1]
    bw = b * wts[None, :]
    return bw @ cmat @ bw.T


# Pauli channels ------------------------------------------------------------

@dataclass
class PauliChannel:
    theta: np.ndarray
    n_qubits: int
    clipped_mass: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.size != 4**self.n_qubits:
            raise ValueError("theta must have 4**n entries")

    @classmethod
    def identity(cls, n_qubits: int = 1) -> "PauliChannel":
        theta = np.zeros(4**n_qubits)
        theta[0] = 1.0
        return cls(theta, n_qubits)

    @classmethod
    def from_single(cls, px: float, py: float, pz: float) -> "PauliChannel":
        return cls(np.array([1 - px - py - pz, px, py, pz]), 1)

    @classmethod
    def biased(cls, p: float, eta: float = DEFAULT_BIAS) -> "PauliChannel":
        """Single-qubit channel of total weight ``p`` with ``p_Z / (p_X + p_Y) = eta``."""
        pz = p * eta / (eta + 1)
        return cls.from_single(p / (2 * (eta + 1)), p / (2 * (eta + 1)), pz)

    @property
    def labels(self) -> tuple[str, ...]:
        return pauli_labels(self.n_qubits)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def error(self) -> float:
        return float(1 - self.theta[0])

    def fidelity(self) -> float:
        d = self.dim
        return float((d * self.theta[0] + 1) / (d + 1))

    def tensor(self, other: "PauliChannel") -> "PauliChannel":
        return PauliChannel(np.kron(self.theta, other.theta), self.n_qubits + other.n_qubits)

    def compose(self, other: "PauliChannel") -> "PauliChannel":
        """Sequential composition (Pauli channels commute). Group law on Pauli labels."""
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        # single-qubit Pauli product table on indices I,X,Y,Z = 0..3 is XOR
        n = self.n_qubits
        idx = np.arange(4**n)
        out = np.zeros(4**n)
        for i, w in enumerate(self.theta):
            if w == 0:
                continue
            out[_pauli_xor(i, idx, n)] += w * other.theta
        return PauliChannel(out, n, self.clipped_mass + other.clipped_mass)

    def bias(self) -> float:
        """Weight of pure I/Z errors over the weight of errors with an X or Y letter."""
        z_like = sum(w for lab, w in zip(self.labels[1:], self.theta[1:]) if set(lab) <= {"I", "Z"})
        other = self.error - z_like
        return math.inf if other <= 0 else z_like / other

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "theta": {lab: float(w) for lab, w in zip(self.labels, self.theta) if w != 0 or lab == self.labels[0]},
            "error": self.error,
            "fidelity": self.fidelity(),
            "clipped_mass": self.clipped_mass,
            **({"meta": self.meta} if self.meta else {}),
        }


def _pauli_xor(i: int, idx: np.ndarray, n: int) -> np.ndarray:
    # with I,X,Y,Z -> 0,1,2,3 the single-qubit product (up to phase) is
    # 0,1,2,3 with X*Z=Y -> 1^3 = 2, so plain XOR on 2-bit digits works
    return i ^ idx


def error_generator(gamma: np.ndarray, n_qubits: int) -> np.ndarray:
    """Column-stacked superoperator of ``sum Gamma_kl (s_k rho s_l - 1/2 {s_l s_k, rho})``."""
    d = 2**n_qubits
    sig = pauli_matrices(n_qubits) / math.sqrt(d)
    m = np.tensordot(gamma, sig.conj(), axes=([1], [0]))  # sum_l Gamma_kl conj(s_l)
    jump = np.einsum("kab,kcd->acbd", m, sig).reshape(d * d, d * d)
    g = np.einsum("kl,lab,kbc->ac", gamma, sig, sig)  # sum Gamma_kl s_l s_k
    eye = np.eye(d)
    anti = 0.5 * (np.kron(eye, g) + np.kron(g.T, eye))
    return jump - anti


def pauli_diagonal(superop: np.ndarray, n_qubits: int) -> np.ndarray:
    """Diagonal of the process matrix in the Pauli basis (sums to 1 for CPTP maps)."""
    d = 2**n_qubits
    paulis = pauli_matrices(n_qubits)
    vecs = paulis.transpose(0, 2, 1).reshape(d * d, d * d)  # column-stacked vec(P)
    ptm = np.real(np.einsum("ka,ab,kb->k", vecs.conj(), superop, vecs)) / d
    return commutation_signs(n_qubits) @ ptm / d**2


def simplex_projection(v: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{x >= 0, sum x = total}``."""
    v = np.asarray(v, dtype=float)
    if total <= 0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def project_pauli_channel(gamma: np.ndarray, n_qubits: int) -> PauliChannel:
    """Nearest Pauli channel with unit trace and matched average fidelity.

    Solves ``min sum_i (theta_i - J_ii)^2`` over the error weights subject to
    ``theta_0 = 1 - gamma_bar`` (fidelity matching), ``sum theta = 1`` and
    ``theta >= 0``. Without active bounds the answer is ``J_ii + c`` with a
    common shift ``c``; otherwise it is the simplex projection of ``J_ii``.
    ``clipped_mass`` is the negative weight the unconstrained answer had.
    """
    d = 2**n_qubits
    gamma = np.asarray(gamma)
    gbar = float(np.real(np.trace(gamma))) / d
    if gbar == 0:
        return PauliChannel.identity(n_qubits)
    jdiag = pauli_diagonal(expm(error_generator(gamma, n_qubits)), n_qubits)
    theta = np.empty(d * d)
    theta[0] = 1 - gbar
    rest = jdiag[1:]
    shifted = rest + (gbar - rest.sum()) / (d * d - 1)
    clipped = max(float(-shifted[shifted < 0].sum()), 0.0)
    theta[1:] = simplex_projection(rest, gbar) if clipped > 0 else shifted
    return PauliChannel(theta, n_qubits, clipped, {"gamma": gbar, "jdiag": jdiag.tolist()})


def filter_channel(prop: PropagationResult, channels: Sequence[NoiseChannelSpec]) -> PauliChannel:
    n = int(round(math.log2(prop.dim)))
    return project_pauli_channel(kernel_frequency_domain(prop, channels), n)


# Per-operation budgets ----------------------------------------------------

OP_KINDS = ("gate1", "gate2", "readout", "init", "idle", "shuttle")


def shuttle_error(params: HardwareParams, hops: float, corners: int = 0) -> float:
    e = params.eps_shuttle_per_dot
    return 1 - (1 - e) ** hops * (1 - params.corner_factor * e) ** corners


def dephasing_channel(t: float, params: HardwareParams, model: str = "filter", spectrum: SpectralDensity | None = None) -> PauliChannel:
    """Single-qubit idle channel over ``t``: T1 always Markovian, dephasing per ``model``."""
    px, py, pz = markov_pauli_probs(t, params)
    if model == "filter":
        s = spectrum or default_spectrum(params)
        relax = -math.expm1(-t / params.t1)
        pz = max(-math.expm1(-static_dephasing_integral(s, t)) / 2 - relax / 4, 0.0)
    elif model != "markov":
        raise NoiseError(f"unknown dephasing model {model!r}")
    return PauliChannel.from_single(px, py, pz)


def op_error_budget(
    op_kind: str,
    params: HardwareParams,
    *,
    mode: str = "gate",
    model: str = "markov",
    duration: float | None = None,
    hops: float | None = None,
    corners: int = 0,
    eta: float = DEFAULT_BIAS,
    spectrum: SpectralDensity | None = None,
    pulse_entry: dict | None = None,
) -> PauliChannel:
    """Pauli channel for one physical operation.

    ``mode`` picks the timing (``gate`` uses the reference durations, ``pulse`` uses a
    compressed-pulse entry with keys ``duration`` and ``theta_per_amplitude``).
    ``model`` picks the dephasing picture (``markov`` or ``filter``).
    Non-Pauli sources (readout, shuttling) enter as Z-biased channels with
    bias ``eta``.
    """
    if op_kind not in OP_KINDS:
        raise NoiseError(f"unknown op kind {op_kind!r}; expected one of {OP_KINDS}")
    if mode not in ("gate", "pulse"):
        raise NoiseError(f"unknown mode {mode!r}")
    nq = 2 if op_kind == "gate2" else 1
    if mode == "pulse" and op_kind in ("gate1", "gate2") and pulse_entry is not None:
        return _pulse_channel(pulse_entry, params, spectrum, model)
    if duration is None:
        duration = {
            "gate1": params.t_gate1,
            "gate2": params.t_gate2,
            "readout": params.t_readout,
            "init": params.t_init,
            "idle": 0.0,
            "shuttle": (hops if hops is not None else params.n_hops) * params.t_step,
        }[op_kind]
    single = dephasing_channel(duration, params, model, spectrum) if duration > 0 else PauliChannel.identity()
    if op_kind == "readout":
        single = single.compose(PauliChannel.biased(params.eps_readout, eta))
    elif op_kind == "shuttle":
        h = params.n_hops if hops is None else hops
        single = single.compose(PauliChannel.biased(shuttle_error(params, h, corners), eta))
    chan = single
    for _ in range(nq - 1):
        chan = chan.tensor(single)
    chan.meta.update(op=op_kind, duration=duration, mode=mode, model=model)
    return chan


def _pulse_channel(entry: dict, params: HardwareParams, spectrum: SpectralDensity | None, model: str) -> PauliChannel:
    """Scale a stored per-unit-amplitude projection to the calibrated spectrum and add T1."""
    n = int(entry["n_qubits"])
    t = float(entry["duration"])
    if model == "filter":
        s = spectrum or default_spectrum(params)
        theta = np.asarray(entry["theta_per_amplitude"], dtype=float) * s.amplitude
        theta[0] = 1 - theta[1:].sum()
        deph = PauliChannel(theta, n)
    else:
        px, py, pz = markov_pauli_probs(t, params)
        one = PauliChannel.from_single(0, 0, pz)
        deph = one
        for _ in range(n - 1):
            deph = deph.tensor(one)
    relax = -math.expm1(-t / params.t1) / 4
    one = PauliChannel.from_single(relax, relax, 0.0)
    t1 = one
    for _ in range(n - 1):
        t1 = t1.tensor(one)
    out = deph.compose(t1)
    out.meta.update(op=entry.get("name", "pulse"), duration=t, mode="pulse", model=model)
    return out
