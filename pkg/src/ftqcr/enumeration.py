"""Exact input-error enumeration for the 15-to-1 and 5-to-1 distillation codes.

Cliffords are ideal here; only the injected T-type inputs are faulty, each
independently with probability ``q``.

15-to-1
    Inputs carry Z errors. The X-type checks of the 15-qubit code are the rows
    of the 4 x 15 Hamming parity-check matrix. A pattern is detected when its
    syndrome is non-zero. An undetected pattern is a Hamming codeword and
    flips the output exactly when its weight is odd.
5-to-1
    Inputs are T-type states (Bloch vector (1,1,1)/sqrt 3) replaced by the
    orthogonal state with probability ``q``. Every pattern is projected onto the
    5-qubit code space by state-vector algebra. Acceptance and the logical
    Bloch vector follow directly. Results are normalised by the ideal
    acceptance (1/6) so that rejection and failure are relative to a perfect
    run of the protocol.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class WeightTable:
    """Per-weight sums: rejected and failed pattern weights (unnormalised)."""

    n: int
    rejected: tuple[float, ...]  # indexed by error weight w
    failed: tuple[float, ...]
    accepted_ideal: float  # acceptance of the error-free pattern

    def probabilities(self, q: float, max_weight: int | None = None) -> tuple[float, float]:
        if not 0 <= q <= 1:
            raise ValueError("q must lie in [0, 1]")
        w_max = self.n if max_weight is None else max_weight
        if w_max > self.n or w_max < 0:
            raise ValueError(f"max_weight must lie in [0, {self.n}]")
        rej = fail = 0.0
        for w in range(w_max + 1):
            pw = q**w * (1 - q) ** (self.n - w)
            rej += self.rejected[w] * pw
            fail += self.failed[w] * pw
        return rej, fail


def hamming_checks(r: int = 4) -> np.ndarray:
    """Parity-check matrix whose columns are all non-zero r-bit vectors."""
    n = 2**r - 1
    return np.array([[(col >> (r - 1 - row)) & 1 for col in range(1, n + 1)] for row in range(r)], dtype=np.uint8)


@lru_cache(maxsize=1)
def fifteen_to_one_table() -> WeightTable:
    h = hamming_checks(4)
    n = h.shape[1]
    patterns = ((np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1).astype(np.uint8)
    weights = patterns.sum(axis=1)
    syndromes = (patterns @ h.T) % 2
    detected = syndromes.any(axis=1)
    failed = ~detected & (weights % 2 == 1)
    rej = np.bincount(weights[detected], minlength=n + 1).astype(float)
    fail = np.bincount(weights[failed], minlength=n + 1).astype(float)
    return WeightTable(n, tuple(float(x) for x in rej), tuple(float(x) for x in fail), 1.0)


_P = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}

FIVE_QUBIT_STABILIZERS = ("XZZXI", "IXZZX", "XIXZZ", "ZXIXZ")


def pauli_op(label: str) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for ch in label:
        out = np.kron(out, _P[ch])
    return out


def t_type_state(sign: int = 1) -> np.ndarray:
    """Density matrix with Bloch vector sign * (1, 1, 1)/sqrt(3)."""
    r = sign / math.sqrt(3)
    return 0.5 * (_P["I"] + r * (_P["X"] + _P["Y"] + _P["Z"]))


def code_projector(stabilizers=FIVE_QUBIT_STABILIZERS) -> np.ndarray:
    n = len(stabilizers[0])
    proj = np.eye(2**n, dtype=complex)
    for g in stabilizers:
        proj = proj @ (np.eye(2**n) + pauli_op(g)) / 2
    return proj


def logical_bloch(rho: np.ndarray, n: int = 5) -> np.ndarray:
    """Logical Bloch vector of a code-space state using X^n, Y^n, Z^n."""
    return np.real([np.trace(pauli_op(p * n) @ rho) for p in "XYZ"])


@lru_cache(maxsize=1)
def five_to_one_table() -> WeightTable:
    n = 5
    proj = code_projector()
    states = {0: t_type_state(+1), 1: t_type_state(-1)}
    results = {}
    for pattern in itertools.product((0, 1), repeat=n):
        rho = np.array([[1.0 + 0j]])
        for e in pattern:
            rho = np.kron(rho, states[e])
        out = proj @ rho @ proj
        acc = float(np.real(np.trace(out)))
        bloch = logical_bloch(out / acc) if acc > 1e-14 else np.zeros(3)
        results[pattern] = (acc, bloch)
    a0, r0 = results[(0,) * n]
    r0 = r0 / np.linalg.norm(r0)
    rej = np.zeros(n + 1)
    fail = np.zeros(n + 1)
    for pattern, (acc, bloch) in results.items():
        w = sum(pattern)
        # normalised by the ideal acceptance a0
        rej[w] += (a0 - acc) / a0
        fail[w] += acc * (1 - float(bloch @ r0)) / 2 / a0
    # round-off from the projector products leaves values at the 1e-15 level
    rej[np.abs(rej) < 1e-12] = 0.0
    fail[np.abs(fail) < 1e-12] = 0.0
    return WeightTable(n, tuple(float(x) for x in rej), tuple(float(x) for x in fail), a0)


TABLES = {"fifteen_to_one": fifteen_to_one_table, "five_to_one": five_to_one_table}


def enumerate_protocol(name: str, q: float, max_weight: int | None = None) -> tuple[float, float]:
    """``(p_rej_T, p_fail_T)`` from the input-error enumeration."""
    if name not in TABLES:
        raise KeyError(f"unknown protocol {name!r}")
    if not 0 <= q <= 0.1 + 1e-15:
        raise ValueError("q must lie in [0, 0.1]")
    return TABLES[name]().probabilities(q, max_weight)


def leading_coefficients(name: str) -> dict[str, float]:
    """Lowest-order non-zero coefficient of each probability (from pattern counts)."""
    t = TABLES[name]()
    out = {}
    for key, seq in (("rejection", t.rejected), ("failure", t.failed)):
        for w, c in enumerate(seq):
            if abs(c) > 1e-12:
                out[key] = (w, c)
                break
    return out


# --- first-order fault injection on the 5-to-1 check circuit -----------------
#
# Five T-type inputs (qubits 0-4) and four |+> ancillas (5-8). Ancilla a
# measures stabilizer a through controlled-Pauli gates, then is read out in
# the X basis; the run is kept when all four outcomes are +1. A single Pauli
# fault is inserted at one location, the circuit is simulated exactly, and the
# change in rejection and failure relative to the fault-free run gives the
# linear coefficient of that location class.

_N_DATA = 5
_N_ANC = 4


def check_schedule(stabilizers=FIVE_QUBIT_STABILIZERS) -> list[list[tuple[int, int, str]]]:
    """Greedy layering of the controlled-Pauli gates ``(ancilla, data, pauli)``."""
    layers: list[list[tuple[int, int, str]]] = []
    busy: list[set[int]] = []
    for a, g in enumerate(stabilizers):
        for q, p in enumerate(g):
            if p == "I":
                continue
            anc = _N_DATA + a
            k = 0
            while k < len(layers) and (anc in busy[k] or q in busy[k]):
                k += 1
            if k == len(layers):
                layers.append([])
                busy.append(set())
            layers[k].append((anc, q, p))
            busy[k].update((anc, q))
    return layers


def _apply_1q(psi: np.ndarray, op: np.ndarray, q: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(op, psi, axes=([1], [q])), 0, q)


def _apply_controlled(psi: np.ndarray, ctrl: int, tgt: int, pauli: str) -> np.ndarray:
    out = psi.copy()
    idx = [slice(None)] * psi.ndim
    idx[ctrl] = 1
    sub = psi[tuple(idx)]
    t = tgt if tgt < ctrl else tgt - 1
    out[tuple(idx)] = _apply_1q(sub, _P[pauli], t)
    return out


def _apply_pauli(psi: np.ndarray, label: dict[int, str]) -> np.ndarray:
    for q, p in label.items():
        if p != "I":
            psi = _apply_1q(psi, _P[p], q)
    return psi


def _t_vector() -> np.ndarray:
    w, v = np.linalg.eigh(t_type_state(+1))
    return v[:, np.argmax(w)]


def _run_check_circuit(fault: tuple[int, dict[int, str]] | None, layers) -> tuple[float, float]:
    """Return ``(acceptance, failure weight)`` with an optional fault ``(slot, paulis)``.

    Slot ``s`` means "after layer s-1"; slot 0 is right after preparation.
    """
    n = _N_DATA + _N_ANC
    t = _t_vector()
    plus = np.array([1.0, 1.0]) / math.sqrt(2)
    psi = np.array(1.0 + 0j)
    for _ in range(_N_DATA):
        psi = np.multiply.outer(psi, t)
    for _ in range(_N_ANC):
        psi = np.multiply.outer(psi, plus)
    for s in range(len(layers) + 1):
        if fault is not None and fault[0] == s:
            psi = _apply_pauli(psi, fault[1])
        if s < len(layers):
            for anc, q, p in layers[s]:
                psi = _apply_controlled(psi, anc, q, p)
    # project every ancilla onto |+>
    for _ in range(_N_ANC):
        psi = np.tensordot(psi, plus, axes=([psi.ndim - 1], [0]))
    vec = psi.reshape(-1)
    acc = float(np.vdot(vec, vec).real)
    if acc < 1e-15:
        return 0.0, 0.0
    rho = np.outer(vec, vec.conj())
    return acc, acc * float(logical_bloch(rho / acc) @ _reference_bloch()) 


@lru_cache(maxsize=1)
def _reference_bloch() -> np.ndarray:
    proj = code_projector()
    rho = np.array([[1.0 + 0j]])
    for _ in range(_N_DATA):
        rho = np.kron(rho, t_type_state(+1))
    out = proj @ rho @ proj
    r = logical_bloch(out / np.trace(out).real)
    return r / np.linalg.norm(r)


def _fault_locations(layers):
    """Yield ``(kind, slot, qubits)`` for every fault location of the circuit."""
    n = _N_DATA + _N_ANC
    for a in range(_N_ANC):
        yield "prep", 0, (_N_DATA + a,)
    for s, layer in enumerate(layers):
        active = set()
        for anc, q, _ in layer:
            yield "cnot", s + 1, (anc, q)
            active.update((anc, q))
        for q in range(n):
            if q not in active:
                yield "idle", s + 1, (q,)
    # ancilla readout errors act like a flipped outcome: fold them into prep
    for a in range(_N_ANC):
        yield "prep", len(layers), (_N_DATA + a,)


@lru_cache(maxsize=1)
def five_to_one_circuit_coefficients() -> dict[str, float]:
    """Linear rejection/failure coefficients per logical fault class.

    Each location is depolarizing: a uniformly random non-identity Pauli on
    its support. Both probabilities are normalised by the fault-free
    acceptance, matching :func:`five_to_one_table`.
    """
    layers = check_schedule()
    a0, f0 = _run_check_circuit(None, layers)
    fail0 = (a0 - f0) / 2  # zero for ideal inputs
    coef = {f"{k}_{kind}": 0.0 for k in ("rej", "fail") for kind in ("prep", "idle", "cnot")}
    for kind, slot, support in _fault_locations(layers):
        labels = [p for p in itertools.product("IXYZ", repeat=len(support)) if any(c != "I" for c in p)]
        for lab in labels:
            acc, fw = _run_check_circuit((slot, dict(zip(support, lab))), layers)
            fail = (acc - fw) / 2
            coef[f"rej_{kind}"] += (a0 - acc) / a0 / len(labels)
            coef[f"fail_{kind}"] += (fail - fail0) / a0 / len(labels)
    coef["depth"] = float(len(layers))
    return {k: (0.0 if abs(v) < 1e-12 else float(v)) for k, v in coef.items()}
