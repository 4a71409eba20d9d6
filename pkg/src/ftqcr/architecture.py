"""Layouts, shuttling, defect-aware routing and operation latencies.

Three layouts are modelled:

``dense``
    Nearest-neighbour exchange everywhere. No shuttling.
``sparse``
    Qubits sit ``n_hops`` dots apart on a shuttle grid. Every two-qubit
    interaction moves a spin across ``lanes_per_interaction`` lanes and back.
``patched``
    Dense patches holding ``logical_per_patch`` logical qubits, joined by
    shuttle lanes. Work inside a patch is dense. Inter-patch logical
    operations pay two lane legs, shared by the logical qubits on a patch.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import noise
from .noise import PauliChannel
from .params import HardwareParams

LAYOUTS = ("dense", "patched", "sparse")
OP_KINDS = ("gate1", "gate2", "readout", "init", "lane_shuttle", "stabilizer_cycle")
MODES = ("gate", "pulse")
_DIRS = ((0, 1), (1, 0), (0, -1), (-1, 0))


class RoutingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Layout:
    kind: str = "dense"
    logical_per_patch: int = 1
    lanes_per_interaction: int = 1
    corners_per_leg: int = 1
    rows: int = 20
    cols: int = 20

    def __post_init__(self):
        if self.kind not in LAYOUTS:
            raise ValueError(f"unknown layout {self.kind!r}; expected one of {LAYOUTS}")
        if self.logical_per_patch not in (1, 2):
            raise ValueError("logical_per_patch must be 1 or 2")
        if self.lanes_per_interaction < 1 or self.corners_per_leg < 0:
            raise ValueError("lane and corner counts must be non-negative (lanes >= 1)")

    @property
    def label(self) -> str:
        return f"patched{self.logical_per_patch}" if self.kind == "patched" else self.kind

    def nodes(self):
        return [(r, c) for r in range(self.rows) for c in range(self.cols)]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "logical_per_patch": self.logical_per_patch,
            "lanes_per_interaction": self.lanes_per_interaction,
            "corners_per_leg": self.corners_per_leg,
            "grid": [self.rows, self.cols],
        }

    @classmethod
    def from_label(cls, label: str, **kwargs) -> "Layout":
        if label.startswith("patched"):
            m = int(label[len("patched"):] or 1)
            return cls("patched", logical_per_patch=m, **kwargs)
        return cls(label, **kwargs)


# Defects and routing -----------------------------------------------------

@dataclass(frozen=True)
class DefectMap:
    defective: frozenset
    seed: int
    eps_defect: float
    rows: int
    cols: int

    @classmethod
    def generate(cls, rows: int, cols: int, eps_defect: float, seed: int) -> "DefectMap":
        rng = np.random.default_rng(seed)
        mask = rng.random((rows, cols)) < eps_defect
        bad = frozenset((int(r), int(c)) for r, c in zip(*np.nonzero(mask)))
        return cls(bad, seed, eps_defect, rows, cols)

    @classmethod
    def none(cls, rows: int, cols: int) -> "DefectMap":
        return cls(frozenset(), 0, 0.0, rows, cols)


@dataclass
class Route:
    path: list
    hops: int
    corners: int
    duration: float
    remapped: tuple = ()

    def __add__(self, other: "Route") -> "Route":
        path = self.path + other.path[1:] if self.path and other.path and self.path[-1] == other.path[0] else self.path + other.path
        return Route(path, self.hops + other.hops, self.corners + other.corners, self.duration + other.duration)

    def error(self, params: HardwareParams) -> float:
        return noise.shuttle_error(params, self.hops, self.corners)

    def to_dict(self) -> dict:
        return {"path": [list(p) for p in self.path], "hops": self.hops, "corners": self.corners,
                "duration": self.duration, "remapped": [list(p) for p in self.remapped]}


def count_corners(path) -> int:
    turns = 0
    for a, b, c in zip(path, path[1:], path[2:]):
        if (b[0] - a[0], b[1] - a[1]) != (c[0] - b[0], c[1] - b[1]):
            turns += 1
    return turns


def _in_grid(node, rows, cols) -> bool:
    return 0 <= node[0] < rows and 0 <= node[1] < cols


def nearest_good(node, defects: DefectMap):
    """Closest non-defective node by grid distance (ties: row-major order)."""
    if node not in defects.defective:
        return node
    seen = {node}
    frontier = [node]
    while frontier:
        nxt = []
        for r, c in frontier:
            for dr, dc in _DIRS:
                n = (r + dr, c + dc)
                if _in_grid(n, defects.rows, defects.cols) and n not in seen:
                    seen.add(n)
                    nxt.append(n)
        good = sorted(n for n in nxt if n not in defects.defective)
        if good:
            return good[0]
        frontier = nxt
    raise RoutingError("every node is defective")


def route(layout: Layout, defects: DefectMap, src, dst, params: HardwareParams | None = None) -> Route:
    """Shortest defect-free path; among shortest paths, the fewest corners.

    Search is a Dijkstra over (node, heading) states with lexicographic cost
    (hops, corners), so hop counts equal plain breadth-first search.
    """
    params = params or HardwareParams()
    rows, cols = layout.rows, layout.cols
    src, dst = tuple(src), tuple(dst)
    for n in (src, dst):
        if not _in_grid(n, rows, cols):
            raise RoutingError(f"node {n} outside the {rows}x{cols} grid")
    remapped = []
    s, t = nearest_good(src, defects), nearest_good(dst, defects)
    if s != src:
        remapped.append(src)
    if t != dst:
        remapped.append(dst)
    if s == t:
        return Route([s], 0, 0, 0.0, tuple(remapped))
    start = (s, -1)
    best = {start: (0, 0)}
    prev = {}
    heap = [(0, 0, s, -1)]
    goal = None
    while heap:
        hops, corners, node, heading = heapq.heappop(heap)
        if best.get((node, heading)) != (hops, corners):
            continue
        if node == t:
            goal = (node, heading)
            break
        for k, (dr, dc) in enumerate(_DIRS):
            n = (node[0] + dr, node[1] + dc)
            if not _in_grid(n, rows, cols) or n in defects.defective:
                continue
            cost = (hops + 1, corners + (heading not in (-1, k)))
            if cost < best.get((n, k), (math.inf, math.inf)):
                best[(n, k)] = cost
                prev[(n, k)] = (node, heading)
                heapq.heappush(heap, (*cost, n, k))
    if goal is None:
        raise RoutingError(f"no defect-free path from {s} to {t}")
    path = [goal[0]]
    state = goal
    while state in prev:
        state = prev[state]
        path.append(state[0])
    path.reverse()
    hops = len(path) - 1
    return Route(path, hops, count_corners(path), hops * params.t_step, tuple(remapped))


def bfs_hops(rows: int, cols: int, blocked, src, dst) -> int | None:
    """Plain BFS hop count (reference implementation)."""
    if src in blocked or dst in blocked:
        return None
    dist = {src: 0}
    q = deque([src])
    while q:
        node = q.popleft()
        if node == dst:
            return dist[node]
        for dr, dc in _DIRS:
            n = (node[0] + dr, node[1] + dc)
            if _in_grid(n, rows, cols) and n not in blocked and n not in dist:
                dist[n] = dist[node] + 1
                q.append(n)
    return None


@dataclass
class ShuttleStats:
    mean_extra_hops: float
    std_extra_hops: float
    mean_extra_fraction: float
    mean_hops: float
    mean_corners: float
    mean_error: float
    mean_added_error: float
    trials: int
    failures: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def shuttle_stats(eps_defect: float, grid_size: int = 20, trials: int = 200, seed: int = 0,
                  params: HardwareParams | None = None) -> ShuttleStats:
    """Monte-Carlo detour statistics over random defect maps and endpoint pairs.

    Extra hops are measured against the defect-free Manhattan distance between
    the original endpoints. Added error compares the routed path with the
    defect-free route between the same endpoints.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    params = params or HardwareParams()
    layout = Layout("sparse", rows=grid_size, cols=grid_size)
    clean = DefectMap.none(grid_size, grid_size)
    rng = np.random.default_rng(seed)
    extra, frac, hops, corners, errs, added = [], [], [], [], [], []
    failures = 0
    for k in range(trials):
        defects = DefectMap.generate(grid_size, grid_size, eps_defect, int(rng.integers(2**31)))
        while True:
            a = tuple(int(x) for x in rng.integers(grid_size, size=2))
            b = tuple(int(x) for x in rng.integers(grid_size, size=2))
            if a != b:
                break
        try:
            r = route(layout, defects, a, b, params)
        except RoutingError:
            failures += 1
            continue
        ref = route(layout, clean, a, b, params)
        manhattan = abs(a[0] - b[0]) + abs(a[1] - b[1])
        extra.append(r.hops - manhattan)
        frac.append((r.hops - manhattan) / manhattan)
        hops.append(r.hops)
        corners.append(r.corners)
        errs.append(r.error(params))
        added.append(r.error(params) - ref.error(params))
    n = len(extra)
    if n == 0:
        raise RoutingError("all trials disconnected")
    return ShuttleStats(
        float(np.mean(extra)), float(np.std(extra, ddof=1)) if n > 1 else 0.0, float(np.mean(frac)),
        float(np.mean(hops)), float(np.mean(corners)), float(np.mean(errs)), float(np.mean(added)), n, failures,
    )


@lru_cache(maxsize=64)
def detour_fraction(eps_defect: float, grid_size: int = 20, trials: int = 400, seed: int = 0) -> float:
    """Mean relative lengthening of shuttle routes caused by defects (cached)."""
    if eps_defect == 0:
        return 0.0
    return shuttle_stats(eps_defect, grid_size, trials, seed).mean_extra_fraction


def effective_hops(params: HardwareParams) -> float:
    return params.n_hops * (1 + detour_fraction(params.eps_defect))


# Timing -------------------------------------------------------------------

@dataclass(frozen=True)
class PulseTimes:
    """Durations actually used in pulse mode after the dominance rule."""

    gate1: float
    gate2: float
    check_pair: float  # two CNOTs sharing an ancilla
    use: dict = field(default_factory=dict, hash=False, compare=False)


@lru_cache(maxsize=256)
def pulse_times(params: HardwareParams, model: str = "filter") -> PulseTimes:
    """Compressed durations from the shipped MET table.

    An operation uses its compressed pulse only when the pulse is both faster
    and no noisier than the reference gate implementation. Otherwise the gate
    timing is kept, so pulse mode can never be slower or noisier.
    """
    from .pulsetable import load_met_table

    table = load_met_table()["entries"]
    use = {}
    out = {}
    for name in ("gate1", "gate2", "check_pair"):
        entry = table[name]
        n1, n2 = entry["gate_equivalent"]
        gate_t = n1 * params.t_gate1 + n2 * params.t_gate2
        pulse_err = noise.op_error_budget("gate1" if name == "gate1" else "gate2", params, mode="pulse",
                                          model=model, pulse_entry=entry).error
        gate_err = _gate_equivalent_error(name, params, model)
        ok = entry["duration"] < gate_t and pulse_err <= gate_err
        use[name] = ok
        out[name] = entry["duration"] if ok else gate_t
    return PulseTimes(out["gate1"], out["gate2"], out["check_pair"], use)


def _gate_equivalent_error(name: str, params: HardwareParams, model: str) -> float:
    if name == "gate1":
        return noise.op_error_budget("gate1", params, model=model).error
    g2 = noise.op_error_budget("gate2", params, model=model)
    if name == "gate2":
        return g2.error
    # two CNOTs on (a, anc) then (anc, b): 3-qubit composition
    first = g2.tensor(PauliChannel.identity(1))
    second = PauliChannel.identity(1).tensor(g2)
    return first.compose(second).error


def _layers(n_layers: int) -> int:
    if n_layers < 1:
        raise ValueError("n_layers must be >= 1")
    return n_layers


def op_latency(layout: Layout, op_kind: str, params: HardwareParams, mode: str = "gate",
               n_layers: int = 4, model: str = "filter") -> float:
    """Wall time of one operation in a layout.

    ``stabilizer_cycle`` is init (parallel), ``n_layers`` CNOT layers, readout.
    Sparse layouts add ``2 * lanes_per_interaction`` lane legs per CNOT layer and
    one return leg to the readout zone. Pulse mode only affects work inside
    dense regions.
    """
    if op_kind not in OP_KINDS:
        raise ValueError(f"unknown op kind {op_kind!r}; expected one of {OP_KINDS}")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    n_layers = _layers(n_layers)
    pulse_ok = mode == "pulse" and layout.kind != "sparse"
    pt = pulse_times(params, model) if pulse_ok else None
    leg = params.t_lane
    lanes = layout.lanes_per_interaction
    if op_kind == "gate1":
        return pt.gate1 if pt else params.t_gate1
    if op_kind == "readout":
        return params.t_readout
    if op_kind == "init":
        return params.t_init
    if op_kind == "lane_shuttle":
        return 0.0 if layout.kind == "dense" else leg
    if op_kind == "gate2":
        base = pt.gate2 if pt else params.t_gate2
        return base + (2 * lanes * leg if layout.kind == "sparse" else 0.0)
    # stabilizer cycle
    if layout.kind == "sparse":
        return params.t_init + n_layers * (params.t_gate2 + 2 * lanes * leg) + leg + params.t_readout
    return params.t_init + _cnot_layers_time(n_layers, params, pt) + params.t_readout


def _cnot_layers_time(n_layers: int, params: HardwareParams, pt: PulseTimes | None) -> float:
    if pt is None:
        return n_layers * params.t_gate2
    pairs, single = divmod(n_layers, 2)
    return pairs * pt.check_pair + single * pt.gate2


def logical_cycle(layout: Layout, params: HardwareParams, mode: str = "gate", n_layers: int = 4,
                  model: str = "filter") -> float:
    """Syndrome round used for logical (inter-patch) operations."""
    base = op_latency(layout, "stabilizer_cycle", params, mode, n_layers, model)
    if layout.kind == "patched":
        return base + 2 * params.t_lane / layout.logical_per_patch
    return base


# Error budget ---------------------------------------------------------------

def op_channels(layout: Layout, params: HardwareParams, mode: str = "gate", model: str = "filter",
                n_layers: int = 4, eta: float = noise.DEFAULT_BIAS) -> dict[str, PauliChannel]:
    """Per-operation Pauli channels for one syndrome round in a layout."""
    spectrum = noise.default_spectrum(params) if model == "filter" else None
    kw = dict(model=model, spectrum=spectrum, eta=eta)
    pulse_ok = mode == "pulse" and layout.kind != "sparse"
    chans = {
        "init": noise.op_error_budget("init", params, **kw),
        "gate1": noise.op_error_budget("gate1", params, **kw),
        "gate2": noise.op_error_budget("gate2", params, **kw),
        "readout": noise.op_error_budget("readout", params, **kw),
    }
    if pulse_ok:
        from .pulsetable import load_met_table

        pt = pulse_times(params, model)
        table = load_met_table()["entries"]
        for name in ("gate1", "gate2"):
            if pt.use[name]:
                chans[name] = noise.op_error_budget(name, params, mode="pulse", pulse_entry=table[name], **kw)
        if pt.use["check_pair"]:
            pair = noise.op_error_budget("gate2", params, mode="pulse", pulse_entry=table["check_pair"], **kw)
            # weight per CNOT-equivalent: the segment replaces two gate2 operations
            chans["check_pair_per_cnot"] = _scaled_error(pair, 0.5)
    cycle = op_latency(layout, "stabilizer_cycle", params, mode, n_layers, model)
    busy = n_layers * op_latency(layout, "gate2", params, mode, n_layers, model)
    if pulse_ok:
        busy = _cnot_layers_time(n_layers, params, pulse_times(params, model))
    chans["idle"] = noise.op_error_budget("idle", params, duration=max(cycle - busy, 0.0), **kw)
    if layout.kind != "dense":
        hops = effective_hops(params)
        leg = noise.op_error_budget("shuttle", params, hops=hops, corners=layout.corners_per_leg, **kw)
        chans["shuttle_leg"] = leg
        legs = 2 * layout.lanes_per_interaction if layout.kind == "sparse" else 1
        moved = leg
        for _ in range(legs - 1):
            moved = moved.compose(leg)
        chans["gate2"] = chans["gate2"].compose(moved.tensor(PauliChannel.identity(1)))
    return chans


def _scaled_error(chan: PauliChannel, factor: float) -> PauliChannel:
    theta = chan.theta.copy()
    theta[1:] *= factor
    theta[0] = 1 - theta[1:].sum()
    return PauliChannel(theta, chan.n_qubits, chan.clipped_mass, dict(chan.meta))


def aggregate_p(channels: dict[str, PauliChannel], policy: str = "max") -> float:
    """Scalar physical error rate fed to the logical scaling law."""
    errs = [c.error for c in channels.values()]
    if policy == "max":
        return max(errs)
    if policy == "sum":
        return float(sum(errs))
    raise ValueError(f"unknown aggregation policy {policy!r}")


def aggregate_bias(channels: dict[str, PauliChannel]) -> float:
    """Bias of the dominant channel."""
    worst = max(channels.values(), key=lambda c: c.error)
    return worst.bias()


def physical_error(layout: Layout, params: HardwareParams, mode: str = "gate", model: str = "filter",
                   n_layers: int = 4, policy: str = "max", eta: float = noise.DEFAULT_BIAS) -> float:
    return aggregate_p(op_channels(layout, params, mode, model, n_layers, eta), policy)
