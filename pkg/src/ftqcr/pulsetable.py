"""Cached compressed-pulse results used by pulse-mode resource estimates.

Searching for minimal evolution times is slow (minutes for three qubits), so
the package ships ``data/met_table.json``. :func:`build_met_table` regenerates
it; :func:`load_met_table` reads it. Each entry stores the MET, the achieved
infidelity, the optimised schedule, and the filter-function Pauli channel
evaluated for a unit-amplitude 1/f spectrum. Pauli weights scale linearly
with the spectrum amplitude to the order kept here, so callers rescale them
to their calibrated amplitude.
"""

from __future__ import annotations

import json
import math
import time
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from . import noise, pulse

TABLE_CUTOFF = 1e-4

# name -> (n_qubits, target factory, reference gate-mode equivalent in units of (t_gate1, t_gate2))
ENTRIES = {
    "gate1": (1, lambda: pulse.gate("X"), (1, 0)),
    "gate2": (2, lambda: pulse.gate("CNOT"), (0, 1)),
    "check_pair": (3, lambda: pulse.check_segment(2), (0, 2)),
}


def _entry(name: str, cutoff: float, seeds: int, f_low: float, f_high: float) -> dict:
    n, target_fn, gate_equiv = ENTRIES[name]
    device = pulse.DeviceModel.chain(n)
    target = target_fn()
    t0 = time.time()
    met = pulse.find_met(device, target, cutoff, seeds)
    prop = pulse.propagate(device, met.schedule, target=target)
    unit = noise.SpectralDensity(1.0, 2 * math.pi * f_low, 2 * math.pi * f_high)
    channels = noise.dephasing_channels(n, unit)
    gamma = noise.kernel_frequency_domain(prop, channels, rtol=1e-5)
    chan = noise.project_pauli_channel(gamma, n)
    eps = float(np.trace(gamma)) / (2**n + 1)
    return {
        "name": name,
        "n_qubits": n,
        "duration": met.duration,
        "infidelity": met.infidelity,
        "failed_below": met.failed_below,
        "gate_equivalent": list(gate_equiv),
        "eps_per_amplitude": eps,
        "theta_per_amplitude": [0.0] + list(chan.theta[1:]),
        "schedule": met.schedule.to_dict(),
        "build_seconds": time.time() - t0,
    }


def build_met_table(path: str | Path | None = None, cutoff: float = TABLE_CUTOFF, seeds: int = 3,
                    names=None, f_low: float = noise.DEFAULT_F_LOW, f_high: float = noise.DEFAULT_F_HIGH) -> dict:
    table = {
        "cutoff": cutoff,
        "seeds": seeds,
        "f_low": f_low,
        "f_high": f_high,
        "device": {"delta_b": 10e6, "j_max": 10e6, "i_max": 4e6, "q_max": 4e6},
        "entries": {name: _entry(name, cutoff, seeds, f_low, f_high) for name in (names or ENTRIES)},
    }
    if path is not None:
        Path(path).write_text(json.dumps(table, indent=1))
    return table


@lru_cache(maxsize=1)
def load_met_table() -> dict:
    text = resources.files("ftqcr").joinpath("data/met_table.json").read_text()
    return json.loads(text)


if __name__ == "__main__":  # pragma: no cover
    import sys

    out = sys.argv[1] if len(sys.argv) > 1 else str(Path(__file__).parent / "data" / "met_table.json")
    build_met_table(out)
