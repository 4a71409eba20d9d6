"""Grid sweeps over hardware and model parameters.

A sweep is the Cartesian product of its axes evaluated in row-major order
(last axis fastest). Every row carries a provenance hash of its complete
input, so identical inputs give identical hashes and any change shows up.
Failed cells keep their row and record the error message instead of metrics.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from . import __version__, msd, qec
from .params import ConfigError, HardwareParams, Scenario, parse_quantity, preset

PARAM_FIELDS = tuple(f.name for f in dataclasses.fields(HardwareParams))
MODEL_FIELDS = {
    "layout": str, "code": str, "ops": str, "mode": str, "protocol": str,
    "target": float, "eta": float, "model": str, "c_inj": float, "code.A": float, "code.p_star": float,
}
DEFAULT_OPTIONS = {
    "layout": "dense", "code": "surface", "ops": "surgery", "mode": "gate", "protocol": "15to1",
    "target": 1e-12, "eta": 100.0, "model": "filter", "c_inj": 1.0,
}
METRICS = ("n_phys", "n_phys_with_injection", "tau", "spacetime", "q_out", "rounds", "distances", "p_phys",
           "cycle_time")


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple[tuple[str, tuple], ...]
    fixed: Scenario = field(default_factory=lambda: preset("default"))
    options: dict = field(default_factory=dict)
    outputs: tuple[str, ...] = METRICS
    seed: int = 0

    def __post_init__(self):
        if not self.axes:
            raise ConfigError("a sweep needs at least one axis")
        for path, grid in self.axes:
            resolve_path(path)
            if not grid:
                raise ConfigError(f"axis {path!r} has an empty grid")
            if _is_numeric(path):
                vals = [float(v) for v in grid]
                if not all(math.isfinite(v) for v in vals):
                    raise ConfigError(f"axis {path!r} contains non-finite values")
                if vals != sorted(vals):
                    raise ConfigError(f"axis {path!r} grid must be sorted ascending")
            if len(set(grid)) != len(grid):
                raise ConfigError(f"axis {path!r} grid has duplicates")
        for key in self.options:
            resolve_path(key)
        unknown = set(self.outputs) - set(METRICS)
        if unknown:
            raise ConfigError(f"unknown output metric(s): {sorted(unknown)}")

    @property
    def axis_names(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.axes)

    @property
    def size(self) -> int:
        return math.prod(len(g) for _, g in self.axes)


def resolve_path(path: str) -> str:
    """``params.<field>``, a bare parameter name, or a model option."""
    name = path[len("params."):] if path.startswith("params.") else path
    if name in PARAM_FIELDS or name in MODEL_FIELDS:
        return name
    raise ConfigError(f"unknown sweep path {path!r}")


def _is_numeric(path: str) -> bool:
    name = resolve_path(path)
    return name in PARAM_FIELDS or MODEL_FIELDS.get(name) is float


def parse_axis(text: str) -> tuple[str, tuple]:
    """``name=v1,v2,...`` or ``name=log:lo:hi:n`` / ``name=lin:lo:hi:n``."""
    if "=" not in text:
        raise ConfigError(f"axis must look like name=values, got {text!r}")
    name, values = text.split("=", 1)
    name = name.strip()
    resolve_path(name)
    if values.startswith(("log:", "lin:")):
        kind, lo, hi, n = values.split(":")
        lo, hi, n = parse_quantity(lo), parse_quantity(hi), int(n)
        if n < 1:
            raise ConfigError("grid needs at least one point")
        if n == 1:
            grid = (lo,)
        elif kind == "log":
            grid = tuple(lo * (hi / lo) ** (i / (n - 1)) for i in range(n))
        else:
            grid = tuple(lo + (hi - lo) * i / (n - 1) for i in range(n))
        return name, grid
    parts = [v.strip() for v in values.split(",") if v.strip()]
    if _is_numeric(name):
        conv = int if name == "n_hops" else float
        return name, tuple(conv(parse_quantity(v)) for v in parts)
    return name, tuple(parts)


@lru_cache(maxsize=1)
def model_version() -> str:
    """Package version plus a digest of the shipped compressed-pulse table."""
    raw = resources.files("ftqcr").joinpath("data/met_table.json").read_bytes()
    return f"{__version__}+met.{hashlib.sha256(raw).hexdigest()[:12]}"


def provenance_hash(params: HardwareParams, options: dict, seed: int) -> str:
    blob = json.dumps({"params": params.to_dict(), "options": options, "seed": seed,
                       "version": model_version()}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _cell_inputs(spec: SweepSpec, values) -> tuple[HardwareParams, dict]:
    pchanges, options = {}, {**DEFAULT_OPTIONS, **spec.options}
    for (path, _), v in zip(spec.axes, values):
        name = resolve_path(path)
        if name in PARAM_FIELDS:
            pchanges[name] = v
        else:
            options[name] = v
    params = spec.fixed.params.replace(**pchanges) if pchanges else spec.fixed.params
    return params, options


def evaluate_cell(params: HardwareParams, options: dict) -> dict:
    """One factory estimate; the same call ``msd factory`` makes."""
    over = {k.split(".", 1)[1]: float(v) for k, v in options.items() if k.startswith("code.")}
    cm = qec.CodeModel.named(options["code"], **over)
    rep = msd.factory(params, protocol=options["protocol"], layout=options["layout"], ops=options["ops"],
                      mode=options["mode"], target=float(options["target"]), model=options["model"],
                      eta=float(options["eta"]), c_inj=float(options["c_inj"]), code_model=cm)
    return {
        "n_phys": rep.n_phys,
        "n_phys_with_injection": rep.n_phys_with_injection,
        "tau": rep.tau,
        "spacetime": rep.spacetime,
        "q_out": rep.q_out,
        "rounds": rep.plan.rounds,
        "distances": "-".join(map(str, rep.plan.distances)),
        "p_phys": rep.p_phys,
        "cycle_time": rep.cycle_time,
    }


def _run_cell(args) -> dict:
    spec, values = args
    try:
        params, options = _cell_inputs(spec, values)
    except (ConfigError, ValueError) as exc:
        return {"error": f"{type(exc).__name__}: {exc}", "scenario_hash": ""}
    row = {"scenario_hash": provenance_hash(params, options, spec.seed)}
    try:
        metrics = evaluate_cell(params, options)
        row.update({k: metrics[k] for k in spec.outputs})
        row["error"] = ""
    except (ValueError, KeyError, RuntimeError) as exc:
        row.update({k: "" for k in spec.outputs})
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


@dataclass
class SweepTable:
    columns: list[str]
    rows: list[dict]
    axes: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.rows)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepTable:
    cells = list(itertools.product(*(g for _, g in spec.axes)))
    work = [(spec, v) for v in cells]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, work))
    else:
        results = [_run_cell(w) for w in work]
    rows = []
    for values, res in zip(cells, results):
        row = dict(zip(spec.axis_names, values))
        row.update({k: res.get(k, "") for k in spec.outputs})
        row.update({"error": res["error"], "scenario_hash": res["scenario_hash"], "seed": spec.seed,
                    "model_version": model_version()})
        rows.append(row)
    columns = list(spec.axis_names) + list(spec.outputs) + ["error", "scenario_hash", "seed", "model_version"]
    return SweepTable(columns, rows, spec.axis_names)


# Emission --------------------------------------------------------------------

def _cell(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def to_csv(table: SweepTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([_cell(r[c]) for c in table.columns])
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def to_plotdata(table: SweepTable) -> dict:
    first = table.axes[0]
    groups: dict = {}
    for r in table.rows:
        groups.setdefault(r[first], []).append(r)
    return {"group_by": first, "axes": list(table.axes), "columns": table.columns,
            "groups": [{"value": k, "rows": v} for k, v in groups.items()]}


def emit(table: SweepTable, fmt: str, out: str | Path, stem: str = "sweep") -> Path:
    if not table.rows:
        raise ValueError("nothing to emit: table is empty")
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            path = out / f"{stem}.csv"
            path.write_text(to_csv(table))
        elif fmt == "json":
            path = out / f"{stem}.json"
            path.write_text(json.dumps({"columns": table.columns, "rows": table.rows}, indent=1))
        elif fmt == "plotdata":
            path = out / f"{stem}.plot.json"
            path.write_text(json.dumps(to_plotdata(table), indent=1))
        else:
            raise ValueError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write to {out}: {exc}") from exc
    return path
