"""Command-line entry point: ``ftqcr <command> ...``.

Exit status is 0 on success, 1 for usage errors (bad flags, unreadable
configs) and 2 when the model itself rejects the request (above threshold,
unreachable target and similar).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, msd, noise, pulse, qec
from . import architecture as arch
from . import sweep as sw
from . import workloads as wl
from .params import ConfigError, parse_quantity, resolve_scenario

log = logging.getLogger("ftqcr")

EXIT_OK, EXIT_USAGE, EXIT_MODEL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--scenario", default=None, help="preset name (optimistic/default/pessimistic) or JSON config")
    p.add_argument("--layout", default="dense", help="sparse, patched (patched1/patched2) or dense")
    p.add_argument("--code", default="surface", choices=["surface", "surface-rotated", "color", "xzzx"])
    p.add_argument("--ops", default="surgery", choices=["surgery", "transversal"])
    p.add_argument("--protocol", default="15to1", choices=["5to1", "15to1"])
    p.add_argument("--mode", default="gate", choices=["gate", "pulse"])
    p.add_argument("--target", type=float, default=1e-12, help="output infidelity target")
    p.add_argument("--out", default=None, help="output directory (stdout when omitted)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--eta", type=float, default=noise.DEFAULT_BIAS, help="noise bias for xzzx")
    p.add_argument("--model", default="filter", choices=["filter", "markov"], help="dephasing model")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="ftqcr", description="Resource estimates for spin-qubit fault-tolerant factories.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pulse", parents=[common], help="GRAPE and minimal evolution times")
    p.add_argument("action", choices=["met", "grape", "table"])
    p.add_argument("--gate", default="X", help="X, Y, Z, H, S, T, CNOT, CZ, SWAP")
    p.add_argument("--duration", type=parse_quantity, default=None, help="pulse duration for grape [s]")
    p.add_argument("--cutoff", type=float, default=1e-3)
    p.add_argument("--segments", type=int, default=32)
    p.add_argument("--seeds", type=int, default=3)

    p = sub.add_parser("noise", parents=[common], help="per-operation Pauli channels")
    p.add_argument("action", choices=["markov", "budget", "spectrum"])
    p.add_argument("--duration", type=parse_quantity, default=225e-9)
    p.add_argument("--op", default="gate2", choices=list(noise.OP_KINDS))

    p = sub.add_parser("arch", parents=[common], help="layout latencies, errors and routing statistics")
    p.add_argument("action", choices=["latency", "route"])
    p.add_argument("--grid", type=int, default=20)
    p.add_argument("--trials", type=int, default=200)

    p = sub.add_parser("qec", parents=[common], help="code distances, thresholds, memory crossover")
    p.add_argument("action", choices=["distance", "threshold", "crossover"])
    p.add_argument("--p", type=float, default=None, help="physical error rate (default: from the layout)")
    p.add_argument("--d", type=int, default=7)

    p = sub.add_parser("msd", parents=[common], help="distillation factory estimates")
    p.add_argument("action", choices=["factory", "compare-xzzx"])
    p.add_argument("--targets", default="1e-8,1e-10,1e-12,1e-14")

    p = sub.add_parser("estimate", parents=[common], help="workload footprints and factory trade-off")
    p.add_argument("--workload", required=True)
    p.add_argument("--sweep", choices=["msd-fraction"], default=None)

    p = sub.add_parser("sweep", parents=[common], help="Cartesian parameter sweeps of factory estimates")
    p.add_argument("--axis", action="append", required=True, metavar="NAME=VALUES",
                   help="e.g. t_gate2=100ns,225ns or t2_star=log:10us:1ms:5 (repeatable)")
    p.add_argument("--format", action="append", choices=["csv", "json", "plotdata"], default=None)
    return parser


# Commands --------------------------------------------------------------------

def _write(args, stem: str, payload: dict | list, rows: list[dict] | None = None) -> None:
    text = json.dumps(payload, indent=1, default=_json_default)
    if args.out is None:
        print(text)
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.json").write_text(text)
    if rows:
        with open(out / f"{stem}.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    log.info("wrote %s", out)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _layout(args) -> arch.Layout:
    try:
        return arch.Layout.from_label(args.layout)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_pulse(args, params) -> None:
    if args.action == "table":
        from .pulsetable import load_met_table

        t = load_met_table()
        _write(args, "met_table", {k: {f: e[f] for f in ("duration", "infidelity", "failed_below", "n_qubits")}
                                   for k, e in t["entries"].items()})
        return
    target = pulse.gate(args.gate)
    n = int(round(np.log2(target.shape[0])))
    device = pulse.DeviceModel.chain(n)
    if args.action == "grape":
        if args.duration is None:
            raise UsageError("pulse grape needs --duration")
        res = pulse.grape_optimize(device, target, args.duration, args.segments, seed=args.seed)
        _write(args, "grape", {"gate": args.gate, "duration": args.duration, "infidelity": res.infidelity,
                               "converged": res.converged, "seed": args.seed, "schedule": res.schedule.to_dict()})
        return
    met = pulse.find_met(device, target, args.cutoff, args.seeds, n_segments=args.segments)
    out = {"gate": args.gate, "cutoff": args.cutoff, "met": met.duration, "infidelity": met.infidelity,
           "failed_below": met.failed_below, "evaluations": met.evaluations}
    if args.gate == "X":
        out["analytic"] = pulse.analytic_x_met(device.i_max, args.cutoff)
    _write(args, "met", out)


def cmd_noise(args, params) -> None:
    if args.action == "markov":
        px, py, pz = noise.markov_pauli_probs(args.duration, params)
        _write(args, "markov", {"duration": args.duration, "p_x": px, "p_y": py, "p_z": pz})
        return
    if args.action == "spectrum":
        s = noise.default_spectrum(params)
        _write(args, "spectrum", {**s.to_dict(), "ramsey_at_t2": noise.ramsey_coherence(s, params.t2_star)})
        return
    spectrum = noise.default_spectrum(params) if args.model == "filter" else None
    kw = {"duration": args.duration} if args.op == "idle" else {}
    if args.op == "shuttle":
        kw = {"hops": params.n_hops}
    chan = noise.op_error_budget(args.op, params, model=args.model, spectrum=spectrum, eta=args.eta, **kw)
    _write(args, f"budget_{args.op}", chan.to_dict())


def cmd_arch(args, params) -> None:
    lay = _layout(args)
    if args.action == "route":
        st = arch.shuttle_stats(params.eps_defect, args.grid, args.trials, args.seed, params)
        _write(args, "route", {**st.to_dict(), "eps_defect": params.eps_defect, "seed": args.seed})
        return
    cm = qec.CodeModel.named(args.code)
    lat = {k: arch.op_latency(lay, k, params, args.mode, cm.layers, args.model) for k in arch.OP_KINDS}
    chans = arch.op_channels(lay, params, args.mode, args.model, cm.layers, args.eta)
    _write(args, "latency", {"layout": lay.to_dict(), "mode": args.mode, "latency": lat,
                             "logical_cycle": arch.logical_cycle(lay, params, args.mode, cm.layers, args.model),
                             "errors": {k: c.error for k, c in chans.items()},
                             "p_phys": arch.aggregate_p(chans)})


def cmd_qec(args, params) -> None:
    lay = _layout(args)
    cm = qec.CodeModel.named(args.code)
    p = args.p if args.p is not None else arch.physical_error(lay, params, args.mode, args.model, cm.layers)
    if args.action == "distance":
        d = qec.min_distance_for(cm, p, args.target, args.eta)
        n = cm.n_qubits(*d) if isinstance(d, tuple) else cm.n_qubits(d)
        _write(args, "distance", {"code": cm.family, "p": p, "target": args.target, "d": d, "n_qubits": n})
    elif args.action == "threshold":
        t2 = qec.t2star_threshold(cm, lay, params, args.mode)
        _write(args, "threshold", {"code": cm.family, "layout": lay.label, "t2_star_threshold": t2})
    else:
        tc = np.geomspace(1e-7, 1e-4, 7)
        t2 = np.geomspace(1e-6, 1e-2, 9)
        res = qec.memory_crossover(params, cm, args.d, tc, t2)
        rows = list(res.rows())
        _write(args, "crossover", {"d": args.d, "boundary": res.boundary, "rows": rows}, rows)


def cmd_msd(args, params) -> None:
    lay = _layout(args)
    if args.action == "compare-xzzx":
        targets = [float(t) for t in args.targets.split(",")]
        rows = msd.xzzx_factory_compare(None, args.eta, targets, params=params,
                                        protocol=args.protocol, ops=args.ops)
        _write(args, "xzzx_compare", rows, rows)
        return
    rep = msd.factory(params, protocol=args.protocol, layout=lay, code=args.code, ops=args.ops, mode=args.mode,
                      target=args.target, model=args.model, eta=args.eta)
    _write(args, "factory", rep.to_dict(), [rep.csv_row()])


def cmd_estimate(args, params) -> None:
    try:
        w = wl.load_workload(args.workload)
    except KeyError as exc:
        raise UsageError(str(exc)) from exc
    rep, pts = wl.estimate(w, params=params, layout=_layout(args), code=args.code, ops=args.ops, mode=args.mode,
                           protocol=args.protocol, eta=args.eta, model=args.model)
    if args.sweep == "msd-fraction":
        rows = [{"fraction": t.msd_fraction, "n_phys": t.n_phys_total, "wallclock": t.wallclock,
                 "spacetime": t.spacetime, "factories": t.m} for t in pts]
        if args.out is None:
            w_ = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
            w_.writeheader()
            w_.writerows(rows)
        else:
            _write(args, f"tradeoff_{w.name}", {"workload": w.to_dict(), "factory": rep.to_dict(), "points": rows},
                   rows)
        return
    best = min(pts, key=lambda t: t.spacetime)
    _write(args, f"estimate_{w.name}", {"workload": w.to_dict(), "factory": rep.to_dict(), "best": best.to_dict()})


def cmd_sweep(args, params, scenario) -> None:
    axes = tuple(sw.parse_axis(a) for a in args.axis)
    options = {"layout": args.layout, "code": args.code, "ops": args.ops, "mode": args.mode,
               "protocol": args.protocol, "target": args.target, "eta": args.eta, "model": args.model}
    spec = sw.SweepSpec(axes, scenario, options, seed=args.seed)
    table = sw.run_sweep(spec, jobs=args.jobs)
    fmts = args.format or ["csv"]
    if args.out is None:
        sys.stdout.write(sw.to_csv(table))
        return
    for f in fmts:
        sw.emit(table, f, args.out)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        scenario = resolve_scenario(args.scenario)
        params = scenario.params
        if args.command == "sweep":
            cmd_sweep(args, params, scenario)
        else:
            {"pulse": cmd_pulse, "noise": cmd_noise, "arch": cmd_arch, "qec": cmd_qec, "msd": cmd_msd,
             "estimate": cmd_estimate}[args.command](args, params)
    except (UsageError, ConfigError) as exc:
        print(f"ftqcr: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, RuntimeError, OSError) as exc:
        print(f"ftqcr: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
