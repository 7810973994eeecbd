"""Command-line interface: ``gen``, ``oracle``, ``solve``, ``spectrum`` and ``bench``.

Exit status is 0 on success, 1 on usage errors and 2 on runtime failures.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .analysis import (
    UnsynchronizedError,
    device_sweep_grid,
    graph_readout,
    sweep_harmonic_ratio,
    write_sweep_csv,
)
from .graphlib import GraphFormatError, brute_force_maxcut, cut_value, gen_random, load_graph, save_graph
from .harness import (
    ExperimentSpec,
    GraphEntry,
    Machine,
    compare_machines,
    mean_deviation,
    run_experiment,
    write_bench_csv,
    write_compare_csv,
)
from .network import InstabilityError, run
from .oscillator import NonOscillationError, OscillatorParams

EXPERIMENT_KEYS = {"machines", "trials", "trial_seed_base", "graphs", "sizes", "etas",
                   "graphs_per_point", "graph_seed", "oracle_max_n", "record_runtime", "out_dir"}
SOLVE_KEYS = [k for k in cfgmod.KEYS if k not in EXPERIMENT_KEYS]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_key_flags(p: argparse.ArgumentParser, names) -> None:
    g = p.add_argument_group("parameters (override config-file keys)")
    for name in names:
        k = cfgmod.KEYS[name]
        g.add_argument("--" + name.replace("_", "-"), dest="key_" + name, metavar="VALUE",
                       default=argparse.SUPPRESS, help=f"{k.help} [default: {_show(k.default)}]")


def _show(value) -> str:
    if isinstance(value, list):
        return ",".join(getattr(v, "value", str(v)) for v in value) or "none"
    return "auto" if value is None else str(value)


def _collect(args, config_path) -> dict:
    values = cfgmod.load_config(config_path) if config_path else {}
    for dest, raw in vars(args).items():
        if dest.startswith("key_"):
            name = dest[4:]
            values[name] = cfgmod.parse_value(name, raw, "--" + name.replace("_", "-"))
    return values


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="osc-ising", description="Oscillator Ising machine simulator for MaxCut.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log per-trial diagnostics")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("gen", help="write a random graph file")
    p.add_argument("--n", type=int, required=True, help="node count")
    p.add_argument("--eta", type=float, required=True, help="edge density in [0, 1]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output graph file")

    p = sub.add_parser("oracle", help="exact MaxCut of a graph file by enumeration")
    p.add_argument("graph", help="graph file")

    p = sub.add_parser("solve", help="run one machine on one graph")
    p.add_argument("--machine", required=True, help="eao, conventional or shil")
    p.add_argument("--graph", required=True, help="graph file")
    p.add_argument("--seed", type=int, default=0, help="initial-condition seed")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--trace", help="write sampled waveforms to this CSV")
    p.add_argument("--events", help="write comparator flip events to this CSV")
    _add_key_flags(p, SOLVE_KEYS)

    p = sub.add_parser("spectrum", help="harmonic-ratio sweep over tA/T")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--grid", default="0.05:0.45:0.05", help="start:stop:step of tA/T, inclusive")
    p.add_argument("--tau2", type=float, default=OscillatorParams().tau2, help="slow decay constant (s)")
    p.add_argument("--alpha", type=float, default=OscillatorParams().alpha, help="hysteresis fraction")
    p.add_argument("--knee-fraction", type=float, default=0.52,
                   help="knee voltage above the negative rail, in units of V_sat")
    p.add_argument("--n-periods", type=int, default=32)
    p.add_argument("--samples-per-period", type=int, default=1024)

    p = sub.add_parser("bench", help="trial batch from a config file; writes bench.csv and compare.csv")
    p.add_argument("--config", help="key = value config file")
    _add_key_flags(p, list(cfgmod.KEYS))
    return ap


def _grid(text: str) -> list[float]:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"--grid expects start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise UsageError("--grid needs step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(count)]


def cmd_gen(args) -> int:
    save_graph(gen_random(args.n, args.eta, args.seed), args.out)
    return 0


def cmd_oracle(args) -> int:
    res = brute_force_maxcut(load_graph(args.graph))
    print(f"maxcut {res.cut}")
    print("spins " + " ".join("+" if s > 0 else "-" for s in res.spins))
    return 0


def cmd_solve(args) -> int:
    try:
        machine = Machine.parse(args.machine)
    except ValueError as e:
        raise UsageError(str(e)) from None
    v = cfgmod.resolved(_collect(args, args.config))
    g = load_graph(args.graph)
    conv, eao = cfgmod.device_params(v)
    spec = ExperimentSpec(graphs=(GraphEntry(Path(args.graph).stem, g),), machines=(machine,),
                          conventional=conv, eao=eao, c_c=v["c_c"], c_c_rule=v["c_c_rule"],
                          compensate_load=v["compensate_load"], A_inj=v["a_inj"], f_inj=v["f_inj"])
    tr = run(spec.params_for(machine), spec.coupling_for(g), spec.injection_for(machine),
             cfgmod.sim_config(v, args.seed))
    if args.trace:
        tr.to_csv(args.trace)
    if args.events:
        tr.events_to_csv(args.events)
    print(f"machine {machine.value}")
    try:
        r = graph_readout(tr, g, v["k_cycles"])
    except UnsynchronizedError as e:
        print("synchronized false")
        print(f"no valid readout: {e}", file=sys.stderr)
        return 2
    print("synchronized true")
    print(f"cut {cut_value(g, r.spins)}")
    print(f"residual_deg {r.residual_deg:.3f}")
    print("phases_deg " + " ".join(f"{x:.2f}" for x in np.degrees(r.phases)))
    print("spins " + " ".join("+" if s > 0 else "-" for s in r.spins))
    return 0


def cmd_spectrum(args) -> int:
    grid = device_sweep_grid(_grid(args.grid), args.tau2, args.alpha, args.knee_fraction)
    rows = sweep_harmonic_ratio(grid, args.n_periods, args.samples_per_period)
    write_sweep_csv(rows, args.out if args.out else sys.stdout)
    return 0


def cmd_bench(args) -> int:
    values = _collect(args, args.config)
    base = Path(args.config).parent if args.config else Path(".")
    spec = cfgmod.experiment_spec(values, base)
    out = Path(cfgmod.resolved(values)["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    results = run_experiment(spec)
    rows = compare_machines(results)
    write_bench_csv(results, out / "bench.csv")
    write_compare_csv(rows, out / "compare.csv")
    synced = sum(r.synchronized for r in results)
    print(f"{len(results)} trials, {synced} synchronized -> {out / 'bench.csv'}")
    for r in rows:
        print(f"{r.graph_id}: best_eao={r.best_eao} best_shil={r.best_shil} "
              f"deviation_pct={r.deviation_pct:.2f}")
    if rows:
        print(f"mean deviation_pct {mean_deviation(rows):.2f}")
    return 0


COMMANDS = {"gen": cmd_gen, "oracle": cmd_oracle, "solve": cmd_solve,
            "spectrum": cmd_spectrum, "bench": cmd_bench}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except SystemExit as e:  # --help
        return 0 if e.code in (0, None) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, cfgmod.ConfigError) as e:
        print(f"osc-ising {args.command}: {e}", file=sys.stderr)
        return 1
    except (OSError, GraphFormatError, ValueError, NonOscillationError, InstabilityError) as e:
        print(f"osc-ising {args.command}: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())
