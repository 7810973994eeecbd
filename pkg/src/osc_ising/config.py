"""Plain-text ``key = value`` configuration and its mapping onto experiment objects.

Every tunable parameter has one key. Command-line flags use the same names
(``--key`` with dashes for underscores) and override values read from a file.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .harness import ExperimentSpec, GraphEntry, Machine, generated_graphs
from .network import SimConfig
from .oscillator import OscillatorParams


class ConfigError(ValueError):
    """Unknown key or unparsable value."""


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _opt_float(text: str) -> float | None:
    t = text.strip().lower()
    return None if t in ("", "auto", "none") else float(t)


def _opt_int(text: str) -> int | None:
    t = text.strip().lower()
    return None if t in ("", "auto", "none") else int(t)


def _list(item: Callable[[str], Any]) -> Callable[[str], list]:
    return lambda text: [item(x) for x in text.replace(",", " ").split()]


@dataclass(frozen=True)
class Key:
    name: str
    parse: Callable[[str], Any]
    default: Any
    help: str


_P = OscillatorParams()
_S = SimConfig()


def _spec_default(name: str):
    return ExperimentSpec.__dataclass_fields__[name].default


KEYS = {k.name: k for k in [
    # device
    Key("v_sat", float, _P.V_sat, "comparator output swing (V)"),
    Key("alpha", float, _P.alpha, "hysteresis fraction; thresholds at +/-alpha*v_sat"),
    Key("r_f", float, _P.R_F, "feedback resistance (ohm)"),
    Key("c_l", float, _P.C_L, "load capacitance (F)"),
    Key("r_d", float, _P.R_D, "diode dynamic resistance while charging (ohm)"),
    Key("r_fet", float, _P.R_FET, "EAO autaptic branch ON resistance (ohm)"),
    Key("v_knee", float, _P.V_knee, "EAO autaptic cutoff, measured from the negative rail (V)"),
    Key("knee_hysteresis", float, _P.knee_hysteresis,
        "extra voltage needed to re-enable the autaptic branch (V)"),
    # coupling and injection
    Key("c_c", float, _spec_default("c_c"), "coupling capacitance per edge (F)"),
    Key("c_c_rule", str, "fixed", "fixed, or spectral: scale c_c by 2/lambda_max(A) per graph"),
    Key("compensate_load", _bool, True, "trim each load capacitor by deg*c_c"),
    Key("a_inj", float, _spec_default("A_inj"), "SHIL current amplitude (A)"),
    Key("f_inj", _opt_float, None, "SHIL frequency (Hz); auto = 2x measured natural frequency"),
    # integration
    Key("dt", _opt_float, None, "RK4 step (s); auto = T/steps_per_cycle, capped for stability"),
    Key("steps_per_cycle", int, _S.steps_per_cycle, "steps per natural period when dt is auto"),
    Key("n_cycles", float, float(_S.n_cycles), "run length in natural periods"),
    Key("event_tol", _opt_float, None, "event bisection tolerance (s); auto = dt/1000"),
    Key("ic_spread", _opt_float, None, "initial voltage spread (V); auto = alpha*v_sat"),
    Key("sample_every", _opt_int, None, "trace decimation; auto keeps traces under 1e6 rows"),
    Key("k_cycles", int, _spec_default("k_cycles"), "cycles used for phase readout"),
    # experiment
    Key("machines", _list(Machine.parse), [Machine.EAO, Machine.SHIL], "eao, conventional, shil"),
    Key("trials", int, _spec_default("trials"), "trials per graph and machine"),
    Key("trial_seed_base", int, 0, "base of the per-trial seed hash"),
    Key("graphs", _list(str), [], "graph files"),
    Key("sizes", _list(int), [], "node counts of generated graphs"),
    Key("etas", _list(float), [], "edge densities of generated graphs"),
    Key("graphs_per_point", int, 1, "generated graphs per (size, density)"),
    Key("graph_seed", int, 0, "base of the generated-graph seed hash"),
    Key("oracle_max_n", int, _spec_default("oracle_max_n"), "run the exact oracle up to this many nodes"),
    Key("record_runtime", _bool, True, "write wall-clock runtime_ms (false writes 0)"),
    Key("out_dir", str, ".", "directory for bench.csv and compare.csv"),
]}


def parse_config(text: str, source: str = "<config>") -> dict[str, Any]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = parse_value(key, value, f"{source}:{lineno}")
    return values


def parse_value(key: str, value: str, where: str = "") -> Any:
    prefix = f"{where}: " if where else ""
    if key not in KEYS:
        raise ConfigError(f"{prefix}unknown key {key!r}")
    try:
        return KEYS[key].parse(value)
    except ValueError as e:
        raise ConfigError(f"{prefix}bad value for {key}: {e}") from None


def load_config(path) -> dict[str, Any]:
    return parse_config(Path(path).read_text(), str(path))


def resolved(values: dict[str, Any]) -> dict[str, Any]:
    """Defaults overlaid with ``values``."""
    out = {name: k.default for name, k in KEYS.items()}
    out.update(values)
    return out


def device_params(v: dict[str, Any]) -> tuple[OscillatorParams, OscillatorParams]:
    """``(conventional, eao)`` parameter sets sharing the common device keys."""
    common = dict(V_sat=v["v_sat"], alpha=v["alpha"], R_F=v["r_f"], C_L=v["c_l"], R_D=v["r_d"],
                  R_FET=v["r_fet"], V_knee=v["v_knee"], knee_hysteresis=v["knee_hysteresis"])
    return OscillatorParams.conventional(**common), OscillatorParams.eao(**common)


def sim_config(v: dict[str, Any], seed: int = 0) -> SimConfig:
    return SimConfig(dt=v["dt"], n_cycles=v["n_cycles"], event_tol=v["event_tol"], seed=seed,
                     ic_spread=v["ic_spread"], sample_every=v["sample_every"],
                     steps_per_cycle=v["steps_per_cycle"])


def experiment_spec(values: dict[str, Any], base_dir=".") -> ExperimentSpec:
    """Build an :class:`ExperimentSpec`; relative graph paths resolve against ``base_dir``."""
    v = resolved(values)
    graphs = [GraphEntry.from_file(Path(base_dir) / p) for p in v["graphs"]]
    if v["sizes"] or v["etas"]:
        if not (v["sizes"] and v["etas"]):
            raise ConfigError("generated graphs need both sizes and etas")
        graphs += generated_graphs(v["sizes"], v["etas"], v["graphs_per_point"], v["graph_seed"])
    conv, eao = device_params(v)
    return ExperimentSpec(
        graphs=tuple(graphs), machines=tuple(v["machines"]), trials=v["trials"],
        trial_seed_base=v["trial_seed_base"], conventional=conv, eao=eao, c_c=v["c_c"],
        c_c_rule=v["c_c_rule"], compensate_load=v["compensate_load"], A_inj=v["a_inj"],
        f_inj=v["f_inj"], sim=sim_config(v), k_cycles=v["k_cycles"],
        oracle_max_n=v["oracle_max_n"], record_runtime=v["record_runtime"],
    )
