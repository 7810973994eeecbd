"""Trial batches, machine comparison and CSV emission."""
from __future__ import annotations

import csv
import enum
import functools
import hashlib
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .analysis import UnsynchronizedError, graph_readout
from .graphlib import Graph, brute_force_maxcut, cut_value, gen_random, load_graph
from .network import CouplingSpec, InjectionConfig, InstabilityError, SimConfig, run
from .oscillator import NonOscillationError, OscillatorParams, simulate_single

log = logging.getLogger(__name__)

BENCH_HEADER = ["graph_id", "n", "eta", "machine", "trial", "cut", "optimum",
                "residual_deg", "synchronized", "runtime_ms"]
COMPARE_HEADER = ["graph_id", "best_eao", "best_shil", "deviation_pct"]
THREADS_ENV = "OSC_ISING_THREADS"


class Machine(str, enum.Enum):
    EAO = "EAO_no_injection"
    CONVENTIONAL = "Conventional_no_injection"
    SHIL = "Conventional_SHIL"

    @classmethod
    def parse(cls, text: str) -> "Machine":
        key = text.strip().lower()
        aliases = {"eao": cls.EAO, "conventional": cls.CONVENTIONAL, "conv": cls.CONVENTIONAL,
                   "shil": cls.SHIL}
        if key in aliases:
            return aliases[key]
        for m in cls:
            if m.value.lower() == key:
                return m
        raise ValueError(f"unknown machine {text!r}; use eao, conventional or shil")


def stable_seed(*parts) -> int:
    """64-bit seed from a stable hash of ``parts`` (independent of PYTHONHASHSEED)."""
    digest = hashlib.blake2b(":".join(str(p) for p in parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class GraphEntry:
    graph_id: str
    graph: Graph
    eta: float = math.nan

    @classmethod
    def from_file(cls, path) -> "GraphEntry":
        g = load_graph(path)
        return cls(os.path.splitext(os.path.basename(str(path)))[0], g, g.density())


def generated_graphs(sizes: Iterable[int], etas: Iterable[float], per_point: int,
                     graph_seed: int = 0) -> list[GraphEntry]:
    """``per_point`` random graphs for every (size, density) pair."""
    out = []
    for n in sizes:
        for eta in etas:
            for k in range(per_point):
                g = gen_random(n, eta, stable_seed("graph", graph_seed, n, eta, k))
                out.append(GraphEntry(f"n{n}_eta{eta:g}_g{k}", g, float(eta)))
    return out


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce a batch of trials.

    ``c_c_rule = "spectral"`` rescales the coupling per graph to
    ``c_c * 2 / lambda_max(A)``, so ``c_c`` is the value a cycle graph would
    get. ``f_inj = None`` means twice the measured natural frequency of the
    conventional device.
    """

    graphs: tuple[GraphEntry, ...]
    machines: tuple[Machine, ...] = (Machine.EAO, Machine.SHIL)
    trials: int = 10
    trial_seed_base: int = 0
    conventional: OscillatorParams = field(default_factory=OscillatorParams.conventional)
    eao: OscillatorParams = field(default_factory=OscillatorParams.eao)
    c_c: float = 1e-9
    c_c_rule: str = "fixed"
    compensate_load: bool = True
    A_inj: float = 80e-6
    f_inj: float | None = None
    sim: SimConfig = field(default_factory=SimConfig)
    k_cycles: int = 10
    oracle_max_n: int = 20
    record_runtime: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.graphs:
            raise ValueError("no graphs given")
        if not self.machines:
            raise ValueError("no machines given")
        if self.c_c_rule not in ("fixed", "spectral"):
            raise ValueError(f"c_c_rule must be 'fixed' or 'spectral', got {self.c_c_rule!r}")
        ids = [e.graph_id for e in self.graphs]
        if len(set(ids)) != len(ids):
            raise ValueError("graph ids must be unique")
        if self.f_inj is not None and not self.f_inj > 0:
            raise ValueError("f_inj must be positive")

    def params_for(self, machine: Machine) -> OscillatorParams:
        return self.eao if machine is Machine.EAO else self.conventional

    def coupling_for(self, g: Graph) -> CouplingSpec:
        c = self.c_c
        if self.c_c_rule == "spectral" and g.m:
            c = self.c_c * 2.0 / float(np.linalg.eigvalsh(g.adjacency().astype(float))[-1])
        return CouplingSpec(g, c, self.compensate_load)

    def injection_for(self, machine: Machine) -> InjectionConfig:
        if machine is not Machine.SHIL:
            return InjectionConfig()
        f = self.f_inj if self.f_inj is not None else 2.0 * natural_frequency(self.conventional)
        return InjectionConfig(True, self.A_inj, f)


@functools.lru_cache(maxsize=32)
def natural_frequency(p: OscillatorParams) -> float:
    """Measured frequency of an uncoupled oscillator."""
    return simulate_single(p).frequency


@dataclass(frozen=True)
class TrialResult:
    graph_id: str
    n: int
    eta: float
    machine: Machine
    trial: int
    cut: int | None
    optimum: int | None
    residual_deg: float
    synchronized: bool
    runtime_ms: float
    error: str = ""

    def __post_init__(self):
        if self.cut is not None and self.optimum is not None and self.cut > self.optimum:
            raise AssertionError(f"cut {self.cut} exceeds optimum {self.optimum} on {self.graph_id}")

    def sort_key(self):
        return (self.graph_id, self.machine.value, self.trial)


def run_trial(spec: ExperimentSpec, entry: GraphEntry, machine: Machine, trial: int,
              optimum: int | None = None) -> TrialResult:
    """One simulation and readout; failures are captured in the result."""
    seed = stable_seed(spec.trial_seed_base, entry.graph_id, trial)
    g = entry.graph
    t0 = time.perf_counter()
    cut, residual, synced, err = None, math.nan, False, ""
    try:
        tr = run(spec.params_for(machine), spec.coupling_for(g), spec.injection_for(machine),
                 spec.sim.with_(seed=seed))
        r = graph_readout(tr, g, spec.k_cycles)
        cut, residual, synced = cut_value(g, r.spins), r.residual_deg, True
    except UnsynchronizedError as e:
        err = f"unsynchronized: {e}"
    except (NonOscillationError, InstabilityError, ValueError) as e:
        err = f"{type(e).__name__}: {e}"
    ms = (time.perf_counter() - t0) * 1e3 if spec.record_runtime else 0.0
    if err:
        log.info("%s %s trial %d: %s", entry.graph_id, machine.value, trial, err)
    return TrialResult(entry.graph_id, g.n, entry.eta, machine, trial, cut, optimum,
                       residual, synced, ms, err)


def worker_count() -> int:
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            return max(1, int(cap))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, cap)
    return os.cpu_count() or 1


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> list[TrialResult]:
    """All (graph, machine, trial) combinations, sorted by (graph id, machine, trial).

    Each trial's seed depends only on ``trial_seed_base``, the graph id and the
    trial index, so any subset can be rerun on its own and both machines start
    from the same initial conditions.
    """
    optima = {}
    for e in spec.graphs:
        optima[e.graph_id] = (brute_force_maxcut(e.graph).cut
                              if e.graph.n <= spec.oracle_max_n else None)
    if Machine.SHIL in spec.machines and spec.f_inj is None:
        natural_frequency(spec.conventional)  # warm the cache before threads start
    jobs = [(e, m, k) for e in spec.graphs for m in spec.machines for k in range(spec.trials)]
    workers = min(workers or worker_count(), len(jobs))
    if workers <= 1:
        results = [run_trial(spec, e, m, k, optima[e.graph_id]) for e, m, k in jobs]
    else:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda j: run_trial(spec, *j, optima[j[0].graph_id]), jobs))
    return sorted(results, key=TrialResult.sort_key)


@dataclass(frozen=True)
class ComparisonRow:
    graph_id: str
    best_eao: int | None
    best_shil: int | None
    mean_eao: float
    mean_shil: float

    @property
    def deviation_pct(self) -> float:
        """``100 (best_eao - best_shil) / best_shil``; NaN without a usable SHIL cut."""
        if self.best_eao is None or not self.best_shil:
            return math.nan
        return 100.0 * (self.best_eao - self.best_shil) / self.best_shil


def _cut_stats(rows: Sequence[TrialResult]) -> tuple[int | None, float]:
    cuts = [r.cut for r in rows if r.synchronized and r.cut is not None]
    if not cuts:
        return None, math.nan
    return max(cuts), float(np.mean(cuts))


def compare_machines(results: Iterable[TrialResult]) -> list[ComparisonRow]:
    """Best and mean cuts of EAO against Conventional+SHIL on each graph."""
    by_graph: dict[str, dict[Machine, list[TrialResult]]] = {}
    for r in results:
        by_graph.setdefault(r.graph_id, {}).setdefault(r.machine, []).append(r)
    rows = []
    for gid in sorted(by_graph):
        group = by_graph[gid]
        if Machine.EAO not in group or Machine.SHIL not in group:
            log.warning("graph %s lacks EAO or SHIL results; skipped in comparison", gid)
            continue
        be, me = _cut_stats(group[Machine.EAO])
        bs, ms = _cut_stats(group[Machine.SHIL])
        rows.append(ComparisonRow(gid, be, bs, me, ms))
    return rows


def mean_deviation(rows: Sequence[ComparisonRow]) -> float:
    vals = [r.deviation_pct for r in rows if math.isfinite(r.deviation_pct)]
    return float(np.mean(vals)) if vals else math.nan


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def write_bench_csv(results: Sequence[TrialResult], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BENCH_HEADER)
        for r in results:
            w.writerow([_fmt(x) for x in (r.graph_id, r.n, r.eta, r.machine.value, r.trial, r.cut,
                                          r.optimum, r.residual_deg, r.synchronized,
                                          round(r.runtime_ms, 3))])


def write_compare_csv(rows: Sequence[ComparisonRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARE_HEADER)
        for r in rows:
            w.writerow([_fmt(x) for x in (r.graph_id, r.best_eao, r.best_shil, r.deviation_pct)])
