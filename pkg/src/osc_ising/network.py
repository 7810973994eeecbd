"""Capacitively coupled oscillator networks.

Each graph edge is a coupling capacitor ``C_c`` between the load nodes of two
oscillators, so node voltages obey

    M dv/dt = G(v, s) * (V_out(s) - v) + i_inj(t)

with the constant capacitance matrix ``M = C_L I + C_c L`` (``L`` the graph
Laplacian), or ``M = C_L I - C_c A`` when each node's own capacitor is
trimmed to keep its total load at ``C_L``. Between discrete events the right-hand side is smooth and is
advanced with fixed-step RK4. Comparator flips and autaptic-knee crossings are
located by bisection to ``event_tol`` and applied at the refined time.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import _kernel
from .graphlib import Graph
from .oscillator import (
    ComparatorState,
    NonOscillationError,
    OscillatorParams,
    closed_form_timing,
)

MAX_TRACE_ROWS = 1_000_000
# RK4's real-axis stability limit is about 2.79; keep well inside it
RK4_STABLE_FRACTION = 2.0


class InstabilityError(RuntimeError):
    """Node voltages left the physically reachable range."""


@dataclass(frozen=True)
class CouplingSpec:
    """Coupling capacitors, one per edge.

    With ``compensate_load`` each oscillator's own load capacitor is trimmed
    by ``deg(i) * C_c`` so the total capacitance at every node stays ``C_L``;
    otherwise high-degree nodes run slower and random graphs do not
    frequency-lock.
    """

    graph: Graph
    C_c: float = 1e-9
    compensate_load: bool = False

    def __post_init__(self):
        if self.C_c < 0:
            raise ValueError("C_c must be non-negative")


@dataclass(frozen=True)
class InjectionConfig:
    enabled: bool = False
    A_inj: float = 0.0
    f_inj: float = 0.0

    def __post_init__(self):
        if self.A_inj < 0:
            raise ValueError("A_inj must be non-negative")
        if self.enabled and not self.f_inj > 0:
            raise ValueError("f_inj must be positive when injection is enabled")


@dataclass(frozen=True)
class SimConfig:
    """Integration settings.

    ``dt`` and ``event_tol`` default to ``T_est/500`` and ``dt/1000`` where
    ``T_est`` is the closed-form period of an isolated oscillator.
    ``ic_spread`` defaults to the threshold ``alpha*V_sat``.
    """

    dt: float | None = None
    n_cycles: float = 50
    event_tol: float | None = None
    seed: int = 0
    ic_spread: float | None = None
    sample_every: int | None = None
    steps_per_cycle: int = 500

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.n_cycles >= 1:
            raise ValueError("n_cycles must be >= 1")
        if self.dt is not None and self.event_tol is not None and not self.event_tol < self.dt:
            raise ValueError("event_tol must be smaller than dt")

    def with_(self, **kw) -> "SimConfig":
        return replace(self, **kw)

    def resolve(self, p: OscillatorParams, c_min: float | None = None) -> tuple[float, float, float, float]:
        """Concrete ``(dt, event_tol, duration, ic_spread)`` for a device.

        ``c_min`` is the smallest eigenvalue of the mass matrix; the automatic
        step is capped so RK4 stays inside its stability region during the
        fast diode rise.
        """
        T_est = closed_form_timing(p).period
        dt = self.dt
        if dt is None:
            dt = T_est / self.steps_per_cycle
            if c_min is not None:
                dt = min(dt, RK4_STABLE_FRACTION * c_min / p.G_high)
        tol = self.event_tol if self.event_tol is not None else dt / 1000
        if not tol < dt:
            raise ValueError("event_tol must be smaller than dt")
        spread = self.ic_spread if self.ic_spread is not None else p.threshold
        return dt, tol, self.n_cycles * T_est, spread


@dataclass(frozen=True)
class NetworkState:
    v: np.ndarray
    s: np.ndarray
    t: float = 0.0


@dataclass(frozen=True, eq=False)
class Trace:
    """Sampled waveforms plus exact event times.

    ``s`` holds :class:`ComparatorState` values (1 = OUT_HIGH). Flip events are
    ``(osc, t, dir)`` with ``dir = +1`` for OUT_LOW -> OUT_HIGH (the fast rise)
    and ``-1`` for the opposite flip. Knee events use ``+1`` when the
    autaptic branch turns on and ``-1`` when it turns off.
    """

    t: np.ndarray
    v: np.ndarray
    s: np.ndarray
    flip_events: list
    knee_events: list = field(default_factory=list)
    dt: float = 0.0
    period_estimate: float = 0.0

    @property
    def n(self) -> int:
        return self.v.shape[1]

    def _times(self, events, osc, direction):
        return np.array([t for i, t, d in events if i == osc and (direction is None or d == direction)])

    def flip_times(self, osc: int, direction: int | None = None) -> np.ndarray:
        return self._times(self.flip_events, osc, direction)

    def knee_times(self, osc: int, direction: int | None = None) -> np.ndarray:
        return self._times(self.knee_events, osc, direction)

    def to_csv(self, path) -> None:
        n = self.n
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"v{i}" for i in range(n)] + [f"s{i}" for i in range(n)])
            for k in range(len(self.t)):
                w.writerow([repr(float(self.t[k]))] + [repr(float(x)) for x in self.v[k]]
                           + [int(x) for x in self.s[k]])

    def events_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["osc", "t", "dir"])
            for i, t, d in self.flip_events:
                w.writerow([i, repr(float(t)), d])


def assemble_mass_matrix(spec: CouplingSpec, C_L: float) -> np.ndarray:
    """``M_ii = C_L + deg(i) C_c``, ``M_ij = -C_c`` on edges.

    Under load compensation the diagonal is ``C_L`` for every node.
    """
    n = spec.graph.n
    adj = spec.graph.adjacency().astype(float)
    if spec.compensate_load:
        return C_L * np.eye(n) - spec.C_c * adj
    return C_L * np.eye(n) + spec.C_c * (np.diag(adj.sum(axis=1)) - adj)


def initial_state(p: OscillatorParams, n: int, seed: int, spread: float) -> NetworkState:
    rng = np.random.default_rng(np.uint64(seed % 2**64))
    v = rng.uniform(-spread, spread, size=n)
    s = rng.integers(0, 2, size=n).astype(np.int8)
    return NetworkState(v, s, 0.0)


def run(
    p: OscillatorParams,
    spec: CouplingSpec,
    inj: InjectionConfig | None = None,
    cfg: SimConfig | None = None,
    initial: NetworkState | None = None,
) -> Trace:
    """Integrate the coupled network and return its trace.

    Initial voltages are uniform in ``[-ic_spread, ic_spread]`` and initial
    comparator states uniform over {LOW, HIGH}, both drawn from ``cfg.seed``
    unless ``initial`` is given. Raises :class:`NonOscillationError` when some
    oscillator never completes a cycle and :class:`InstabilityError` on
    voltage blow-up.
    """
    inj = inj or InjectionConfig()
    cfg = cfg or SimConfig()
    n = spec.graph.n
    M = assemble_mass_matrix(spec, p.C_L)
    if not np.allclose(M, M.T):
        raise ValueError("mass matrix is not symmetric")
    try:
        factor = cho_factor(M)
    except np.linalg.LinAlgError:
        raise ValueError("mass matrix is not positive definite; reduce C_c") from None
    Minv = np.ascontiguousarray(cho_solve(factor, np.eye(n)))
    dt, tol, duration, spread = cfg.resolve(p, float(np.linalg.eigvalsh(M)[0]))

    st = initial or initial_state(p, n, cfg.seed, spread)
    v = np.array(st.v, dtype=np.float64)
    s = np.array(st.s, dtype=np.int8)
    t0 = float(st.t)
    if v.shape != (n,) or s.shape != (n,):
        raise ValueError("initial state does not match the graph size")
    th = p.threshold
    eao = p.has_knee
    # bring the discrete state in line with the initial voltages
    high = s == ComparatorState.OUT_HIGH
    s = np.where(high & (v >= th), 0, np.where(~high & (v <= -th), 1, s)).astype(np.int8)
    if eao:
        k = (s == ComparatorState.OUT_LOW) & (v + p.V_sat > p.V_knee)
    else:
        k = np.zeros(n, dtype=np.bool_)

    n_steps = int(math.ceil(duration / dt - 1e-9))
    every = cfg.sample_every or max(1, int(math.ceil((n_steps + 1) / MAX_TRACE_ROWS)))
    n_rows = n_steps // every + 1
    inj_amp = inj.A_inj if inj.enabled else 0.0
    omega = 2 * math.pi * inj.f_inj if inj.enabled else 0.0
    capacity = int(n * (cfg.n_cycles + 2) * 8) + 64
    while True:
        vv, ss_, kk = v.copy(), s.copy(), k.copy()
        ts = np.empty(n_rows)
        vs = np.empty((n_rows, n))
        ss = np.empty((n_rows, n), dtype=np.int8)
        ts[0], vs[0], ss[0] = t0, vv, ss_
        ev_osc = np.empty(capacity, dtype=np.int64)
        ev_t = np.empty(capacity)
        ev_type = np.empty(capacity, dtype=np.int8)
        ev_dir = np.empty(capacity, dtype=np.int8)
        rows, n_ev, status = _kernel.integrate(
            vv, ss_, kk, t0, dt, n_steps, tol, every, Minv,
            p.G_high, p.G_fast, p.G_slow, p.V_sat, th, eao,
            p.V_knee, p.V_knee + p.knee_hysteresis,
            inj_amp, omega, 3.0 * p.V_sat,
            ts, vs, ss, ev_osc, ev_t, ev_type, ev_dir,
        )
        if status != _kernel.EVENT_OVERFLOW:
            break
        capacity *= 4
    if status == _kernel.UNSTABLE:
        raise InstabilityError(f"|v| exceeded {3 * p.V_sat:g} V near t={ts[rows - 1]:.6g} s")

    flips, knees = [], []
    for i, t, kind, d in zip(ev_osc[:n_ev].tolist(), ev_t[:n_ev].tolist(),
                             ev_type[:n_ev].tolist(), ev_dir[:n_ev].tolist()):
        (flips if kind == _kernel.FLIP else knees).append((i, t, d))
    counts = np.bincount([i for i, _, d in flips if d > 0], minlength=n)
    if np.any(counts < 2):
        raise NonOscillationError(
            f"oscillators {np.flatnonzero(counts < 2).tolist()} completed fewer than 2 cycles"
        )
    return Trace(
        t=ts[:rows], v=vs[:rows], s=ss[:rows], flip_events=flips, knee_events=knees,
        dt=dt, period_estimate=closed_form_timing(p).period,
    )
