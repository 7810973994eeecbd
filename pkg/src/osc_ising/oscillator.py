"""Relaxation-oscillator device models.

Both devices are a Schmitt trigger driving a load capacitor ``C_L`` through a
feedback network. The comparator output sits at ``+V_sat`` (OUT_HIGH) or
``-V_sat`` (OUT_LOW) and flips when the capacitor voltage reaches
``+alpha*V_sat`` or ``-alpha*V_sat``.

Charging (OUT_HIGH) goes through ``R_F`` in parallel with a diode of dynamic
resistance ``R_D``, giving the fast rise. Discharging (OUT_LOW) goes through
``R_F`` alone for the conventional device. The autaptic device (EAO) adds a
diode-connected FET branch ``R_FET`` that conducts while the voltage across it,
``v + V_sat``, exceeds ``V_knee``; the discharge therefore has a fast segment
with ``tau1 = (R_FET || R_F) C_L`` followed by a slow one with
``tau2 = R_F C_L``. The FET switches abruptly at the knee. Once off it only
turns back on above ``V_knee + knee_hysteresis``; without that margin a
coupling kick arriving exactly at the knee makes the switch chatter forever.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np


class Kind(str, enum.Enum):
    CONVENTIONAL = "conventional"
    EAO = "eao"


class ComparatorState(enum.IntEnum):
    OUT_LOW = 0
    OUT_HIGH = 1


class NonOscillationError(RuntimeError):
    """The comparator never flipped (or flipped too rarely) within the run."""


@dataclass(frozen=True)
class OscillatorParams:
    kind: Kind = Kind.CONVENTIONAL
    V_sat: float = 5.0
    alpha: float = 0.5
    R_F: float = 100e3
    C_L: float = 5.3e-9
    R_D: float = 100.0
    R_FET: float = 1e3
    V_knee: float = 4.0
    knee_hysteresis: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        for name in ("V_sat", "R_F", "C_L", "R_D", "R_FET"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.kind is Kind.EAO:
            if not self.R_FET < self.R_F:
                raise ValueError("EAO requires R_FET < R_F")
            if not self.V_knee > 0:
                raise ValueError("EAO requires V_knee > 0")
        if self.knee_hysteresis < 0:
            raise ValueError("knee_hysteresis must be non-negative")

    @classmethod
    def conventional(cls, **kw) -> "OscillatorParams":
        return cls(kind=Kind.CONVENTIONAL, **kw)

    @classmethod
    def eao(cls, **kw) -> "OscillatorParams":
        return cls(kind=Kind.EAO, **kw)

    def with_(self, **kw) -> "OscillatorParams":
        return replace(self, **kw)

    @property
    def threshold(self) -> float:
        return self.alpha * self.V_sat

    @property
    def G_high(self) -> float:
        return 1.0 / self.R_F + 1.0 / self.R_D

    @property
    def G_slow(self) -> float:
        return 1.0 / self.R_F

    @property
    def G_fast(self) -> float:
        return 1.0 / self.R_F + 1.0 / self.R_FET

    @property
    def tau_rise(self) -> float:
        return self.C_L / self.G_high

    @property
    def tau1(self) -> float:
        """Fast discharge constant ``(R_FET || R_F) C_L``."""
        return self.C_L / self.G_fast

    @property
    def tau2(self) -> float:
        """Slow discharge constant ``R_F C_L``."""
        return self.R_F * self.C_L

    @property
    def has_knee(self) -> bool:
        """True when the autaptic branch can conduct at all during discharge."""
        return self.kind is Kind.EAO and self.V_knee < (1 + self.alpha) * self.V_sat


@dataclass(frozen=True)
class Timing:
    """Closed-form segment durations of an isolated oscillator."""

    rise: float
    fast: float
    slow: float

    @property
    def fall(self) -> float:
        return self.fast + self.slow

    @property
    def period(self) -> float:
        return self.rise + self.fast + self.slow

    @property
    def frequency(self) -> float:
        return 1.0 / self.period

    @property
    def tA_over_T(self) -> float:
        return self.fast / self.period


def closed_form_timing(p: OscillatorParams) -> Timing:
    top = (1 + p.alpha) * p.V_sat  # v + V_sat at the upper threshold
    bottom = (1 - p.alpha) * p.V_sat
    rise = p.tau_rise * math.log(top / bottom)
    if not p.has_knee:
        return Timing(rise, 0.0, p.tau2 * math.log(top / bottom))
    knee = max(p.V_knee, bottom)
    fast = p.tau1 * math.log(top / knee)
    slow = p.tau2 * math.log(knee / bottom)
    return Timing(rise, fast, slow)


def branch_conductance(p: OscillatorParams, v, s):
    """Conductance from the comparator output to the load node.

    Works elementwise on arrays of voltages/states. The drive current into the
    node is ``G * (V_out(s) - v)``.
    """
    v = np.asarray(v, dtype=float)
    high = np.asarray(s) == ComparatorState.OUT_HIGH
    low = np.full(v.shape, p.G_slow)
    if p.kind is Kind.EAO:
        low = np.where(v + p.V_sat > p.V_knee, p.G_fast, p.G_slow)
    g = np.where(high, p.G_high, low)
    return float(g) if g.ndim == 0 else g


def output_voltage(p: OscillatorParams, s):
    return np.where(np.asarray(s) == ComparatorState.OUT_HIGH, p.V_sat, -p.V_sat)


def comparator_update(v, s, p: OscillatorParams):
    """Schmitt-trigger hysteresis: flip at ``+/-alpha*V_sat``, otherwise hold."""
    v = np.asarray(v, dtype=float)
    s = np.asarray(s)
    th = p.threshold
    out = np.where((s == ComparatorState.OUT_HIGH) & (v >= th), ComparatorState.OUT_LOW, s)
    out = np.where((s == ComparatorState.OUT_LOW) & (v <= -th), ComparatorState.OUT_HIGH, out)
    out = out.astype(np.int8)
    return ComparatorState(int(out)) if out.ndim == 0 else out


@dataclass(frozen=True)
class SingleReport:
    """Steady-state measurements of one free-running oscillator."""

    trace: object
    period: float
    rise_time: float
    fall_time: float
    t_A: float
    tau_fast_fit: float
    tau_slow_fit: float

    @property
    def frequency(self) -> float:
        return 1.0 / self.period

    @property
    def rise_fraction(self) -> float:
        return self.rise_time / self.period

    @property
    def tA_over_T(self) -> float:
        return self.t_A / self.period


def _fit_tau(t, y):
    """Decay constant from a log-linear least-squares fit of ``y = a exp(-t/tau)``."""
    if len(t) < 3:
        return math.nan
    slope = np.polyfit(t - t[0], np.log(y), 1)[0]
    return -1.0 / slope if slope < 0 else math.nan


def simulate_single(p: OscillatorParams, cfg=None, settle_cycles: int = 3) -> SingleReport:
    """Run one uncoupled oscillator and measure its steady-state cycle.

    Raises :class:`NonOscillationError` when fewer than ``settle_cycles + 2``
    rising flips occur.
    """
    from .graphlib import Graph
    from .network import CouplingSpec, InjectionConfig, SimConfig, run

    if cfg is None:
        cfg = SimConfig(n_cycles=12, sample_every=1)
    tr = run(p, CouplingSpec(Graph(1), 0.0), InjectionConfig(), cfg)

    rises = tr.flip_times(0, +1)
    falls = tr.flip_times(0, -1)
    if len(rises) < settle_cycles + 2:
        raise NonOscillationError(f"only {len(rises)} rising flips in {tr.t[-1]:.3g} s")
    rises = rises[settle_cycles:]
    period = float(np.mean(np.diff(rises)))

    knee_off = tr.knee_times(0, -1)
    rise_times, t_as, fast_fits, slow_fits = [], [], [], []
    shifted = tr.v[:, 0] + p.V_sat
    for r0, r1 in zip(rises[:-1], rises[1:]):
        f = falls[(falls > r0) & (falls < r1)]
        if len(f) != 1:
            continue
        f = f[0]
        rise_times.append(f - r0)
        k = knee_off[(knee_off > f) & (knee_off < r1)]
        split = k[0] if len(k) else f
        t_as.append(split - f)
        # keep one step clear of each event so samples lie inside one segment
        guard = 1.5 * tr.dt
        fast = (tr.t > f + guard) & (tr.t < split - guard)
        slow = (tr.t > split + guard) & (tr.t < r1 - guard)
        if len(k):
            fast_fits.append(_fit_tau(tr.t[fast], shifted[fast]))
        slow_fits.append(_fit_tau(tr.t[slow], shifted[slow]))
    rise_time = float(np.mean(rise_times))
    return SingleReport(
        trace=tr,
        period=period,
        rise_time=rise_time,
        fall_time=period - rise_time,
        t_A=float(np.mean(t_as)),
        tau_fast_fit=float(np.nanmean(fast_fits)) if fast_fits else math.nan,
        tau_slow_fit=float(np.nanmean(slow_fits)) if slow_fits else math.nan,
    )
