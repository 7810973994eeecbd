"""Phase readout, bipartition scoring and harmonic-content analysis."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.sparse.csgraph import connected_components
from scipy.signal import get_window

TWO_PI = 2 * math.pi
BIPARTITION_THRESHOLD_DEG = 15.0
SYNC_TOLERANCE = 0.02


class UnsynchronizedError(RuntimeError):
    """Oscillators do not share a common frequency; no valid phase readout."""


class SpectrumError(ValueError):
    """Spectrum has no dominant fundamental."""


@dataclass(frozen=True, eq=False)
class PhaseVector:
    phases: np.ndarray  # radians in [0, 2*pi), phases[0] == 0
    period: float = math.nan

    @property
    def degrees(self) -> np.ndarray:
        return np.degrees(self.phases)


def _circ_mean(angles) -> float:
    return float(np.angle(np.mean(np.exp(1j * np.asarray(angles)))))


def extract_phases(trace, k_cycles: int = 10, nodes: Sequence[int] | None = None) -> PhaseVector:
    """Phases of each oscillator's rising comparator flips over the last ``k_cycles``.

    The common period is the mean of the per-oscillator periods; each
    oscillator's phase is the circular mean of its event times folded modulo
    that period, reported relative to the first oscillator. ``nodes`` restricts
    the readout (and the synchronization check) to a subset, in that order.
    """
    nodes = list(range(trace.n)) if nodes is None else [int(i) for i in nodes]
    if not nodes:
        raise ValueError("no oscillators selected")
    rises = [trace.flip_times(i, +1) for i in nodes]
    short = [nodes[i] for i, r in enumerate(rises) if len(r) < k_cycles + 1]
    if short:
        raise UnsynchronizedError(f"oscillators {short} have fewer than {k_cycles + 1} rising flips")
    window = [r[-(k_cycles + 1):] for r in rises]
    periods = np.array([np.mean(np.diff(w)) for w in window])
    if periods.max() / periods.min() - 1 > SYNC_TOLERANCE:
        raise UnsynchronizedError(
            f"per-oscillator periods differ by {100 * (periods.max() / periods.min() - 1):.2f}%"
        )
    T = float(periods.mean())
    t_ref = window[0][0]
    raw = np.array([_circ_mean(TWO_PI * np.mod(w - t_ref, T) / T) for w in window])
    return PhaseVector(np.mod(raw - raw[0], TWO_PI), T)


def _as_phases(p) -> np.ndarray:
    return np.asarray(p.phases if isinstance(p, PhaseVector) else p, dtype=float)


def _axis_distance(phases: np.ndarray, phi0: float) -> np.ndarray:
    """Circular distance from each phase to the nearer of ``phi0`` and ``phi0 + pi``."""
    d = np.abs(np.angle(np.exp(1j * (phases - phi0))))
    return np.minimum(d, math.pi - d)


def _rms_axis(phases, phi0) -> float:
    return float(np.sqrt(np.mean(_axis_distance(phases, phi0) ** 2)))


def best_axis(p) -> tuple[float, float]:
    """``(phi0, rms)`` of the best two-antipodal-cluster fit, ``phi0`` in ``[0, pi)``."""
    ph = _as_phases(p)
    grid = np.radians(np.arange(0.0, 180.0, 1.0))
    scores = np.array([_rms_axis(ph, g) for g in grid])
    k = int(np.argmin(scores))
    step = math.radians(1.0)
    res = minimize_scalar(lambda x: _rms_axis(ph, x), bounds=(grid[k] - step, grid[k] + step),
                          method="bounded", options={"xatol": 1e-10})
    phi0, rms = (res.x, res.fun) if res.fun < scores[k] else (grid[k], scores[k])
    return float(np.mod(phi0, math.pi)), float(rms)


def bipartition_residual(p) -> float:
    """RMS distance (degrees) from the best ``{phi0, phi0 + pi}`` cluster pair."""
    return math.degrees(best_axis(p)[1])


def phases_to_spins(p) -> np.ndarray:
    ph = _as_phases(p)
    phi0, _ = best_axis(ph)
    d0 = np.abs(np.angle(np.exp(1j * (ph - phi0))))
    return np.where(d0 <= math.pi - d0 + 1e-12, 1, -1).astype(np.int64)


@dataclass(frozen=True, eq=False)
class Readout:
    """Spin readout of a whole graph assembled from its connected components."""

    spins: np.ndarray
    residual_deg: float
    phases: np.ndarray  # radians, relative to the first node of each component


def graph_readout(trace, graph, k_cycles: int = 10) -> Readout:
    """Phase readout done separately on each connected component.

    Disconnected components share no coupling, so their relative phases carry
    no information and need not lock; each component gets its own reference
    and bipartition axis. Isolated nodes read as +1 and do not enter the
    residual, which is the RMS over all nodes of non-trivial components.
    """
    n = graph.n
    _, labels = connected_components(graph.adjacency(), directed=False)
    spins = np.ones(n, dtype=np.int64)
    phases = np.zeros(n)
    sq, count = 0.0, 0
    for c in np.unique(labels):
        nodes = np.flatnonzero(labels == c)
        if len(nodes) < 2:
            continue
        pv = extract_phases(trace, k_cycles, nodes)
        _, rms = best_axis(pv)
        spins[nodes] = phases_to_spins(pv)
        phases[nodes] = pv.phases
        sq += rms ** 2 * len(nodes)
        count += len(nodes)
    residual = math.degrees(math.sqrt(sq / count)) if count else 0.0
    return Readout(spins, residual, phases)


@dataclass(frozen=True)
class HarmonicRatio:
    f1: float
    A_f1: float
    A_2f1: float

    @property
    def ratio(self) -> float:
        return self.A_2f1 / self.A_f1


def _interp_peak(mag: np.ndarray, k: int) -> tuple[float, float]:
    """Parabolic interpolation on log magnitude around bin ``k``: (bin, magnitude)."""
    if k <= 0 or k >= len(mag) - 1:
        return float(k), float(mag[k])
    a, b, c = np.log(mag[k - 1:k + 2] + 1e-300)
    denom = a - 2 * b + c
    if denom >= 0:
        return float(k), float(mag[k])
    delta = 0.5 * (a - c) / denom
    return k + delta, float(np.exp(b - 0.25 * (a - c) * delta))


def harmonic_ratio(w: Sequence[float], fs: float, min_periods: float = 16) -> HarmonicRatio:
    """Ratio of the second-harmonic to fundamental spectral magnitude.

    The fundamental is the largest non-DC peak of the Hann-windowed spectrum;
    both peaks are refined by parabolic interpolation.
    """
    x = np.asarray(w, dtype=float)
    x = x - x.mean()
    n = len(x)
    mag = np.abs(np.fft.rfft(x * get_window("hann", n, fftbins=True)))
    if n < 8 or not np.any(mag[1:] > 0):
        raise SpectrumError("empty or constant signal")
    k1 = 1 + int(np.argmax(mag[1:]))
    if mag[k1] < 10 * np.median(mag[1:]):
        raise SpectrumError("no dominant spectral peak")
    b1, A1 = _interp_peak(mag, k1)
    f1 = b1 * fs / n
    if f1 * n / fs < min_periods:
        raise SpectrumError(f"only {f1 * n / fs:.1f} fundamental periods; need {min_periods}")
    k2 = int(round(2 * b1))
    if k2 + 1 >= len(mag):
        raise SpectrumError("second harmonic lies above Nyquist")
    lo, hi = max(k2 - 2, 1), min(k2 + 3, len(mag) - 1)
    k2 = lo + int(np.argmax(mag[lo:hi]))
    _, A2 = _interp_peak(mag, k2)
    return HarmonicRatio(float(f1), float(A1), float(A2))


def synth_relaxation(tA_over_T: float, tau1: float, tau2: float, T: float, n_periods: int,
                     samples_per_period: int = 1024, v_max: float = 1.0) -> tuple[np.ndarray, float]:
    """Two-time-constant relaxation waveform and its sample rate.

    Each period rises instantly to ``v_max``, decays with ``tau1`` for
    ``tA = tA_over_T * T`` and then with ``tau2`` until the period ends.
    """
    if not 0 < tA_over_T < 1:
        raise ValueError(f"tA_over_T must lie in (0, 1), got {tA_over_T}")
    if not 0 < tau1 <= tau2:
        raise ValueError("need 0 < tau1 <= tau2")
    if T <= 0 or n_periods < 1:
        raise ValueError("need T > 0 and n_periods >= 1")
    tA = tA_over_T * T
    phase = (np.arange(samples_per_period) / samples_per_period) * T
    one = np.where(phase < tA, np.exp(-phase / tau1),
                   math.exp(-tA / tau1) * np.exp(-(phase - tA) / tau2))
    return v_max * np.tile(one, n_periods), samples_per_period / T


@dataclass(frozen=True)
class SweepRow:
    tA_over_T: float
    tau1: float
    tau2: float
    T: float
    result: HarmonicRatio


def device_sweep_grid(tA_over_T: Iterable[float], tau2: float, alpha: float = 0.5,
                      knee_fraction: float = 0.52) -> list[tuple[float, float, float, float]]:
    """``(tA_over_T, tau1, tau2, T)`` rows for a discharge bounded by the comparator thresholds.

    The waveform starts at the upper threshold, decays with ``tau1`` to the
    knee, then with ``tau2`` to the lower threshold. Voltages are measured from
    the negative rail in units of ``V_sat``, so the thresholds sit at
    ``1 +/- alpha`` and the knee at ``knee_fraction``. With the knee and
    ``tau2`` fixed, a target ``tA/T`` fixes ``tau1`` and the period.
    """
    top, bottom = 1 + alpha, 1 - alpha
    if not bottom < knee_fraction < top:
        raise ValueError("knee must lie strictly between the thresholds")
    t_slow = tau2 * math.log(knee_fraction / bottom)
    rows = []
    for d in tA_over_T:
        if not 0 < d < 1:
            raise ValueError(f"tA_over_T must lie in (0, 1), got {d}")
        tA = d / (1 - d) * t_slow
        tau1 = tA / math.log(top / knee_fraction)
        if tau1 > tau2:
            raise ValueError(f"tA/T={d} needs tau1 > tau2 for this knee")
        rows.append((float(d), tau1, tau2, tA + t_slow))
    return rows


def sweep_harmonic_ratio(grid: Iterable[tuple[float, float, float, float]], n_periods: int = 32,
                         samples_per_period: int = 1024) -> list[SweepRow]:
    """Harmonic ratio for each ``(tA_over_T, tau1, tau2, T)`` grid row."""
    out = []
    for d, tau1, tau2, T in grid:
        w, fs = synth_relaxation(d, tau1, tau2, T, n_periods, samples_per_period)
        out.append(SweepRow(d, tau1, tau2, T, harmonic_ratio(w, fs)))
    return out


SWEEP_HEADER = ["tA_over_T", "tau1", "tau2", "f1", "A_f1", "A_2f1", "ratio"]


def write_sweep_csv(rows: Sequence[SweepRow], dest) -> None:
    """Write sweep rows to a path or an open text stream."""
    if hasattr(dest, "write"):
        _write_sweep(rows, dest)
        return
    with open(dest, "w", newline="") as fh:
        _write_sweep(rows, fh)


def _write_sweep(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        h = r.result
        w.writerow([repr(r.tA_over_T), repr(r.tau1), repr(r.tau2), repr(h.f1),
                    repr(h.A_f1), repr(h.A_2f1), repr(h.ratio)])
