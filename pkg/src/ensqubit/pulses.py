"""Complex hyperbolic secant (sechyp) pulses and two-color pulse sequences."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

ARCCOSH2 = math.acosh(2.0)


@dataclass(frozen=True)
class SechypShape:
    """Sech amplitude with tanh frequency chirp, truncated to ``t_total``.

    Parameters
    ----------
    omega_peak : float
        Peak Rabi frequency of one color in rad/s.
    t_fwhm : float
        Full width at half maximum of the sech amplitude (s).
    t_total : float
        Pulse duration after truncation (s); the pulse is centred in it.
    mu : float
        Dimensionless chirp parameter; the chirp sweeps +-mu*beta rad/s.
    carrier_offset : float
        Centre detuning of the chirp (rad/s).
    """

    omega_peak: float = 2 * math.pi * 2.0e6
    t_fwhm: float = 1.2e-6
    t_total: float = 4.4e-6
    mu: float = 3.0
    carrier_offset: float = 0.0

    def __post_init__(self):
        if not self.omega_peak > 0:
            raise ValueError("omega_peak must be > 0")
        if not self.t_fwhm > 0:
            raise ValueError("t_fwhm must be > 0")
        if self.t_total < 2 * self.t_fwhm:
            raise ValueError("t_total must be at least 2 * t_fwhm")

    @property
    def beta(self) -> float:
        """Sech steepness, fixed by the amplitude FWHM."""
        return 2.0 * ARCCOSH2 / self.t_fwhm

    @property
    def t_center(self) -> float:
        return 0.5 * self.t_total

    @property
    def chirp_half_width(self) -> float:
        """Half of the swept angular frequency range (rad/s)."""
        return self.mu * self.beta


def _log_cosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)


def envelope(shape: SechypShape, t, *, check: bool = True):
    """Complex envelope ``Omega(t) * exp(i phase(t))`` in rad/s.

    The phase is ``carrier_offset*(t - t0) + mu*log(cosh(beta*(t - t0)))`` so that
    its time derivative equals :func:`instantaneous_detuning`. ``t`` may be an
    array; values outside ``[0, t_total]`` raise unless ``check`` is False.
    """
    t = np.asarray(t, dtype=float)
    if check:
        slack = 1e-9 * shape.t_total
        if np.any(t < -slack) or np.any(t > shape.t_total + slack):
            raise ValueError("t outside the pulse support [0, t_total]")
        t = np.clip(t, 0.0, shape.t_total)
    x = shape.beta * (t - shape.t_center)
    amp = shape.omega_peak / np.cosh(x)
    phase = shape.carrier_offset * (t - shape.t_center) + shape.mu * _log_cosh(x)
    out = amp * np.exp(1j * phase)
    return out if out.ndim else complex(out)


def instantaneous_detuning(shape: SechypShape, t):
    """Time derivative of the envelope phase (rad/s)."""
    x = shape.beta * (np.asarray(t, dtype=float) - shape.t_center)
    return shape.carrier_offset + shape.mu * shape.beta * np.tanh(x)


def bright_dark_states(phi: float) -> tuple[np.ndarray, np.ndarray]:
    """Normalized bright and dark qubit states for relative phase ``phi``.

    ``|B> = (|0> - e^{-i phi}|1>)/sqrt(2)`` couples to a balanced two-color
    drive; ``|D> = (|0> + e^{-i phi}|1>)/sqrt(2)`` does not.
    """
    p = np.exp(-1j * phi)
    s = 1.0 / math.sqrt(2.0)
    return np.array([s, -s * p]), np.array([s, s * p])


@dataclass(frozen=True)
class TwoColorPulse:
    """One sechyp shape emitted on both carriers.

    The omega_0 color carries ``envelope * exp(i psi)`` and the omega_1 color
    ``envelope * exp(i (psi + phi))``. ``legs`` scales the two colors
    individually; ``(1, 0)`` gives a single-color pulse on |0>-|e>.
    """

    shape: SechypShape
    phi: float = 0.0
    psi: float = 0.0
    start_time: float = 0.0
    legs: tuple[float, float] = (1.0, 1.0)

    @property
    def end_time(self) -> float:
        return self.start_time + self.shape.t_total

    def color_amplitudes(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Complex drive of each color at absolute time(s) ``t``."""
        env = envelope(self.shape, np.asarray(t, dtype=float) - self.start_time)
        c0 = self.legs[0] * np.exp(1j * self.psi)
        c1 = self.legs[1] * np.exp(1j * (self.psi + self.phi))
        return c0 * env, c1 * env


def make_two_color(
    shape: SechypShape, phi: float, psi: float = 0.0, start_time: float = 0.0
) -> TwoColorPulse:
    return TwoColorPulse(shape=shape, phi=phi, psi=psi, start_time=start_time)


def single_color(shape: SechypShape, leg: int, start_time: float = 0.0) -> TwoColorPulse:
    """Sechyp on one transition only (``leg`` 0: |0>-|e>, 1: |1>-|e>)."""
    legs = (1.0, 0.0) if leg == 0 else (0.0, 1.0)
    return TwoColorPulse(shape=shape, start_time=start_time, legs=legs)


@dataclass(frozen=True)
class PulseSequence:
    """Time-ordered, non-overlapping pulses starting at t = 0."""

    pulses: tuple[TwoColorPulse, ...] = ()
    end_padding: float = 0.0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))
        prev_end = 0.0
        for p in self.pulses:
            if p.start_time < prev_end - 1e-15:
                raise ValueError("pulses overlap or are out of order")
            prev_end = p.end_time

    @property
    def total_duration(self) -> float:
        last = self.pulses[-1].end_time if self.pulses else 0.0
        return last + self.end_padding

    @classmethod
    def contiguous(cls, pulses, gap: float = 0.0, label: str = "") -> PulseSequence:
        """Lay pulses out back to back with ``gap`` seconds between them."""
        placed, t = [], 0.0
        for i, p in enumerate(pulses):
            if i:
                t += gap
            placed.append(replace(p, start_time=t))
            t += p.shape.t_total
        return cls(tuple(placed), label=label)

    def then(self, other: PulseSequence, gap: float = 0.0) -> PulseSequence:
        """Concatenate, shifting ``other`` to start ``gap`` after this sequence."""
        offset = self.total_duration + (gap if self.pulses else 0.0)
        moved = tuple(replace(p, start_time=p.start_time + offset) for p in other.pulses)
        return PulseSequence(self.pulses + moved, other.end_padding, self.label)

    def segments(self):
        """Yield ``(t_start, t_stop, pulse_or_None)`` covering the sequence."""
        t = 0.0
        for p in self.pulses:
            if p.start_time > t:
                yield t, p.start_time, None
            yield p.start_time, p.end_time, p
            t = p.end_time
        if self.total_duration > t:
            yield t, self.total_duration, None

    def color_amplitudes(self, t) -> tuple[np.ndarray, np.ndarray]:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        a0 = np.zeros(t.shape, dtype=complex)
        a1 = np.zeros(t.shape, dtype=complex)
        for p in self.pulses:
            m = (t >= p.start_time) & (t <= p.end_time)
            if np.any(m):
                b0, b1 = p.color_amplitudes(t[m])
                a0[m], a1[m] = b0, b1
        return a0, a1


def export_waveform(seq: PulseSequence, path, sample_rate: float = 100e6) -> Path:
    """Write sampled color amplitudes and phases of ``seq`` as CSV."""
    path = Path(path)
    n = int(round(seq.total_duration * sample_rate)) + 1
    t = np.arange(n) / sample_rate
    a0, a1 = seq.color_amplitudes(t)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "amplitude0_rad_s", "phase0_rad", "amplitude1_rad_s", "phase1_rad"])
        for row in zip(t, np.abs(a0), np.angle(a0), np.abs(a1), np.angle(a1)):
            w.writerow([repr(float(v)) for v in row])
    return path
