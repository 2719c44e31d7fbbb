"""Rotating-frame Lindblad evolution of single ions and whole ensembles.

The frame co-rotates with both carriers, one per optical leg, so |0> and |1>
are degenerate for a nominal ion and each color is resonant with its own leg.
In that frame

    H = delta_opt |e><e| - delta_hf/2 |0><0| + delta_hf/2 |1><1|
        + rabi_scale/2 * (g0(t) |e><0| + g1(t) |e><1| + h.c.)

with ``g0`` the omega_0 color and ``g1 = -`` the omega_1 color (the sign that
makes the two-color dark state exact). Decay |e> -> {|0>, |1>, |aux>} and pure
dephasing of the optical coherences enter as Lindblad terms.

The fixed-step RK4 path is compiled with numba and loops over ions without
the GIL, so ensembles can be split over threads; each ion's result depends
only on its own inputs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numba
import numpy as np
from scipy.integrate import solve_ivp

from .physical_model import (
    AUX,
    EXC,
    G0,
    G1,
    N_LEVELS,
    DecoherenceSpec,
    Ensemble,
    IonParams,
    LevelScheme,
)
from .pulses import PulseSequence, TwoColorPulse


class IntegrationError(RuntimeError):
    """The adaptive integrator could not meet its tolerance."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (at t = {t:.6e} s)")
        self.t = t


@dataclass(frozen=True)
class EvolutionSettings:
    dt_max: float = 2e-9
    integrator: Literal["rk4-fixed", "rk45-adaptive"] = "rk4-fixed"
    include_cross_coupling: bool = False
    rel_tol: float = 1e-6
    workers: int = 1

    def __post_init__(self):
        if not self.dt_max > 0:
            raise ValueError("dt_max must be > 0")
        if not 0 < self.rel_tol <= 1e-3:
            raise ValueError("rel_tol must lie in (0, 1e-3]")
        if self.integrator not in ("rk4-fixed", "rk45-adaptive"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class EvolutionStats:
    """Per-ion diagnostics gathered during pulsed segments."""

    excited_dwell: np.ndarray  # integral of P_e dt (s)
    peak_excited: np.ndarray


# --------------------------------------------------------------------------
# Hamiltonian
# --------------------------------------------------------------------------


def leg_couplings(drive, t, scheme: LevelScheme, cross: bool = False):
    """Complex couplings ``(g0, g1)`` of the |0>-|e> and |1>-|e> legs.

    ``drive`` is a :class:`TwoColorPulse`, a :class:`PulseSequence` or None.
    For a single pulse ``t`` is absolute time (the pulse's own start time
    applies). With ``cross`` each color also drives the other leg, detuned by
    the qubit splitting.
    """
    t = np.asarray(t, dtype=float)
    if drive is None:
        z = np.zeros(t.shape, dtype=complex)
        return z, z.copy()
    if isinstance(drive, TwoColorPulse):
        a0, a1 = drive.color_amplitudes(t)
    else:
        a0, a1 = drive.color_amplitudes(t)
        a0, a1 = a0.reshape(t.shape), a1.reshape(t.shape)
    g0 = np.asarray(a0, dtype=complex)
    g1 = -np.asarray(a1, dtype=complex)
    if cross:
        wq = 2 * np.pi * scheme.qubit_splitting
        g0 = g0 + a1 * np.exp(1j * wq * t)
        g1 = g1 - a0 * np.exp(-1j * wq * t)
    return g0, g1


def hamiltonian_at(
    ion: IonParams,
    drive,
    scheme: LevelScheme,
    t: float,
    include_cross_coupling: bool = False,
) -> np.ndarray:
    """Rotating-frame Hamiltonian (rad/s) of one ion at time ``t``."""
    g0, g1 = leg_couplings(drive, t, scheme, include_cross_coupling)
    h = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    h[G0, G0] = -0.5 * ion.delta_hf
    h[G1, G1] = 0.5 * ion.delta_hf
    h[EXC, EXC] = ion.delta_opt
    h[EXC, G0] = 0.5 * ion.rabi_scale * complex(g0)
    h[EXC, G1] = 0.5 * ion.rabi_scale * complex(g1)
    h[G0, EXC] = np.conj(h[EXC, G0])
    h[G1, EXC] = np.conj(h[EXC, G1])
    return h


def lindblad_operators(dec: DecoherenceSpec) -> list[np.ndarray]:
    """Jump operators (rates folded in) matching the compiled kernel."""
    ops = []
    for k, b in zip((G0, G1, AUX), dec.branching):
        if dec.decay_rate * b > 0:
            L = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
            L[k, EXC] = math.sqrt(dec.decay_rate * b)
            ops.append(L)
    if dec.pure_dephasing_rate > 0:
        L = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
        L[EXC, EXC] = math.sqrt(2 * dec.pure_dephasing_rate)
        ops.append(L)
    return ops


def lindblad_rhs(h: np.ndarray, rho: np.ndarray, ops) -> np.ndarray:
    """Dense reference form of the master equation right-hand side."""
    out = -1j * (h @ rho - rho @ h)
    for L in ops:
        LdL = L.conj().T @ L
        out += L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)
    return out


# --------------------------------------------------------------------------
# Free evolution (closed form)
# --------------------------------------------------------------------------


def _free_propagate(rho, duration, d_opt, d_hf, dec: DecoherenceSpec):
    """Exact drive-free Lindblad propagation of a stack of states, in place."""
    if duration == 0:
        return rho
    n = rho.shape[0]
    energies = np.zeros((n, N_LEVELS))
    energies[:, G0] = -0.5 * d_hf
    energies[:, G1] = 0.5 * d_hf
    energies[:, EXC] = d_opt
    phase = np.exp(-1j * (energies[:, :, None] - energies[:, None, :]) * duration)
    gamma = dec.decay_rate
    coh = math.exp(-(0.5 * gamma + dec.pure_dephasing_rate) * duration)
    damp = np.ones((N_LEVELS, N_LEVELS))
    damp[EXC, :] = coh
    damp[:, EXC] = coh
    survive = math.exp(-gamma * duration)
    damp[EXC, EXC] = survive
    pe = rho[:, EXC, EXC].real.copy()
    rho *= phase * damp
    for k, b in zip((G0, G1, AUX), dec.branching):
        rho[:, k, k] += b * (1.0 - survive) * pe
    return rho


def free_evolve(
    rho: np.ndarray, duration: float, ion: IonParams, dec: DecoherenceSpec
) -> np.ndarray:
    """Propagate one ion's state through ``duration`` seconds without drive.

    Qubit coherence ``rho[0, 1]`` picks up ``exp(+i delta_hf t)`` (the sign
    follows the Hamiltonian above), |e> decays with the lifetime and optical
    coherences with the optical coherence time.
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    out = np.array(rho, dtype=complex)[None].copy()
    _free_propagate(out, duration, np.array([ion.delta_opt]), np.array([ion.delta_hf]), dec)
    return out[0]


# --------------------------------------------------------------------------
# Compiled RK4 kernel
# --------------------------------------------------------------------------


@numba.njit(cache=True, nogil=True, fastmath=False)
def _rhs(r, out, m, d0, d1, d3, c0, c1, gam, b0, b1, b2, gcoh):
    # m <- H r, using the sparsity of H; aux row of H is zero.
    cc0 = c0.conjugate()
    cc1 = c1.conjugate()
    for j in range(4):
        m[0, j] = d0 * r[0, j] + cc0 * r[3, j]
        m[1, j] = d1 * r[1, j] + cc1 * r[3, j]
        m[2, j] = 0.0
        m[3, j] = d3 * r[3, j] + c0 * r[0, j] + c1 * r[1, j]
    for i in range(4):
        for j in range(4):
            out[i, j] = -1j * (m[i, j] - m[j, i].conjugate())
    pe = r[3, 3]
    out[3, 3] -= gam * pe
    out[0, 0] += gam * b0 * pe
    out[1, 1] += gam * b1 * pe
    out[2, 2] += gam * b2 * pe
    for j in range(3):
        out[3, j] -= gcoh * r[3, j]
        out[j, 3] -= gcoh * r[j, 3]


@numba.njit(cache=True, nogil=True)
def _rk4_ions(rho, d_opt, d_hf, scale, g0, g1, dt, gam, b0, b1, b2, gcoh, dwell, peak):
    n_steps = (g0.shape[0] - 1) // 2
    k1 = np.empty((4, 4), dtype=np.complex128)
    k2 = np.empty((4, 4), dtype=np.complex128)
    k3 = np.empty((4, 4), dtype=np.complex128)
    k4 = np.empty((4, 4), dtype=np.complex128)
    tmp = np.empty((4, 4), dtype=np.complex128)
    m = np.empty((4, 4), dtype=np.complex128)
    h2 = 0.5 * dt
    h6 = dt / 6.0
    for ion in range(rho.shape[0]):
        r = rho[ion]
        d0 = -0.5 * d_hf[ion]
        d1 = 0.5 * d_hf[ion]
        d3 = d_opt[ion]
        s = 0.5 * scale[ion]
        acc = 0.0
        pmax = peak[ion]
        pe_prev = r[3, 3].real
        for k in range(n_steps):
            a0 = s * g0[2 * k]
            a1 = s * g1[2 * k]
            m0 = s * g0[2 * k + 1]
            m1 = s * g1[2 * k + 1]
            e0 = s * g0[2 * k + 2]
            e1 = s * g1[2 * k + 2]
            _rhs(r, k1, m, d0, d1, d3, a0, a1, gam, b0, b1, b2, gcoh)
            for i in range(4):
                for j in range(4):
                    tmp[i, j] = r[i, j] + h2 * k1[i, j]
            _rhs(tmp, k2, m, d0, d1, d3, m0, m1, gam, b0, b1, b2, gcoh)
            for i in range(4):
                for j in range(4):
                    tmp[i, j] = r[i, j] + h2 * k2[i, j]
            _rhs(tmp, k3, m, d0, d1, d3, m0, m1, gam, b0, b1, b2, gcoh)
            for i in range(4):
                for j in range(4):
                    tmp[i, j] = r[i, j] + dt * k3[i, j]
            _rhs(tmp, k4, m, d0, d1, d3, e0, e1, gam, b0, b1, b2, gcoh)
            for i in range(4):
                for j in range(4):
                    r[i, j] += h6 * (k1[i, j] + 2.0 * (k2[i, j] + k3[i, j]) + k4[i, j])
            pe = r[3, 3].real
            acc += h2 * (pe_prev + pe)
            if pe > pmax:
                pmax = pe
            pe_prev = pe
        # Keep the stored state exactly Hermitian.
        for i in range(4):
            r[i, i] = r[i, i].real
            for j in range(i + 1, 4):
                v = 0.5 * (r[i, j] + r[j, i].conjugate())
                r[i, j] = v
                r[j, i] = v.conjugate()
        dwell[ion] += acc
        peak[ion] = pmax


def _segment_grid(t0: float, t1: float, dt_max: float):
    n = max(1, int(math.ceil((t1 - t0) / dt_max - 1e-9)))
    dt = (t1 - t0) / n
    return n, dt, t0 + 0.5 * dt * np.arange(2 * n + 1)


def _rates(dec: DecoherenceSpec):
    gam = dec.decay_rate
    b0, b1, b2 = dec.branching
    return gam, b0, b1, b2, 0.5 * gam + dec.pure_dephasing_rate


def _run_kernel(rho, ens_arrays, g0, g1, dt, rates, dwell, peak, workers):
    d_opt, d_hf, scale = ens_arrays
    n = rho.shape[0]
    if workers <= 1 or n < 2 * workers:
        _rk4_ions(rho, d_opt, d_hf, scale, g0, g1, dt, *rates, dwell, peak)
        return
    bounds = np.linspace(0, n, workers + 1).astype(int)

    def job(a, b):
        _rk4_ions(
            rho[a:b], d_opt[a:b], d_hf[a:b], scale[a:b], g0, g1, dt, *rates,
            dwell[a:b], peak[a:b],
        )

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda ab: job(*ab), zip(bounds[:-1], bounds[1:])))


# --------------------------------------------------------------------------
# Adaptive reference path
# --------------------------------------------------------------------------


def _adaptive_segment(rho, t0, t1, pulse, ion, dec, scheme, settings):
    ops = lindblad_operators(dec)
    cross = settings.include_cross_coupling

    def f(t, y):
        h = hamiltonian_at(ion, pulse, scheme, t, cross)
        return lindblad_rhs(h, y.reshape(4, 4), ops).ravel()

    sol = solve_ivp(
        f, (t0, t1), rho.ravel(), method="RK45",
        rtol=settings.rel_tol, atol=settings.rel_tol * 1e-3,
    )
    if sol.status != 0:
        raise IntegrationError(sol.message, float(sol.t[-1]))
    out = sol.y[:, -1].reshape(4, 4)
    return 0.5 * (out + out.conj().T)


# --------------------------------------------------------------------------
# Public evolution entry points
# --------------------------------------------------------------------------


def _as_arrays(ions):
    if isinstance(ions, IonParams):
        ions = Ensemble.from_ions([ions])
    elif not isinstance(ions, Ensemble):
        ions = Ensemble.from_ions(ions)
    return ions, (
        np.ascontiguousarray(ions.delta_opt, dtype=float),
        np.ascontiguousarray(ions.delta_hf, dtype=float),
        np.ascontiguousarray(ions.rabi_scale, dtype=float),
    )


def evolve_ensemble(
    rho0: np.ndarray,
    seq: PulseSequence,
    ions,
    dec: DecoherenceSpec,
    settings: EvolutionSettings = EvolutionSettings(),
    scheme: LevelScheme = LevelScheme(),
    stats: EvolutionStats | None = None,
) -> np.ndarray:
    """Evolve every ion of an ensemble through ``seq``.

    Parameters
    ----------
    rho0 : ndarray
        A single 4x4 state applied to every ion, or a stack ``(n_ions, 4, 4)``.
    ions : Ensemble, IonParams or iterable of IonParams
    stats : EvolutionStats, optional
        Accumulates excited-state dwell and peak population in place.

    Returns
    -------
    ndarray of shape ``(n_ions, 4, 4)``
    """
    ens, arrays = _as_arrays(ions)
    n = len(ens)
    rho0 = np.asarray(rho0, dtype=complex)
    rho = np.array(np.broadcast_to(rho0, (n, N_LEVELS, N_LEVELS)), dtype=np.complex128)
    if stats is None:
        stats = EvolutionStats(np.zeros(n), np.zeros(n))
    stats.peak_excited = np.maximum(stats.peak_excited, rho[:, EXC, EXC].real)

    if settings.integrator == "rk45-adaptive":
        for i in range(n):
            rho[i] = _evolve_adaptive(rho[i], seq, ens[i], dec, settings, scheme)
        return rho

    rates = _rates(dec)
    cross = settings.include_cross_coupling
    for t0, t1, pulse in seq.segments():
        if pulse is None and not cross:
            _free_propagate(rho, t1 - t0, arrays[0], arrays[1], dec)
            pe = rho[:, EXC, EXC].real
            stats.excited_dwell += _free_dwell(pe, t1 - t0, dec)
            continue
        n_steps, dt, grid = _segment_grid(t0, t1, settings.dt_max)
        g0, g1 = leg_couplings(pulse, grid, scheme, cross)
        _run_kernel(
            rho, arrays, np.ascontiguousarray(g0), np.ascontiguousarray(g1), dt,
            rates, stats.excited_dwell, stats.peak_excited, settings.workers,
        )
    return rho


def _free_dwell(pe_after, duration, dec):
    # pe_after = pe_before * exp(-gamma t); integrate the exponential exactly.
    gam = dec.decay_rate
    if gam == 0:
        return pe_after * duration
    pe_before = pe_after * math.exp(gam * duration)
    return pe_before * (1.0 - math.exp(-gam * duration)) / gam


def _evolve_adaptive(rho, seq, ion, dec, settings, scheme):
    for t0, t1, pulse in seq.segments():
        if pulse is None and not settings.include_cross_coupling:
            rho = free_evolve(rho, t1 - t0, ion, dec)
        else:
            rho = _adaptive_segment(rho, t0, t1, pulse, ion, dec, scheme, settings)
    return rho


def evolve(
    rho0: np.ndarray,
    seq: PulseSequence,
    ion: IonParams,
    dec: DecoherenceSpec,
    settings: EvolutionSettings = EvolutionSettings(),
    scheme: LevelScheme = LevelScheme(),
) -> np.ndarray:
    """Final 4x4 state of one ion driven by ``seq``."""
    return evolve_ensemble(rho0, seq, ion, dec, settings, scheme)[0]


def trajectory(
    rho0: np.ndarray,
    seq: PulseSequence,
    ion: IonParams,
    dec: DecoherenceSpec,
    settings: EvolutionSettings = EvolutionSettings(),
    scheme: LevelScheme = LevelScheme(),
    stride: int = 10,
):
    """Sampled ``(times, states)`` of one ion, every ``stride`` RK4 steps."""
    ens, arrays = _as_arrays(ion)
    rho = np.array(rho0, dtype=np.complex128)[None].copy()
    rates = _rates(dec)
    dwell, peak = np.zeros(1), np.zeros(1)
    times, states = [0.0], [rho[0].copy()]
    for t0, t1, pulse in seq.segments():
        n_steps, dt, grid = _segment_grid(t0, t1, settings.dt_max)
        g0, g1 = leg_couplings(pulse, grid, scheme, settings.include_cross_coupling)
        for a in range(0, n_steps, stride):
            b = min(a + stride, n_steps)
            _rk4_ions(
                rho, *arrays, g0[2 * a: 2 * b + 1].copy(), g1[2 * a: 2 * b + 1].copy(),
                dt, *rates, dwell, peak,
            )
            times.append(t0 + b * dt)
            states.append(rho[0].copy())
    return np.array(times), np.array(states)


def write_trajectory_csv(path, times, states) -> None:
    """Dump ``(t, rho elements)`` rows; complex elements split into re/im."""
    import csv

    labels = ["0", "1", "aux", "e"]
    header = ["time_s"]
    for i in range(N_LEVELS):
        for j in range(N_LEVELS):
            header += [f"re_rho_{labels[i]}_{labels[j]}", f"im_rho_{labels[i]}_{labels[j]}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, r in zip(times, states):
            row = [repr(float(t))]
            for v in r.ravel():
                row += [repr(float(v.real)), repr(float(v.imag))]
            w.writerow(row)
