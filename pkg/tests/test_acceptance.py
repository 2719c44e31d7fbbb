"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` verdict line (also repeated in
the terminal summary) with the measured value next to its tolerance, then
asserts the same condition.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import VERDICTS, ConstantDrive
from ensqubit.cli import main as cli_main
from ensqubit.dynamics import EvolutionSettings, EvolutionStats, evolve, evolve_ensemble, hamiltonian_at
from ensqubit.experiments import run_fid, run_tomography_suite, run_transfer
from ensqubit.gates import REPORTED_STATES, RotationSpec, compile_rotation, target_unitary
from ensqubit.physical_model import (
    EXC,
    DecoherenceSpec,
    IonParams,
    LevelScheme,
    calibrate_hf_sigma,
    initial_state,
    pure_state,
)
from ensqubit.pulses import PulseSequence, SechypShape, bright_dark_states, make_two_color
from ensqubit.tomography import PauliExpectations, reconstruct
from ensqubit.world import reference_world

SUPERPOSITIONS = ("+", "-", "+i", "-i")


def verdict(n: int, ok: bool, text: str) -> None:
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}: {text}"
    VERDICTS.append(line)
    print(line)


def trace_distance(a, b) -> float:
    return 0.5 * float(np.abs(np.linalg.eigvalsh(a - b)).sum())


def qubit_state(rho4):
    """Qubit block renormalized to unit trace, as the readout sees it."""
    block = rho4[:2, :2]
    return block / np.trace(block).real


def qubit_fidelity(psi, rho4) -> float:
    return float(np.real(psi.conj() @ rho4[:2, :2] @ psi))


def test_c01_reconstruction_round_trip():
    rng = np.random.default_rng(1)
    v = rng.normal(size=(1000, 3))
    v *= (rng.uniform(size=1000) ** (1 / 3) / np.linalg.norm(v, axis=1))[:, None]
    t0 = time.perf_counter()
    err = 0.0
    for x, y, z in v:
        rho = 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]])
        err = max(err, np.abs(reconstruct(PauliExpectations.of(rho)) - rho).max())
    dt = time.perf_counter() - t0
    ok = err <= 1e-12 and dt < 1.0
    verdict(1, ok, f"max element error {err:.2e} (<= 1e-12), runtime {dt:.3f} s (< 1 s)")
    assert ok


def test_c02_compiler_correctness():
    rng = np.random.default_rng(2)
    ion, dec = IonParams(), DecoherenceSpec.none()
    basis = (np.array([1, 0], complex), np.array([0, 1], complex))
    rho0 = np.stack([pure_state(k) for k in basis])
    t0 = time.perf_counter()
    worst = 1.0
    for theta, phi in rng.uniform(0, 2 * math.pi, size=(50, 2)):
        spec = RotationSpec(theta, phi)
        out = evolve_ensemble(rho0, compile_rotation(spec).sequence, [ion, ion], dec)
        u = target_unitary(spec)
        for k, ket in enumerate(basis):
            worst = min(worst, qubit_fidelity(u @ ket, out[k]))
    dt = time.perf_counter() - t0
    ok = worst >= 0.99 and dt < 60
    verdict(2, ok, f"worst state fidelity {worst:.5f} (>= 0.99), runtime {dt:.1f} s (< 60 s)")
    assert ok


def test_c03_dark_state_invariance():
    peaks = []
    for phi in (0.0, 1.0, math.pi / 2, 4.0):
        _, dark = bright_dark_states(phi)
        seq = PulseSequence.contiguous([make_two_color(SechypShape(), phi, 0.3)])
        st = EvolutionStats(np.zeros(1), np.zeros(1))
        evolve_ensemble(pure_state(dark), seq, IonParams(), DecoherenceSpec.none(), stats=st)
        peaks.append(st.peak_excited[0])
    peak = max(peaks)
    ok = peak <= 1e-3
    verdict(3, ok, f"peak excited population {peak:.2e} (<= 1e-3)")
    assert ok


def test_c04_echo_cancellation():
    ions = [IonParams(2 * math.pi * d, 0.0, 1.0) for d in (100e3, -100e3)]
    dec = DecoherenceSpec.none()
    worst_full, best_half = 0.0, math.inf
    for spec in (RotationSpec(math.pi / 2, math.pi / 2), RotationSpec(math.pi, 0.0),
                 RotationSpec(0.3, 1.0), RotationSpec(2.0, 4.0)):
        gate = compile_rotation(spec).sequence
        first_pair = PulseSequence(gate.pulses[:2])
        full = evolve_ensemble(initial_state(), gate, ions, dec)
        half = evolve_ensemble(initial_state(), first_pair, ions, dec)
        d_full = trace_distance(qubit_state(full[0]), qubit_state(full[1]))
        d_half = trace_distance(qubit_state(half[0]), qubit_state(half[1]))
        worst_full, best_half = max(worst_full, d_full), min(best_half, d_half)
    ok = worst_full <= 0.02 and best_half >= 5 * worst_full
    verdict(4, ok, f"qubit-state trace distance full gate {worst_full:.4f} (<= 0.02), "
                   f"without compensation pair {best_half:.4f} (>= 5x), worst over 4 rotations")
    assert ok


def test_c05_transfer_efficiency():
    t0 = time.perf_counter()
    rep = run_transfer(reference_world(n_ions=2000), with_spectra=False)
    dt = time.perf_counter() - t0
    ok = abs(rep.efficiency - 0.96) <= 0.02 and dt <= 120
    verdict(5, ok, f"transfer efficiency {rep.efficiency:.4f} (0.96 +- 0.02), "
                   f"runtime {dt:.1f} s at 2000 ions (<= 120 s)")
    assert ok


def test_c06_upper_state_bound():
    world = reference_world(n_ions=100, hf_broadening=False)
    rows = run_tomography_suite(world, SUPERPOSITIONS, repetitions=1)
    dwell = np.mean([r.dwell[0] for r in rows])
    fids = [r.qr_qst[0] for r in rows]
    dwell_ok = abs(dwell - 8.8e-6) <= 0.15 * 8.8e-6
    fid_ok = all(abs(f - 0.92) <= 0.03 for f in fids)
    ok = dwell_ok and fid_ok
    verdict(6, ok, f"mean excited dwell {dwell * 1e6:.2f} us (8.8 us +- 15%: "
                   f"{'ok' if dwell_ok else 'out'}), superposition F_QR+QST "
                   f"{', '.join(f'{f:.3f}' for f in fids)} (0.92 +- 0.03: {'ok' if fid_ok else 'out'})")
    assert ok


def test_c07_fid_calibration():
    sigma = calibrate_hf_sigma(0.2, 35e-6)
    world = reference_world(n_ions=10_000)
    assert world.ensemble.hf_sigma == pytest.approx(sigma)
    rep = run_fid(world, delay_max=40e-6, delay_step=5e-9, report_delays=(35e-6,))
    rem = rep.remaining[35e-6]
    ok = abs(rem - 0.20) <= 0.02 and abs(rep.beat_frequency - 10.2e6) <= 0.01 * 10.2e6
    verdict(7, ok, f"envelope at 35 us {rem:.4f} (0.20 +- 0.02), "
                   f"beat {rep.beat_frequency / 1e6:.4f} MHz (10.2 MHz +- 1%)")
    assert ok


def test_c08_table_ordering():
    world = reference_world(n_ions=100)
    rows = {r.label: r for r in run_tomography_suite(world, ("0",) + REPORTED_STATES, repetitions=1)}
    f0 = rows["0"].qr_qst[0]
    f1 = rows["1"].qr[0]
    sup = {k: rows[k].qr[0] for k in SUPERPOSITIONS}
    zero_ok = abs(f0 - 1.00) <= 0.02
    order_ok = all(f1 >= v for v in sup.values())
    gaps = ", ".join(f"{k}: {rows[k].to_json()['gap_qr_qst']:+.3f}" for k in rows)
    ok = zero_ok and order_ok
    verdict(8, ok, f"|0> fidelity {f0:.3f} (1.00 +- 0.02: {'ok' if zero_ok else 'out'}), "
                   f"|1> F_QR {f1:.3f} vs superposition F_QR "
                   f"{', '.join(f'{v:.3f}' for v in sup.values())} ({'ok' if order_ok else 'out'}); "
                   f"reported minus simulated F_QR+QST {gaps}")
    assert ok


def test_c09_oracle_equivalence():
    rng = np.random.default_rng(9)
    scheme, dec = LevelScheme(), DecoherenceSpec.none()
    # One RK4 step per nanosecond keeps the global error of a 4.4 us
    # segment below 1e-8 at the strongest drive used here.
    settings = EvolutionSettings(dt_max=1e-9)
    amp = SechypShape().omega_peak
    worst = 0.0
    for _ in range(10):
        ion = IonParams(2 * math.pi * rng.uniform(-200e3, 200e3), 2 * math.pi * rng.normal(0, 8e3),
                        rng.uniform(0.85, 1.15))
        a0, a1 = amp * rng.uniform(size=2) * np.exp(1j * rng.uniform(0, 2 * math.pi, 2))
        drive = ConstantDrive([(4.4e-6, a0, a1)])
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        psi /= np.linalg.norm(psi)
        rho0 = np.outer(psi, psi.conj())
        u = expm(-1j * hamiltonian_at(ion, next(drive.segments())[2], scheme, 0.0) * 4.4e-6)
        worst = max(worst, np.abs(evolve(rho0, drive, ion, dec, settings, scheme)
                                  - u @ rho0 @ u.conj().T).max())
    omega = 2 * math.pi * 1e6
    pe = evolve(initial_state(), ConstantDrive([(math.pi / omega, omega, 0.0)]), IonParams(), dec)[EXC, EXC].real
    ok = worst <= 1e-8 and abs(pe - 1) <= 1e-6
    verdict(9, ok, f"expm max element error {worst:.2e} per 4.4 us segment (<= 1e-8), "
                   f"square pi pulse P_e - 1 = {pe - 1:.1e} (|.| <= 1e-6)")
    assert ok


def test_c10_determinism(tmp_path):
    small = ["--n-ions", "16", "--seed", "77", "--set", "spectrum.points=101",
             "--set", "fid.delay_step_ns=20", "--set", "run.repetitions=1",
             "--set", "tomography.targets=1,+i", "--set", "sweep.axis1=omega_peak: 0.5, 2.0"]
    mismatched = []
    for verb in ("spectrum", "transfer", "tomo", "fid", "sweep"):
        outs = []
        for tag, workers in (("a", "1"), ("b", "1"), ("c", "4")):
            d = tmp_path / f"{verb}-{tag}"
            assert cli_main([verb, "--out", str(d), "--workers", workers] + small) == 0
            outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        if not (outs[0] == outs[1] == outs[2]):
            mismatched.append(verb)
    ok = not mismatched
    verdict(10, ok, "byte-identical outputs for 5 scenarios over repeated runs and 1 vs 4 workers"
                    + ("" if ok else f"; differing: {mismatched}"))
    assert ok
