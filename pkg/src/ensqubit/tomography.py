"""Three-projection state tomography of the simulated ensemble qubit.

The only readout is the z projection, the fraction of qubit population in
|0> versus |1> renormalized to the qubit subspace. x and y are read by first
applying the rotations that prepare |0>-|1> and |0>-i|1>; z uses the
four-pulse identity so all three axes see the same number of pulses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import EvolutionStats, evolve_ensemble
from .gates import RotationSpec, compile_rotation, projection_rotation, target_unitary
from .physical_model import AUX, EXC, G0, G1, initial_state, sample_ensemble
from .world import World

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
AXES = ("x", "y", "z")


class DegenerateReadoutError(ArithmeticError):
    """An ion has no population left in the qubit levels."""


@dataclass(frozen=True)
class PauliExpectations:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in AXES:
            v = getattr(self, name)
            if not math.isfinite(v) or abs(v) > 1.25:
                raise ValueError(f"{name} expectation {v!r} out of range")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def of(cls, rho2: np.ndarray) -> PauliExpectations:
        """Exact expectations of a 2x2 density matrix."""
        return cls(*(float(np.trace(p @ rho2).real) for p in (PAULI_X, PAULI_Y, PAULI_Z)))


@dataclass
class TomographyRecord:
    expectations: PauliExpectations
    rho: np.ndarray
    fidelity_qr_qst: float
    fidelity_qr: float
    target_state: np.ndarray
    label: str = ""
    seed: int | None = None
    prep: RotationSpec | None = None
    # Diagnostics, not part of the reconstruction.
    leakage: dict = field(default_factory=dict)
    excited_dwell: float = float("nan")

    def to_json(self) -> dict:
        e = self.expectations
        return {
            "target": self.label,
            "seed": self.seed,
            "prep": None if self.prep is None else {"theta": self.prep.theta, "phi": self.prep.phi},
            "expectations": {"x": e.x, "y": e.y, "z": e.z},
            "rho_real": self.rho.real.tolist(),
            "rho_imag": self.rho.imag.tolist(),
            "fidelity_qr_qst": self.fidelity_qr_qst,
            "fidelity_qr": self.fidelity_qr,
            "target_state_real": self.target_state.real.tolist(),
            "target_state_imag": self.target_state.imag.tolist(),
            "leakage": self.leakage,
            "excited_dwell_s": self.excited_dwell,
        }


def measure_z(final_states) -> float:
    """Ensemble mean of (P0 - P1) / (P0 + P1)."""
    rho = np.asarray(final_states)
    if rho.ndim == 2:
        rho = rho[None]
    if rho.shape[0] == 0:
        raise ValueError("no ions to measure")
    p0 = rho[:, G0, G0].real
    p1 = rho[:, G1, G1].real
    total = p0 + p1
    if np.any(total <= 1e-15):
        raise DegenerateReadoutError("an ion has no population in |0> or |1>")
    return float(np.mean((p0 - p1) / total))


def reconstruct(e: PauliExpectations) -> np.ndarray:
    """Linear inversion ``(I + x X + y Y + z Z) / 2``; no positivity fix-up."""
    return 0.5 * (np.eye(2) + e.x * PAULI_X + e.y * PAULI_Y + e.z * PAULI_Z)


def fidelity(psi, rho: np.ndarray) -> float:
    """``Re <psi|rho|psi>``; exceeds 1 for unphysical ``rho``."""
    psi = np.asarray(psi, dtype=complex)
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise ValueError("psi is not normalized")
    return float(np.real(psi.conj() @ rho @ psi))


def qr_fidelity(f_qr_qst: float) -> float:
    """Single-rotation fidelity, treating QR+QST as two equal rotations."""
    if f_qr_qst < 0:
        raise ValueError("fidelity must be >= 0")
    return math.sqrt(f_qr_qst)


def run_tomography(
    prep: RotationSpec,
    world: World,
    *,
    label: str = "",
    ensemble=None,
) -> TomographyRecord:
    """Prepare, project onto each axis and reconstruct.

    Each axis is a separate experiment on the same crystal: the ensemble is
    reset to |0>, rotated by ``prep`` and then by the axis projection. The
    preparation is deterministic, so its output is computed once and reused
    as the starting point of all three projections.
    """
    ens = sample_ensemble(world.ensemble) if ensemble is None else ensemble
    n = len(ens)
    dec, settings, scheme = world.decoherence, world.settings, world.scheme
    prep_seq = compile_rotation(prep, world.shape, world.gap).sequence

    prep_stats = EvolutionStats(np.zeros(n), np.zeros(n))
    prepared = evolve_ensemble(initial_state(), prep_seq, ens, dec, settings, scheme, prep_stats)

    values, leakage, dwell = {}, {}, []
    for axis in AXES:
        proj_seq = compile_rotation(projection_rotation(axis), world.shape, world.gap).sequence
        st = EvolutionStats(prep_stats.excited_dwell.copy(), prep_stats.peak_excited.copy())
        final = evolve_ensemble(prepared, proj_seq, ens, dec, settings, scheme, st)
        values[axis] = measure_z(final)
        leakage[axis] = {
            "excited": float(final[:, EXC, EXC].real.mean()),
            "aux": float(final[:, AUX, AUX].real.mean()),
        }
        dwell.append(st.excited_dwell.mean())

    e = PauliExpectations(values["x"], values["y"], values["z"])
    rho = reconstruct(e)
    psi = target_unitary(prep) @ np.array([1.0, 0.0], dtype=complex)
    f = fidelity(psi, rho)
    return TomographyRecord(
        expectations=e,
        rho=rho,
        fidelity_qr_qst=f,
        fidelity_qr=qr_fidelity(max(f, 0.0)),
        target_state=psi,
        label=label,
        seed=world.ensemble.rng_seed,
        prep=prep,
        leakage=leakage,
        excited_dwell=float(np.mean(dwell)),
    )
