"""Compile equatorial-axis qubit rotations into four two-color sechyp pulses.

A pulse pair with relative phase ``phi`` lifts the bright state to |e> and
returns it; giving the return pulse an extra common phase ``theta`` leaves the
bright state with a relative phase ``exp(-i theta)`` against the dark state.
A second pair at ``phi + pi`` (which addresses the old dark state) and no path
phase makes the dark state collect the same optical-detuning phase as the
bright state did, so that phase becomes global.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pulses import PulseSequence, SechypShape, make_two_color

TWO_PI = 2 * math.pi

REPORTED_STATES = ("1", "+", "-", "+i", "-i")

_S = 1 / math.sqrt(2)
NAMED_STATES = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([_S, _S], dtype=complex),
    "-": np.array([_S, -_S], dtype=complex),
    "+i": np.array([_S, 1j * _S], dtype=complex),
    "-i": np.array([_S, -1j * _S], dtype=complex),
}


@dataclass(frozen=True)
class RotationSpec:
    """Path angle ``theta`` and two-color relative phase ``phi`` (both mod 2 pi)."""

    theta: float
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _wrap(self.theta))
        object.__setattr__(self, "phi", _wrap(self.phi))


def _wrap(a: float) -> float:
    a = math.fmod(float(a), TWO_PI)
    if a < 0:
        a += TWO_PI
    # Snap values that are 2 pi up to rounding back to 0.
    return 0.0 if TWO_PI - a < 1e-12 else a


@dataclass(frozen=True)
class CompiledGate:
    sequence: PulseSequence
    target: RotationSpec


def target_unitary(spec: RotationSpec) -> np.ndarray:
    """Qubit-basis matrix of the dark-state rotation ``(theta, phi)``."""
    h = 0.5 * spec.theta
    c, s = math.cos(h), math.sin(h)
    ep = np.exp(1j * spec.phi)
    u = np.array([[c, 1j * ep * s], [1j * s / ep, c]], dtype=complex)
    return np.exp(1j * h) * u


def rotation_for_state(target) -> RotationSpec:
    """Rotation taking |0> to ``target`` up to a global phase.

    ``target`` is a qubit ket or one of the labels in :data:`NAMED_STATES`.
    """
    psi = NAMED_STATES[target] if isinstance(target, str) else np.asarray(target, complex)
    if psi.shape != (2,):
        raise ValueError("target must be a two-component qubit state")
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise ValueError("target state is not normalized")
    a, b = abs(psi[0]), abs(psi[1])
    theta = 2 * math.atan2(b, a)
    if b < 1e-12:
        return RotationSpec(0.0, 0.0)
    if a < 1e-12:
        return RotationSpec(math.pi, 0.0)
    # U|0> = e^{i theta/2} (cos, i e^{-i phi} sin): match the relative phase.
    rel = np.angle(psi[1] / psi[0])
    return RotationSpec(theta, math.pi / 2 - rel)


def projection_rotation(axis: str) -> RotationSpec:
    """Rotation mapping the ``axis`` Bloch component onto z before readout."""
    if axis == "x":
        return rotation_for_state("-")
    if axis == "y":
        return rotation_for_state("-i")
    if axis == "z":
        return RotationSpec(0.0, 0.0)
    raise ValueError(f"unknown axis {axis!r}")


def compile_rotation(
    spec: RotationSpec, shape: SechypShape = SechypShape(), gap: float = 0.0
) -> CompiledGate:
    phi, theta = spec.phi, spec.theta
    pulses = [
        make_two_color(shape, phi, 0.0),
        make_two_color(shape, phi, theta),
        make_two_color(shape, phi + math.pi, 0.0),
        make_two_color(shape, phi + math.pi, 0.0),
    ]
    seq = PulseSequence.contiguous(pulses, gap, label=f"theta={theta:.6g},phi={phi:.6g}")
    return CompiledGate(seq, spec)


def bloch_vector(rho2: np.ndarray) -> np.ndarray:
    """(x, y, z) of a 2x2 density matrix."""
    return np.array(
        [2 * rho2[0, 1].real, -2 * rho2[0, 1].imag, (rho2[0, 0] - rho2[1, 1]).real]
    )
