from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ensqubit.dynamics import evolve
from ensqubit.gates import (
    NAMED_STATES,
    REPORTED_STATES,
    RotationSpec,
    bloch_vector,
    compile_rotation,
    projection_rotation,
    rotation_for_state,
    target_unitary,
)
from ensqubit.physical_model import DecoherenceSpec, IonParams, pure_state
from ensqubit.pulses import PulseSequence, bright_dark_states

angles = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


def overlap_up_to_phase(a, b):
    return abs(np.vdot(a, b)) ** 2


class TestRotationSpec:
    def test_wraps(self):
        r = RotationSpec(-math.pi / 2, 5 * math.pi)
        assert r.theta == pytest.approx(1.5 * math.pi)
        assert r.phi == pytest.approx(math.pi)

    def test_snap(self):
        assert RotationSpec(2 * math.pi - 1e-14, 0.0).theta == 0.0


class TestTargetUnitary:
    @given(angles, angles)
    def test_unitary(self, theta, phi):
        u = target_unitary(RotationSpec(theta, phi))
        np.testing.assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-12)

    def test_identity(self):
        np.testing.assert_allclose(target_unitary(RotationSpec(0, 1.3)), np.eye(2))

    def test_pi_flip(self):
        u = target_unitary(RotationSpec(math.pi, 0.0))
        assert abs(u[1, 0]) == pytest.approx(1.0)


class TestRotationForState:
    @pytest.mark.parametrize("label", sorted(NAMED_STATES))
    def test_named(self, label):
        psi = target_unitary(rotation_for_state(label)) @ np.array([1, 0])
        assert overlap_up_to_phase(psi, NAMED_STATES[label]) == pytest.approx(1.0)

    @given(st.floats(0.01, 3.13), st.floats(-3.1, 3.1))
    @settings(max_examples=50)
    def test_arbitrary(self, theta, rel):
        ket = np.array([math.cos(theta / 2), math.sin(theta / 2) * np.exp(1j * rel)])
        psi = target_unitary(rotation_for_state(ket)) @ np.array([1, 0])
        assert overlap_up_to_phase(psi, ket) == pytest.approx(1.0, abs=1e-12)

    def test_table_values(self):
        assert (rotation_for_state("+").theta, rotation_for_state("+").phi) == pytest.approx(
            (math.pi / 2, math.pi / 2)
        )
        assert rotation_for_state("1").theta == pytest.approx(math.pi)

    def test_unnormalized(self):
        with pytest.raises(ValueError):
            rotation_for_state(np.array([1.0, 1.0]))

    def test_projection_axes(self):
        for axis, vec in (("x", [1, 0, 0]), ("y", [0, 1, 0]), ("z", [0, 0, 1])):
            u = target_unitary(projection_rotation(axis))
            # U^dagger Z U picks out the requested Pauli component.
            back = u.conj().T @ np.array([1, 0])
            b = bloch_vector(np.outer(back, back.conj()))
            np.testing.assert_allclose(b, vec, atol=1e-12)
        with pytest.raises(ValueError):
            projection_rotation("w")


class TestCompiledGate:
    def test_structure(self):
        g = compile_rotation(RotationSpec(1.0, 0.5), gap=1e-6)
        assert len(g.sequence.pulses) == 4
        assert [p.psi for p in g.sequence.pulses] == pytest.approx([0, 1.0, 0, 0])
        assert [p.phi for p in g.sequence.pulses] == pytest.approx(
            [0.5, 0.5, 0.5 + math.pi, 0.5 + math.pi]
        )

    @pytest.mark.parametrize("label", REPORTED_STATES)
    def test_ideal_ion_prepares_state(self, label):
        seq = compile_rotation(rotation_for_state(label)).sequence
        rho = evolve(pure_state([1, 0]), seq, IonParams(), DecoherenceSpec.none())
        psi = NAMED_STATES[label]
        assert np.real(psi.conj() @ rho[:2, :2] @ psi) >= 0.999

    @pytest.mark.parametrize("phi", [0.0, 1.2, 3.5])
    def test_compensation_pair(self, phi):
        # Two identical sechyps are a closed 2 pi cycle on the |D>-|e> sphere,
        # so the pair alone flips the sign of |D> and leaves |B> alone; the
        # matching sign from pulses 1-2 makes the full theta = 0 gate the identity.
        pulses = compile_rotation(RotationSpec(0.0, phi)).sequence.pulses
        pair = PulseSequence.contiguous(pulses[2:])
        full = PulseSequence.contiguous(pulses)
        bright, dark = bright_dark_states(phi)
        flip = np.eye(2) - 2 * np.outer(dark, dark.conj())
        for ket in (np.array([1, 0]), np.array([1, 1j]) / math.sqrt(2), np.array([0.6, -0.8])):
            rho = evolve(pure_state(ket), pair, IonParams(), DecoherenceSpec.none())
            out = flip @ ket
            # A truncated sechyp pair returns 99.8 % of the bright population.
            assert np.real(out.conj() @ rho[:2, :2] @ out) >= 0.998
            rho = evolve(pure_state(ket), full, IonParams(), DecoherenceSpec.none())
            assert np.real(ket.conj() @ rho[:2, :2] @ ket) >= 0.995
