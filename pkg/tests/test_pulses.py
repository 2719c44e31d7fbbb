from __future__ import annotations

import csv
import math

import numpy as np
import pytest

from ensqubit.dynamics import leg_couplings
from ensqubit.physical_model import LevelScheme
from ensqubit.pulses import (
    PulseSequence,
    SechypShape,
    bright_dark_states,
    envelope,
    export_waveform,
    instantaneous_detuning,
    make_two_color,
    single_color,
)


class TestSechypShape:
    def test_fwhm(self):
        sh = SechypShape()
        half = sh.t_center + 0.5 * sh.t_fwhm
        assert abs(envelope(sh, half)) == pytest.approx(0.5 * sh.omega_peak, rel=1e-12)
        assert abs(envelope(sh, sh.t_center)) == pytest.approx(sh.omega_peak)

    def test_phase_derivative_matches_detuning(self):
        sh = SechypShape(carrier_offset=2 * math.pi * 50e3)
        t = np.linspace(0.3e-6, 4.1e-6, 41)
        h = 1e-11
        num = (np.angle(envelope(sh, t + h) / envelope(sh, t - h))) / (2 * h)
        np.testing.assert_allclose(num, instantaneous_detuning(sh, t), rtol=1e-5, atol=10.0)

    def test_chirp_symmetric(self):
        sh = SechypShape()
        d = instantaneous_detuning(sh, np.array([0.0, sh.t_total]))
        assert d[0] == pytest.approx(-d[1])
        assert abs(d[1]) < sh.chirp_half_width

    def test_support(self):
        sh = SechypShape()
        with pytest.raises(ValueError):
            envelope(sh, -1e-7)
        envelope(sh, -1e-7, check=False)

    @pytest.mark.parametrize(
        "kw", [{"omega_peak": 0.0}, {"t_fwhm": -1e-6}, {"t_total": 1e-6}]
    )
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            SechypShape(**kw)


class TestTwoColor:
    def test_relative_phase(self):
        sh = SechypShape()
        p = make_two_color(sh, phi=0.7, psi=0.2)
        a0, a1 = p.color_amplitudes(np.array([1e-6, 2.2e-6]))
        np.testing.assert_allclose(np.angle(a1 / a0), 0.7)

    def test_single_color(self):
        a0, a1 = single_color(SechypShape(), 1).color_amplitudes(2.2e-6)
        assert a0 == 0 and abs(a1) > 0

    @pytest.mark.parametrize("phi", [0.0, 1.0, math.pi, 4.0])
    def test_dark_state_decoupled(self, phi):
        p = make_two_color(SechypShape(), phi, 0.3)
        g0, g1 = leg_couplings(p, np.array([2.2e-6]), LevelScheme())
        bright, dark = bright_dark_states(phi)
        coupling = g0 * dark[0] + g1 * dark[1]
        assert abs(coupling[0]) < 1e-6 * abs(g0[0])
        assert abs(g0[0] * bright[0] + g1[0] * bright[1]) == pytest.approx(
            math.sqrt(2) * abs(g0[0])
        )


class TestPulseSequence:
    def test_contiguous_layout(self):
        sh = SechypShape()
        seq = PulseSequence.contiguous([make_two_color(sh, 0)] * 3, gap=1e-6)
        assert [p.start_time for p in seq.pulses] == pytest.approx([0, 5.4e-6, 10.8e-6])
        assert seq.total_duration == pytest.approx(15.2e-6)
        segs = list(seq.segments())
        assert len(segs) == 5 and segs[1][2] is None

    def test_overlap_rejected(self):
        sh = SechypShape()
        with pytest.raises(ValueError):
            PulseSequence((make_two_color(sh, 0), make_two_color(sh, 0, start_time=1e-6)))

    def test_then(self):
        sh = SechypShape()
        a = PulseSequence.contiguous([make_two_color(sh, 0)])
        b = a.then(a, gap=2e-6)
        assert b.pulses[1].start_time == pytest.approx(6.4e-6)

    def test_export_waveform(self, tmp_path):
        sh = SechypShape()
        seq = PulseSequence.contiguous([make_two_color(sh, 1.0), single_color(sh, 0)])
        path = export_waveform(seq, tmp_path / "w.csv", sample_rate=10e6)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["time_s", "amplitude0_rad_s", "phase0_rad", "amplitude1_rad_s", "phase1_rad"]
        assert len(rows) == 1 + 89
        peak = max(float(r[1]) for r in rows[1:])
        assert peak == pytest.approx(sh.omega_peak, rel=1e-6)
