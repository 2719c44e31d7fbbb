"""Level scheme, decoherence parameters and the inhomogeneous ion ensemble.

Basis ordering used throughout the package::

    index   label
    -----   -----
      0     |0>     qubit ground level
      1     |1>     qubit ground level, qubit_splitting above |0>
      2     |aux>   spectator ground level (decay sink only)
      3     |e>     optically excited level

All frequencies stored on the dataclasses are in Hz (cycles); per-ion
detunings on :class:`IonParams` are angular (rad/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

G0, G1, AUX, EXC = 0, 1, 2, 3
N_LEVELS = 4

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


class ConfigError(ValueError):
    """Raised when a configuration value violates its invariant."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class LevelScheme:
    """Ground and excited hyperfine structure of the addressed ions.

    Parameters
    ----------
    qubit_splitting : float
        |0>-|1> splitting in Hz.
    aux_offset : float
        Position of |aux> relative to |0> in Hz (spectrum rendering only).
    excited_splittings : tuple of float
        The two upper-state hyperfine gaps in Hz.
    relative_strengths : tuple of float
        Oscillator-strength scale factors. The first three weight the lines
        to the three upper hyperfine levels; the fourth scales every line
        starting in |1> relative to the matching |0> line.
    """

    qubit_splitting: float = 10.2e6
    aux_offset: float = -17.3e6
    excited_splittings: tuple[float, float] = (4.6e6, 4.8e6)
    relative_strengths: tuple[float, float, float, float] = (1.0, 0.6, 0.35, 1.0)

    def __post_init__(self):
        if not self.qubit_splitting > 0:
            raise ConfigError("qubit_splitting", "must be > 0")
        if len(self.excited_splittings) != 2 or min(self.excited_splittings) <= 0:
            raise ConfigError("excited_splittings", "need two values > 0")
        if len(self.relative_strengths) != 4 or not all(
            0 < s <= 1 for s in self.relative_strengths
        ):
            raise ConfigError("relative_strengths", "need four values in (0, 1]")

    @property
    def line_offsets(self) -> np.ndarray:
        """Offsets (Hz) of the three upper hyperfine lines from the lowest one."""
        a, b = self.excited_splittings
        return np.array([0.0, a, a + b])


@dataclass(frozen=True)
class DecoherenceSpec:
    """Excited-state lifetime, optical coherence time and decay branching.

    ``t1_excited`` or ``t2_optical`` set to ``math.inf`` switches the
    corresponding channel off.
    """

    t1_excited: float = 164e-6
    t2_optical: float = 50e-6
    branching: tuple[float, float, float] = (0.45, 0.45, 0.10)

    def __post_init__(self):
        if not self.t1_excited > 0:
            raise ConfigError("t1_excited", "must be > 0")
        if not self.t2_optical > 0:
            raise ConfigError("t2_optical", "must be > 0")
        if len(self.branching) != 3 or any(not 0 <= b <= 1 for b in self.branching):
            raise ConfigError("branching", "need three probabilities in [0, 1]")
        if abs(sum(self.branching) - 1.0) > 1e-9:
            raise ConfigError("branching", "must sum to 1")
        if self.t2_optical > 2 * self.t1_excited:
            raise ConfigError("t2_optical", "must not exceed 2 * t1_excited")

    @classmethod
    def none(cls) -> DecoherenceSpec:
        """Decoherence-free limit."""
        return cls(t1_excited=math.inf, t2_optical=math.inf)

    @property
    def decay_rate(self) -> float:
        return 0.0 if math.isinf(self.t1_excited) else 1.0 / self.t1_excited

    @property
    def pure_dephasing_rate(self) -> float:
        """gamma_phi = 1/T2 - 1/(2 T1), the extra decay of optical coherences."""
        inv_t2 = 0.0 if math.isinf(self.t2_optical) else 1.0 / self.t2_optical
        return max(inv_t2 - 0.5 * self.decay_rate, 0.0)

    @property
    def is_free(self) -> bool:
        return self.decay_rate == 0.0 and self.pure_dephasing_rate == 0.0


@dataclass(frozen=True)
class EnsembleSpec:
    """Distributions from which the ions of one ensemble qubit are drawn."""

    n_ions: int = 2000
    optical_width: float = 170e3
    optical_shape: Literal["gaussian", "lorentzian-truncated"] = "gaussian"
    hf_sigma: float = 0.0
    rabi_rel_spread: float = 0.15
    rng_seed: int = 2007

    def __post_init__(self):
        if int(self.n_ions) != self.n_ions or self.n_ions < 1:
            raise ConfigError("n_ions", "must be an integer >= 1")
        if not self.optical_width >= 0:
            raise ConfigError("optical_width", "must be >= 0")
        if self.optical_shape not in ("gaussian", "lorentzian-truncated"):
            raise ConfigError("optical_shape", f"unknown shape {self.optical_shape!r}")
        if not self.hf_sigma >= 0:
            raise ConfigError("hf_sigma", "must be >= 0")
        if not 0 <= self.rabi_rel_spread < 1:
            raise ConfigError("rabi_rel_spread", "must lie in [0, 1)")


@dataclass(frozen=True)
class IonParams:
    """Static parameters of one ion (or, with array fields, of many)."""

    delta_opt: float = 0.0
    delta_hf: float = 0.0
    rabi_scale: float = 1.0

    def __post_init__(self):
        if np.any(np.asarray(self.rabi_scale) <= 0):
            raise ConfigError("rabi_scale", "must be > 0")


@dataclass(frozen=True)
class Ensemble:
    """Column-wise storage of sampled ion parameters (angular units)."""

    delta_opt: np.ndarray
    delta_hf: np.ndarray
    rabi_scale: np.ndarray
    spec: EnsembleSpec | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.delta_opt)

    def __getitem__(self, i: int) -> IonParams:
        return IonParams(
            float(self.delta_opt[i]), float(self.delta_hf[i]), float(self.rabi_scale[i])
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @classmethod
    def from_ions(cls, ions) -> Ensemble:
        ions = [ions] if isinstance(ions, IonParams) else list(ions)
        return cls(
            np.array([i.delta_opt for i in ions], dtype=float),
            np.array([i.delta_hf for i in ions], dtype=float),
            np.array([i.rabi_scale for i in ions], dtype=float),
        )


def sample_ensemble(spec: EnsembleSpec) -> Ensemble:
    """Draw ``spec.n_ions`` ions.

    Each distribution gets its own child stream of the seed, so changing
    one width leaves the draws of the other parameters untouched.
    """
    n = spec.n_ions
    seeds = np.random.SeedSequence(spec.rng_seed).spawn(3)
    rng_opt, rng_hf, rng_rabi = (np.random.default_rng(s) for s in seeds)

    if spec.optical_shape == "gaussian":
        sigma = spec.optical_width / FWHM_PER_SIGMA
        delta_opt = rng_opt.standard_normal(n) * sigma
    else:
        # Lorentzian with the given FWHM, cut at +-5 half widths.
        half = spec.optical_width / 2.0
        cut = math.atan(5.0)
        delta_opt = half * np.tan(rng_opt.uniform(-cut, cut, n))
    delta_hf = rng_hf.standard_normal(n) * spec.hf_sigma
    rabi = 1.0 + spec.rabi_rel_spread * rng_rabi.uniform(-1.0, 1.0, n)

    return Ensemble(
        delta_opt=2 * np.pi * delta_opt,
        delta_hf=2 * np.pi * delta_hf,
        rabi_scale=rabi,
        spec=spec,
    )


def initial_state() -> np.ndarray:
    """Pure |0><0| over the four-level basis."""
    rho = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    rho[G0, G0] = 1.0
    return rho


def pure_state(qubit_ket) -> np.ndarray:
    """Four-level density matrix of a pure qubit state (|0>, |1> amplitudes)."""
    psi = np.zeros(N_LEVELS, dtype=complex)
    psi[:2] = np.asarray(qubit_ket, dtype=complex)
    return np.outer(psi, psi.conj())


def check_density_matrix(
    rho: np.ndarray, herm_tol: float = 1e-12, trace_tol: float = 1e-9, pos_tol: float = 1e-8
) -> None:
    """Raise ``ValueError`` unless ``rho`` (or a stack of them) is a valid state."""
    rho = np.asarray(rho)
    herm = np.max(np.abs(rho - np.swapaxes(rho, -1, -2).conj()))
    if herm > herm_tol:
        raise ValueError(f"not Hermitian: deviation {herm:.3g}")
    tr = np.trace(rho, axis1=-2, axis2=-1)
    if np.max(np.abs(tr - 1.0)) > trace_tol:
        raise ValueError(f"trace deviates from 1 by {np.max(np.abs(tr - 1.0)):.3g}")
    hermitian_part = 0.5 * (rho + np.swapaxes(rho, -1, -2).conj())
    lowest = np.min(np.linalg.eigvalsh(hermitian_part))
    if lowest < -pos_tol:
        raise ValueError(f"negative eigenvalue {lowest:.3g}")


def calibrate_hf_sigma(target_remaining: float, at_time: float) -> float:
    """Hyperfine standard deviation (Hz) giving a Gaussian FID envelope value.

    Solves ``exp(-(2 pi sigma)^2 t^2 / 2) = target_remaining`` at ``t = at_time``.
    """
    if not 0 < target_remaining < 1:
        raise ValueError("target_remaining must lie in (0, 1)")
    if not at_time > 0:
        raise ValueError("at_time must be > 0")
    return math.sqrt(2.0 * math.log(1.0 / target_remaining)) / (2 * math.pi * at_time)
