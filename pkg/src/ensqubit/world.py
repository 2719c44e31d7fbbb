"""Bundled simulation parameters and named presets."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .dynamics import EvolutionSettings
from .physical_model import DecoherenceSpec, EnsembleSpec, LevelScheme, calibrate_hf_sigma
from .pulses import SechypShape

# Qubit coherence left after 35 us in the free induction decay measurement.
FID_REMAINING = 0.2
FID_TIME = 35e-6


@dataclass(frozen=True)
class World:
    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    scheme: LevelScheme = field(default_factory=LevelScheme)
    decoherence: DecoherenceSpec = field(default_factory=DecoherenceSpec)
    settings: EvolutionSettings = field(default_factory=EvolutionSettings)
    shape: SechypShape = field(default_factory=SechypShape)
    gap: float = 0.0

    def with_ensemble(self, **kw) -> World:
        return replace(self, ensemble=replace(self.ensemble, **kw))

    def with_decoherence(self, **kw) -> World:
        return replace(self, decoherence=replace(self.decoherence, **kw))

    def with_shape(self, **kw) -> World:
        return replace(self, shape=replace(self.shape, **kw))

    def with_settings(self, **kw) -> World:
        return replace(self, settings=replace(self.settings, **kw))


def reference_world(n_ions: int = 2000, seed: int = 2007, hf_broadening: bool = True) -> World:
    """Defaults of the Pr:YSO experiment, hyperfine width from the FID data."""
    hf = calibrate_hf_sigma(FID_REMAINING, FID_TIME) if hf_broadening else 0.0
    return World(
        ensemble=EnsembleSpec(
            n_ions=n_ions,
            optical_width=170e3,
            optical_shape="gaussian",
            hf_sigma=hf,
            rabi_rel_spread=0.15,
            rng_seed=seed,
        )
    )


def ideal_world(n_ions: int = 1, seed: int = 2007) -> World:
    """No decoherence and no inhomogeneity."""
    return World(
        ensemble=EnsembleSpec(
            n_ions=n_ions, optical_width=0.0, hf_sigma=0.0, rabi_rel_spread=0.0, rng_seed=seed
        ),
        decoherence=DecoherenceSpec.none(),
    )


PRESETS = {"paper-2007": reference_world, "ideal": ideal_world}
