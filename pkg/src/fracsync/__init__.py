"""Synchronization of coupled SDEs driven by fractional Brownian motion,
simulated through the fractional Ornstein-Uhlenbeck change of variables."""

from .errors import *  # noqa: F401,F403
from .paths import HurstParameter, RngSeed, SamplePath, TimeGrid, sample_fbm
from .fou import FouConfig, fou_stationary
from .drifts import DriftSpec, from_catalog
from .transform import AdditiveNoise, LinearNoiseCoeffs
from .integrate import CoupledConfig, CoupledState

__version__ = "0.1.0"
