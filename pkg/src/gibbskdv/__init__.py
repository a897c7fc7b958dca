"""Gibbs ensembles, convexity certificates and cnoidal-wave stability
for periodic KdV-type equations on the circle.

The package is organized bottom-up: truncated Fourier fields and their
calculus (`fields`), the three Hamiltonians and Gibbs potentials
(`hamiltonians`), convexity and log-Sobolev certificates (`convexity`),
ball-restricted Gibbs samplers (`sampling`), concentration checks
(`concentration`), Jacobi elliptic functions (`elliptic`), cnoidal
stationary waves (`cnoidal`), Hill/Floquet stability (`floquet`),
split-step flows and invariance experiments (`flow`), and a command-line
surface (`cli`).
"""

__version__ = "0.1.0"

from .fields import FourierField, GridField, from_grid, to_grid
from .hamiltonians import EnsembleParams, NlsField
from .convexity import certify_convexity
from .sampling import SampleBatch, sample_gibbs
from .concentration import empirical_mgf
from .cnoidal import CnoidalParams, solve_periodic_family
from .floquet import instability_intervals
from .flow import FlowConfig, evolve, invariance_experiment

__all__ = [
    "__version__",
    "FourierField",
    "GridField",
    "from_grid",
    "to_grid",
    "EnsembleParams",
    "NlsField",
    "certify_convexity",
    "SampleBatch",
    "sample_gibbs",
    "empirical_mgf",
    "CnoidalParams",
    "solve_periodic_family",
    "instability_intervals",
    "FlowConfig",
    "evolve",
    "invariance_experiment",
]
