"""Bayesian structural VAR inference with restrictions imposed by reparameterization.

Sign, ranking, bound, elasticity-ratio, and zero identifying restrictions are
compiled into a smooth bijection between an unconstrained vector and the
restricted structural space; the resulting posterior is sampled with a
self-contained No-U-Turn HMC sampler and validated against an independent
accept-reject oracle.
"""

__version__ = "0.1.0"

from . import bayes, diagnostics, linalg, oracle, sampler, transforms, varmodel  # noqa: F401
from .bayes import DataMatrices, FlatPrior, NIWParams, posterior_update  # noqa: F401
from .sampler import ChainOutput, SamplerConfig, run_chains  # noqa: F401
from .transforms import Kind, Restriction, RestrictionSchema  # noqa: F401
from .varmodel import ModelShape, ReducedFormParams, StructuralParams  # noqa: F401
