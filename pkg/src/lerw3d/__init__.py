"""Loop-erased random walk on dyadic lattices in three dimensions: samplers,
exact Laplacian-walk laws, wired spanning trees, observables, curve metrics and
Monte Carlo estimators."""

__version__ = "0.1.0"

from .lattice import (  # noqa: F401
    Ball,
    Box,
    ExplicitSet,
    ExitDomain,
    HitSet,
    LatticePath,
    MaxSteps,
    RngStream,
    SimplePath,
    sample_srw,
    unit_ball,
)
from .loop_erasure import loop_erase, loop_erase_lep, sample_lerw  # noqa: F401
