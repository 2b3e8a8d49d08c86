"""Small result containers shared by the estimators and the runner."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EstimateRecord:
    """Monte Carlo estimate: point value, standard error, trial count."""

    value: float
    stderr: float
    trials: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.stderr >= 0:
            raise ValueError("stderr must be nonnegative")
        if self.trials < 0:
            raise ValueError("trials must be nonnegative")

    @classmethod
    def from_samples(cls, x, **meta) -> "EstimateRecord":
        x = np.asarray(x, dtype=float)
        n = x.size
        if n == 0:
            raise ValueError("no samples")
        se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(x.mean()), se, n, dict(meta))

    @classmethod
    def proportion(cls, hits: int, trials: int, **meta) -> "EstimateRecord":
        p = hits / trials
        return cls(p, math.sqrt(max(p * (1 - p), 0.0) / trials), trials, dict(meta))


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares line y = slope * x + intercept with OLS diagnostics.

    ``slope_stderr`` is the larger of the residual-based standard error and the
    one propagated from the per-point standard errors ``yerr``; on exact
    power laws both vanish.
    """

    x: np.ndarray
    y: np.ndarray
    slope: float
    intercept: float
    slope_stderr: float
    residuals: np.ndarray
    yerr: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def fit(cls, x, y, yerr=None, **meta) -> "ScalingFit":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.size < 3:
            from .errors import InsufficientLevels
            raise InsufficientLevels("need at least 3 points for a scaling fit")
        xc = x - x.mean()
        sxx = float(xc @ xc)
        slope = float(xc @ (y - y.mean()) / sxx)
        intercept = float(y.mean() - slope * x.mean())
        res = y - (slope * x + intercept)
        se_ols = math.sqrt(float(res @ res) / (x.size - 2) / sxx)
        se_mc = 0.0
        if yerr is not None:
            yerr = np.asarray(yerr, dtype=float)
            se_mc = math.sqrt(float(((xc / sxx) ** 2) @ (yerr ** 2)))
        return cls(x, y, slope, intercept, max(se_ols, se_mc), res, yerr, dict(meta))
