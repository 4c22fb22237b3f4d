"""Biasing-density construction from surrogate failure sets.

A surrogate model is sampled under the nominal density; the parameter
points it flags as failing are collected and a single-component Gaussian
is fitted to them, yielding a biasing density concentrated near the
failure region.  When the surrogate finds too few failures to fit, the
nominal density itself is returned and the report says so.

An optional threshold relaxation widens the surrogate failure set
(failure under g < relax instead of g < 0).  Relaxation only affects the
density construction here; the estimators always apply the true limit
state, so unbiasedness is untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .densities import InsufficientSamplesError, fit_gaussian
from .models import LimitState, Model

__all__ = ["BiasingBuildReport", "build_biasing_density"]


@dataclass(frozen=True)
class BiasingBuildReport:
    """Outcome of one biasing-density build."""

    samples_drawn: int
    failures_found: int
    fell_back_to_nominal: bool
    density: object
    threshold_used: float

    def to_dict(self) -> dict:
        return {
            "samples_drawn": self.samples_drawn,
            "failures_found": self.failures_found,
            "fell_back_to_nominal": self.fell_back_to_nominal,
            "threshold_used": self.threshold_used,
            "density": self.density.to_dict(),
        }


def build_biasing_density(
    surrogate: Model,
    ls: LimitState,
    nominal,
    m: int,
    rng: np.random.Generator,
    threshold_relax: float | None = None,
) -> BiasingBuildReport:
    """Build a biasing density from the surrogate's (relaxed) failure set.

    Draws ``m`` nominal samples, evaluates the surrogate at each, keeps the
    points with g < relax (relax defaults to 0, the true failure
    condition), and fits a one-component Gaussian to them.  Falls back to
    the nominal density when fewer than d+2 failures are found.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    relax = 0.0 if threshold_relax is None else float(threshold_relax)
    if relax < 0.0:
        raise ValueError("threshold_relax must be nonnegative")

    if m == 0:
        return BiasingBuildReport(0, 0, True, nominal, relax)

    pts = nominal.sample(rng, m)
    g = ls.evaluate(surrogate.evaluate(pts))
    failing = pts[g < relax]
    failures = failing.shape[0]
    try:
        density = fit_gaussian(failing)
    except InsufficientSamplesError:
        return BiasingBuildReport(m, failures, True, nominal, relax)
    return BiasingBuildReport(m, failures, False, density, relax)
