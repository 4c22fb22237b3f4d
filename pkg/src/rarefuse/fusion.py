"""Minimum-variance fusion of unbiased probability estimators.

Given k unbiased estimators with covariance matrix S, the weights that
minimize the variance of the linear combination sum(alpha_i * P_i) subject
to the unbiasedness constraint sum(alpha_i) = 1 solve the equality-
constrained quadratic program

    min  alpha' S alpha   s.t.  alpha' 1 = 1,

whose optimality system is the symmetric (k+1) x (k+1) block

    [ S   1 ] [alpha]   [0]
    [ 1'  0 ] [lambda] = [1].

For nonsingular S the solution is alpha = S^-1 1 / (1' S^-1 1) with
variance 1 / (1' S^-1 1); for uncorrelated estimators this reduces to the
classical inverse-variance weighted mean.  The block system is solved with
a symmetric-indefinite factorization plus one step of iterative refinement
rather than through an explicit inverse, which behaves better for
ill-conditioned S.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .estimators import EstimatorResult

__all__ = [
    "CovarianceMatrix",
    "FusedResult",
    "optimal_weights",
    "optimal_weights_diagonal",
    "fuse",
    "componentwise_weight_residual",
    "dominance_criterion",
    "SingularCovarianceError",
]

# 1-norm condition estimates beyond this are treated as singular.
CONDITION_LIMIT = 1e12

# Zero sample variances paired with a positive estimate are floored here so
# the inverse-variance weights stay finite; the input is flagged.
VARIANCE_FLOOR = 1e-300


class SingularCovarianceError(ValueError):
    """Covariance matrix is singular or numerically indistinguishable from
    singular; fuse with the diagonal (independent-estimator) form instead."""


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetric covariance matrix of a set of estimators."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("covariance matrix must be square")
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.T).max() > 1e-14 * scale:
            raise ValueError("covariance matrix must be symmetric within 1e-14")
        object.__setattr__(self, "entries", m)
        m.setflags(write=False)

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    def condition_estimate(self) -> float:
        """1-norm condition number; inf when the matrix is exactly singular."""
        try:
            return float(np.linalg.cond(self.entries, 1))
        except np.linalg.LinAlgError:
            return float("inf")

    @property
    def is_singular(self) -> bool:
        c = self.condition_estimate()
        return not np.isfinite(c) or c > CONDITION_LIMIT

    @classmethod
    def diagonal(cls, variances) -> "CovarianceMatrix":
        return cls(np.diag(np.asarray(variances, dtype=float)))


@dataclass(frozen=True)
class FusedResult:
    """Fused estimate with its weights and optimality diagnostics.

    ``weights`` has one entry per *input* estimator; excluded inputs carry
    weight 0, so the weights still sum to one over the informative ones.
    ``covariance_used`` is the matrix over the included estimators only.
    """

    estimate: float
    weights: np.ndarray
    multiplier: float
    variance: float
    covariance_used: CovarianceMatrix | None
    excluded: list[int] = field(default_factory=list)
    floored: list[int] = field(default_factory=list)
    no_information: bool = False

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "weights": np.asarray(self.weights).tolist(),
            "multiplier": self.multiplier,
            "variance": self.variance,
            "covariance_used": (
                self.covariance_used.entries.tolist()
                if self.covariance_used is not None
                else None
            ),
            "excluded": list(self.excluded),
            "floored": list(self.floored),
            "no_information": self.no_information,
        }


def _solve_kkt(entries: np.ndarray) -> tuple[np.ndarray, float]:
    """Solve the optimality block system; returns (weights, multiplier)."""
    k = entries.shape[0]
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = entries
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    x = scipy.linalg.solve(kkt, rhs, assume_a="sym")
    # one step of iterative refinement
    residual = rhs - kkt @ x
    x = x + scipy.linalg.solve(kkt, residual, assume_a="sym")
    return x[:k], float(x[k])


def optimal_weights(cov: CovarianceMatrix) -> tuple[np.ndarray, float, float]:
    """Minimum-variance weights for possibly correlated estimators.

    Returns ``(weights, multiplier, variance)`` where the multiplier is the
    Lagrange multiplier of the sum-to-one constraint (equal to minus the
    fused variance) and ``variance = weights' S weights``.

    Raises :class:`SingularCovarianceError` when the 1-norm condition
    estimate exceeds 1e12; callers holding independent estimators should
    use :func:`optimal_weights_diagonal` instead.
    """
    if np.any(np.diag(cov.entries) <= 0.0):
        raise ValueError("covariance diagonal must be strictly positive")
    if cov.is_singular:
        raise SingularCovarianceError(
            "covariance condition estimate exceeds 1e12; "
            "fall back to diagonal fusion of the individual variances"
        )
    weights, multiplier = _solve_kkt(cov.entries)
    variance = float(weights @ cov.entries @ weights)
    return weights, multiplier, variance


def optimal_weights_diagonal(variances) -> tuple[np.ndarray, float]:
    """Inverse-variance weights for uncorrelated estimators.

    alpha_i = (1/v_i) / sum_l (1/v_l) with fused variance 1 / sum_l (1/v_l).
    """
    v = np.asarray(variances, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("variances must be a nonempty vector")
    if np.any(v <= 0.0):
        raise ValueError("variances must be strictly positive")
    inv = 1.0 / v
    total = inv.sum()
    return inv / total, float(1.0 / total)


def componentwise_weight_residual(cov: CovarianceMatrix, weights) -> float:
    """Self-check of a weight vector against the component-wise optimality
    formula.

    Each optimal weight satisfies

        alpha_i = (1/S_ii) * [ (1 + T) / sum_l (1/S_ll) - sum_{j!=i} alpha_j S_ij ]

    with T = sum_l (1/S_ll) sum_{j!=l} alpha_j S_lj, i.e. the weights are
    inversely proportional to the individual variances with corrections
    from the cross-covariances.  Returns max_i |alpha_i - rhs_i|; weights
    from :func:`optimal_weights` reproduce themselves to ~1e-10.
    """
    alpha = np.asarray(weights, dtype=float)
    m = cov.entries
    diag = np.diag(m)
    if np.any(diag <= 0.0):
        raise ValueError("covariance diagonal must be strictly positive")
    if abs(alpha.sum() - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    off = m - np.diag(diag)
    cross = off @ alpha  # sum_{j != i} alpha_j S_ij, for every i
    inv_sum = float((1.0 / diag).sum())
    t_corr = float((cross / diag).sum())
    rhs = ((1.0 + t_corr) / inv_sum - cross) / diag
    return float(np.max(np.abs(alpha - rhs)))


def dominance_criterion(variances, candidate_variance: float) -> bool:
    """True iff fusing beats a single estimator of the given variance.

    For k estimators with equal sample counts, the fused estimator at the
    same total budget has strictly smaller variance than a single-density
    estimator exactly when the candidate's (asymptotic) variance exceeds
    the harmonic mean k / sum_i (1/v_i).
    """
    v = np.asarray(variances, dtype=float)
    if np.any(v <= 0.0) or candidate_variance <= 0.0:
        raise ValueError("variances must be strictly positive")
    harmonic = v.size / float((1.0 / v).sum())
    return bool(candidate_variance > harmonic)


def fuse(
    results: list[EstimatorResult],
    assume_independent: bool = True,
    covariance: CovarianceMatrix | None = None,
) -> FusedResult:
    """Fuse unbiased estimator results into a minimum-variance estimate.

    With ``assume_independent`` the covariance is the diagonal of the
    per-estimator variances ``sample_variance_i / n_i``; otherwise a full
    :class:`CovarianceMatrix` over the inputs must be supplied.

    Degenerate-input policy: a result with zero sample variance and a zero
    estimate carries no information about the failure region and is
    excluded (its weight reported as 0); a zero sample variance with a
    positive estimate is floored at ``VARIANCE_FLOOR`` and flagged.  If
    every input is excluded the fused estimate is 0 with
    ``no_information`` set rather than an error.
    """
    if not results:
        raise ValueError("need at least one estimator result")
    k_in = len(results)
    excluded = [
        i
        for i, r in enumerate(results)
        if r.sample_variance == 0.0 and r.estimate == 0.0
    ]
    included = [i for i in range(k_in) if i not in excluded]
    if not included:
        return FusedResult(
            estimate=0.0,
            weights=np.zeros(k_in),
            multiplier=0.0,
            variance=0.0,
            covariance_used=None,
            excluded=excluded,
            no_information=True,
        )

    floored = [
        i for i in included if results[i].sample_variance == 0.0
    ]
    variances = np.array(
        [
            max(results[i].sample_variance, VARIANCE_FLOOR if i in floored else 0.0)
            / results[i].n
            for i in included
        ]
    )
    estimates = np.array([results[i].estimate for i in included])

    if assume_independent:
        if covariance is not None:
            raise ValueError(
                "covariance must not be supplied when assume_independent is set"
            )
        sub_weights, variance = optimal_weights_diagonal(variances)
        multiplier = -variance
        cov_used = CovarianceMatrix.diagonal(variances)
    else:
        if covariance is None:
            raise ValueError("correlated fusion requires an explicit covariance")
        if covariance.k != k_in:
            raise ValueError("covariance size must match the number of results")
        sub = covariance.entries[np.ix_(included, included)]
        cov_used = CovarianceMatrix(sub)
        sub_weights, multiplier, variance = optimal_weights(cov_used)

    estimate = float(sub_weights @ estimates)
    weights = np.zeros(k_in)
    weights[included] = sub_weights
    return FusedResult(
        estimate=estimate,
        weights=weights,
        multiplier=multiplier,
        variance=variance,
        covariance_used=cov_used,
        excluded=excluded,
        floored=floored,
    )
