"""Correlation of collective similarity with distance, and the decay fit.

With only a handful of region pairs the default p-value comes from a
seeded permutation test; a Student-t approximation is available for
comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import t as student_t

from .geo import DistanceMatrix
from .linfit import line_fit
from .regionvec import SimilarityMatrix

DEFAULT_PERMUTATIONS = 100_000


@dataclass(frozen=True)
class PairObservation:
    """Collective similarity and geodesic distance for one region pair."""

    region_a: str
    region_b: str
    similarity: float
    distance_m: float

    def __post_init__(self) -> None:
        if self.distance_m <= 0.0:
            raise ValueError(
                f"pair ({self.region_a}, {self.region_b}) has non-positive "
                f"distance {self.distance_m}"
            )


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    p_value: float
    method: str
    p_method: str
    n: int
    seed: int | None = None
    permutations: int | None = None


@dataclass(frozen=True)
class DecayFit:
    """ln(similarity) = intercept + slope * ln(distance)."""

    intercept: float
    slope: float
    r_squared: float


def pair_observations(
    sim: SimilarityMatrix, dist: DistanceMatrix
) -> list[PairObservation]:
    """One observation per unordered region pair, lexicographic order."""
    if set(sim.regions) != set(dist.regions):
        raise ValueError(
            f"mismatched region sets: {sorted(sim.regions)} vs {sorted(dist.regions)}"
        )
    sim_idx = {r: i for i, r in enumerate(sim.regions)}
    dist_idx = {r: i for i, r in enumerate(dist.regions)}
    regions = sorted(sim.regions)
    out = []
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            a, b = regions[i], regions[j]
            out.append(
                PairObservation(
                    region_a=a,
                    region_b=b,
                    similarity=float(sim.values[sim_idx[a], sim_idx[b]]),
                    distance_m=float(dist.values[dist_idx[a], dist_idx[b]]),
                )
            )
    return out


def _pearson_r(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(np.sum(xc * xc))
    syy = float(np.sum(yc * yc))
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("degenerate correlation: zero variance")
    r = float(np.sum(xc * yc)) / math.sqrt(sxx * syy)
    return min(max(r, -1.0), 1.0)


def _permutation_p(
    x: np.ndarray, y: np.ndarray, r_obs: float, permutations: int, seed: int
) -> float:
    """Two-sided permutation p-value for the correlation coefficient.

    Permutes y; p = (1 + #{|r_perm| >= |r_obs|}) / (1 + permutations), so
    the result is always in (0, 1].
    """
    rng = np.random.default_rng(seed)
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(np.sum(xc * xc)) * float(np.sum(yc * yc)))
    perms = rng.permuted(np.tile(yc, (permutations, 1)), axis=1)
    r_perm = (perms @ xc) / denom
    # tiny slack so the identity permutation is never lost to rounding
    hits = int(np.count_nonzero(np.abs(r_perm) >= abs(r_obs) - 1e-12))
    return (1 + hits) / (1 + permutations)


def _t_approx_p(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return float(np.finfo(float).tiny)
    t_stat = abs(r) * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(student_t.sf(t_stat, n - 2))
    return max(min(p, 1.0), float(np.finfo(float).tiny))


def _correlate(
    x: Sequence[float],
    y: Sequence[float],
    method: str,
    p_method: str,
    permutations: int,
    seed: int,
) -> CorrelationResult:
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape:
        raise ValueError("x and y must have equal length")
    n = xa.size
    if n < 3:
        raise ValueError(f"need at least 3 observations, got {n}")
    if method == "spearman":
        xa = _average_ranks(xa)
        ya = _average_ranks(ya)
    r = _pearson_r(xa, ya)
    if p_method == "permutation":
        p = _permutation_p(xa, ya, r, permutations, seed)
        return CorrelationResult(
            coefficient=r, p_value=p, method=method, p_method=p_method,
            n=n, seed=seed, permutations=permutations,
        )
    if p_method == "t_approx":
        return CorrelationResult(
            coefficient=r, p_value=_t_approx_p(r, n), method=method,
            p_method=p_method, n=n,
        )
    raise ValueError(f"unknown p_method {p_method!r}")


def pearson(
    x: Sequence[float],
    y: Sequence[float],
    p_method: str = "permutation",
    permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
) -> CorrelationResult:
    """Sample Pearson correlation with a two-sided p-value."""
    return _correlate(x, y, "pearson", p_method, permutations, seed)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n; tied values share the mean of their rank positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2.0 + 1.0
        ranks[order[i : j + 1]] = mean_rank
        i = j + 1
    return ranks


def spearman(
    x: Sequence[float],
    y: Sequence[float],
    p_method: str = "permutation",
    permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
) -> CorrelationResult:
    """Spearman rank correlation (average ranks for ties)."""
    return _correlate(x, y, "spearman", p_method, permutations, seed)


def fit_distance_decay(observations: Sequence[PairObservation]) -> DecayFit:
    """OLS of ln(similarity) on ln(distance) over the region pairs."""
    offenders = [
        (o.region_a, o.region_b)
        for o in observations
        if o.similarity <= 0.0 or o.distance_m <= 0.0
    ]
    if offenders:
        raise ValueError(
            f"cannot take logs: non-positive similarity or distance for pairs {offenders}"
        )
    if len(observations) < 3:
        raise ValueError(f"need at least 3 observations, got {len(observations)}")
    ln_d = [math.log(o.distance_m) for o in observations]
    ln_s = [math.log(o.similarity) for o in observations]
    intercept, slope, r_squared = line_fit(ln_d, ln_s)
    return DecayFit(intercept=intercept, slope=slope, r_squared=r_squared)
