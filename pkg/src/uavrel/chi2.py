"""Chi-square machinery for residual-based failure detection.

Four functions are exposed: the central survival function, its inverse
(detection threshold), the noncentral CDF, and the inversion of the
noncentral CDF for the noncentrality parameter.  The noncentral CDF is
computed as a Poisson mixture of central CDFs, truncated once the
accumulated Poisson weight exceeds 1 - 1e-14 so the truncation error is
far below the documented 1e-12 accuracy.  Both inversions use bracketed
bisection; no closed-form quantile approximations are relied on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

# Poisson mass allowed to fall outside the mixture summation window.
_WEIGHT_TAIL = 1e-15


def chi2_sf(x, dof):
    """Upper-tail probability of the central chi-square distribution.

    Accepts scalars or arrays for ``x``; ``dof`` must be a positive integer.
    """
    if dof < 1:
        raise ValueError(f"dof must be a positive integer, got {dof}")
    return special.chdtrc(dof, x)


def chi2_cdf(x, dof):
    """Lower-tail probability of the central chi-square distribution."""
    if dof < 1:
        raise ValueError(f"dof must be a positive integer, got {dof}")
    return special.chdtr(dof, x)


def chi2_isf(alpha: float, dof: int) -> float:
    """Threshold T such that chi2_sf(T, dof) == alpha.

    Bracketed bisection on the survival function, run until the bracket
    collapses to machine resolution (probability agreement is then far
    tighter than the 1e-10 contract).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if dof < 1:
        raise ValueError(f"dof must be a positive integer, got {dof}")
    lo = 0.0
    hi = float(dof) + 10.0
    for _ in range(2000):
        if chi2_sf(hi, dof) <= alpha:
            break
        hi *= 2.0
    else:
        raise RuntimeError("failed to bracket chi-square quantile")
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if chi2_sf(mid, dof) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _poisson_window(h: float) -> tuple[int, int]:
    # j-range carrying all but ~_WEIGHT_TAIL of Poisson(h) mass.
    if h <= 0.0:
        return 0, 0
    half = 10.0 * np.sqrt(h) + 25.0
    lo = max(0, int(np.floor(h - half)))
    hi = int(np.ceil(h + half))
    return lo, hi


def nc_chi2_cdf(x, dof: int, lam: float):
    """CDF of the noncentral chi-square distribution chi2(dof, lam).

    Poisson-mixture series: sum_j pmf(j; lam/2) * chi2_cdf(x, dof + 2j).
    """
    if dof < 1:
        raise ValueError(f"dof must be a positive integer, got {dof}")
    if lam < 0.0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if lam == 0.0:
        return chi2_cdf(x, dof)
    h = 0.5 * lam
    j_lo, j_hi = _poisson_window(h)
    js = np.arange(j_lo, j_hi + 1)
    log_w = js * np.log(h) - h - special.gammaln(js + 1.0)
    weights = np.exp(log_w)
    x_arr = np.asarray(x, dtype=float)
    terms = special.chdtr(dof + 2.0 * js, x_arr[..., None])
    out = np.sum(weights * terms, axis=-1)
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


class _MixtureTable:
    """Reusable central-CDF terms for a fixed (x, dof) mixture point.

    The chi2_cdf(x, dof + 2j) factors do not depend on the noncentrality,
    so an inversion can precompute them once and re-evaluate the mixture
    for many lambda values with cheap Poisson-weight updates.
    """

    def __init__(self, x: float, dof: int):
        self.x = float(x)
        self.dof = int(dof)
        self._grow(64)

    def _grow(self, j_max: int):
        self.j_max = j_max
        self.js = np.arange(0, j_max + 1, dtype=float)
        self.terms = special.chdtr(self.dof + 2.0 * self.js, self.x)
        self.lgam = special.gammaln(self.js + 1.0)

    def ensure(self, h_max: float):
        _, hi = _poisson_window(h_max)
        if hi > self.j_max:
            self._grow(int(hi * 1.5) + 8)

    def cdf(self, lam):
        """Mixture CDF at this table's (x, dof) for lam scalar or array."""
        lam = np.asarray(lam, dtype=float)
        h = 0.5 * lam[..., None]
        with np.errstate(divide="ignore", invalid="ignore"):
            log_w = self.js * np.log(h) - h - self.lgam
        weights = np.where(h > 0.0, np.exp(log_w), np.where(self.js == 0.0, 1.0, 0.0))
        return np.sum(weights * self.terms, axis=-1)


def solve_noncentrality(T: float, dof: int, p_md: float) -> float:
    """Noncentrality lam with nc_chi2_cdf(T, dof, lam) == p_md.

    The CDF is strictly decreasing in lam, so a geometric bracket growth
    followed by bisection always converges.  If p_md is already at or
    above the central CDF at T, the boundary lam = 0 is returned.
    """
    if T <= 0.0:
        raise ValueError(f"T must be > 0, got {T}")
    if not 0.0 < p_md < 1.0:
        raise ValueError(f"p_md must be in (0, 1), got {p_md}")
    return float(solve_noncentrality_many(T, dof, np.array([p_md]))[0])


def solve_noncentrality_many(T: float, dof: int, p_md: np.ndarray) -> np.ndarray:
    """Vectorized solve_noncentrality for many targets at one (T, dof)."""
    p = np.asarray(p_md, dtype=float)
    table = _MixtureTable(T, dof)
    out = np.zeros(p.shape, dtype=float)
    central = chi2_cdf(T, dof)
    active = p < central
    if not np.any(active):
        return out
    pa = p[active]
    hi = np.ones(pa.shape)
    table.ensure(0.5 * hi.max())
    for _ in range(200):
        unresolved = table.cdf(hi) > pa
        if not np.any(unresolved):
            break
        hi = np.where(unresolved, hi * 2.0, hi)
        table.ensure(0.5 * hi.max())
    else:
        raise RuntimeError("failed to bracket noncentrality parameter")
    lo = np.zeros(pa.shape)
    for _ in range(110):
        mid = 0.5 * (lo + hi)
        too_high = table.cdf(mid) > pa
        lo = np.where(too_high, mid, lo)
        hi = np.where(too_high, hi, mid)
    out[active] = 0.5 * (lo + hi)
    return out


@dataclass(frozen=True)
class DetectionThreshold:
    """Decision threshold for the residual test at one observation event."""

    dof: int
    alpha: float
    T: float

    @classmethod
    def for_alpha(cls, alpha: float, dof: int) -> "DetectionThreshold":
        return cls(dof=dof, alpha=alpha, T=chi2_isf(alpha, dof))
