"""Normalized least-squares geometry and the residual test statistic.

Measurements are normalized by the clock-drift std so the noise
covariance becomes the identity; the geometry then yields the LS
estimator, the coordinate extraction vectors s_x / s_y, the residual
projector, and the squared-residual-norm test statistic.

The detection chain books ``dof = A - DOF_OFFSET`` degrees of freedom
for the test statistic.  DOF_OFFSET defaults to 3, the convention
carried over from GNSS-style residual tests that estimate a clock state
alongside the position; the residual projector of this 2-unknown model
itself has rank A - 2 (trace(P_r) = A - 2).  The offset is kept as one
constant, overridable per call, so the convention is auditable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DOF_OFFSET = 3

# Convergence / divergence controls for the iterated solver.
_STEP_TOL = 1e-6
_MAX_ITER = 50
_DIVERGE_STREAK = 5


class SingularGeometryError(ValueError):
    """SP constellation does not determine both horizontal coordinates."""


class DivergenceError(RuntimeError):
    """Iterated least squares failed to converge."""


@dataclass(frozen=True)
class NormalizedGeometry:
    """Normalized measurement geometry for one subset of SPs."""

    available: tuple[int, ...]
    H: np.ndarray          # (A, 2) normalized Jacobian
    G: np.ndarray          # (2, A) pseudo-inverse
    s_x: np.ndarray        # (A,) x-coordinate extraction vector
    s_y: np.ndarray        # (A,)
    P_r: np.ndarray        # (A, A) residual projector I - HG
    dof: int
    sigma_c: float

    @property
    def A(self) -> int:
        return len(self.available)


@dataclass(frozen=True)
class LsSolution:
    estimate: np.ndarray   # (2,) horizontal coordinate, meters
    iterations: int
    residuals: np.ndarray  # (A,) normalized residuals at the solution
    t_ls: float


def _jacobian_rows(sps: np.ndarray, point_xy: np.ndarray, dz: np.ndarray):
    dx = point_xy[0] - sps[:, 0]
    dy = point_xy[1] - sps[:, 1]
    horiz = np.hypot(dx, dy)
    if np.any(horiz == 0.0):
        raise SingularGeometryError("an SP coincides horizontally with the evaluation point")
    dist = np.sqrt(horiz**2 + dz**2)
    return np.column_stack([dx / dist, dy / dist]), dist


def build_geometry(
    sps,
    linearization_point,
    sigma_c: float,
    dof_offset: int = DOF_OFFSET,
    available=None,
) -> NormalizedGeometry:
    """Build the normalized geometry for SPs around a known point.

    ``sps`` is (A, 3); ``linearization_point`` the 3-D user location the
    ranging equations are linearized at.  Requires A >= 3 and a
    constellation of horizontal rank 2.
    """
    sps = np.asarray(sps, dtype=float)
    lp = np.asarray(linearization_point, dtype=float)
    if sps.ndim != 2 or sps.shape[1] != 3:
        raise ValueError("sps must be (A, 3)")
    A = sps.shape[0]
    if A < 3:
        raise SingularGeometryError(f"need at least 3 SPs, got {A}")
    if sigma_c <= 0:
        raise ValueError(f"sigma_c must be > 0, got {sigma_c}")

    rows, _ = _jacobian_rows(sps, lp[:2], sps[:, 2] - lp[2])
    H = rows / sigma_c
    svals = np.linalg.svd(H, compute_uv=False)
    if svals[-1] <= 1e-10 * svals[0]:
        raise SingularGeometryError("collinear SP geometry: rank(H) < 2")
    G = np.linalg.solve(H.T @ H, H.T)
    P_r = np.eye(A) - H @ G
    P_r = 0.5 * (P_r + P_r.T)
    avail = tuple(range(A)) if available is None else tuple(available)
    return NormalizedGeometry(
        available=avail,
        H=H,
        G=G,
        s_x=G[0].copy(),
        s_y=G[1].copy(),
        P_r=P_r,
        dof=A - dof_offset,
        sigma_c=sigma_c,
    )


def ls_solve(
    measurements,
    sps,
    user_altitude: float,
    sigma_c: float,
    initial_guess,
    max_iter: int = _MAX_ITER,
) -> LsSolution:
    """Iterated (Gauss-Newton) LS solve of the ranging equations.

    Converges when the step norm drops below 1e-6 m; raises
    DivergenceError after five consecutive growing steps.  Residuals and
    the test statistic are evaluated at the converged point.
    """
    meas = np.asarray(measurements, dtype=float)
    sps = np.asarray(sps, dtype=float)
    if sps.shape[0] != meas.shape[0]:
        raise ValueError("measurement count does not match SP count")
    if sps.shape[0] < 3:
        raise SingularGeometryError(f"need at least 3 SPs, got {sps.shape[0]}")
    u = np.asarray(initial_guess, dtype=float).copy()
    dz = sps[:, 2] - user_altitude

    prev_step = np.inf
    growing = 0
    iterations = 0
    for iterations in range(1, max_iter + 1):
        rows, dist = _jacobian_rows(sps, u, dz)
        try:
            step = np.linalg.solve(rows.T @ rows, rows.T @ (meas - dist))
        except np.linalg.LinAlgError as exc:
            raise SingularGeometryError("collinear SP geometry during solve") from exc
        u += step
        norm = float(np.linalg.norm(step))
        if norm < _STEP_TOL:
            break
        if norm > prev_step:
            growing += 1
            if growing >= _DIVERGE_STREAK:
                raise DivergenceError(f"step norm grew {growing} consecutive iterations")
        else:
            growing = 0
        prev_step = norm

    _, dist = _jacobian_rows(sps, u, dz)
    residuals = (meas - dist) / sigma_c
    return LsSolution(
        estimate=u,
        iterations=iterations,
        residuals=residuals,
        t_ls=float(residuals @ residuals),
    )


def error_stats(geom: NormalizedGeometry) -> tuple[float, float]:
    """Estimate-error variances (var_x, var_y) in meters^2."""
    return float(geom.s_x @ geom.s_x), float(geom.s_y @ geom.s_y)
