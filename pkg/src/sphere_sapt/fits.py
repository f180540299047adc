"""Least-squares slope fitting for log-log convergence data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SlopeFit", "loglog_slope"]

# two-sided 97.5% Student-t quantiles by degrees of freedom
_T975 = {1: 12.706, 2: 4.303, 3: 3.182, 4: 2.776, 5: 2.571, 6: 2.447, 7: 2.365, 8: 2.306}


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    ci95: float  # half-width of the 95% confidence interval on the slope
    n_points: int
    residual: float  # rms residual in log space

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "ci95": self.ci95,
            "n_points": self.n_points,
            "residual": self.residual,
        }


def loglog_slope(x, y) -> SlopeFit:
    """Fit log y = slope log x + intercept with a slope confidence interval."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    n = len(lx)
    if n < 2:
        raise ValueError("need at least two points for a slope")
    A = np.stack([lx, np.ones(n)], axis=1)
    coef, _, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    if n == 2:
        return SlopeFit(float(coef[0]), float(coef[1]), float("inf"), n, 0.0)
    dof = n - 2
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    tq = _T975.get(dof, 1.96)
    return SlopeFit(
        float(coef[0]),
        float(coef[1]),
        float(tq * np.sqrt(cov[0, 0])),
        n,
        float(np.sqrt(np.mean(resid**2))),
    )
