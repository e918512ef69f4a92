"""Scaling-exponent estimation shared by the growth and volume modules.

The quantity of interest is the polynomial degree of a positive series,
defined asymptotically as limsup log y / log x.  Only finitely many samples
are computable, so the limsup is replaced by a least-squares slope over a
trailing window; this is an estimator of the limit, not the limit itself.
The estimator also has to recognize when the series is not polynomial at
all: a growth rate like 3^m must be reported as exponential, never as a
large finite degree.

Classification rule
-------------------
Two regressions are run on the trailing window: log y against log x
(polynomial hypothesis) and log y against x (exponential hypothesis).  The
series is classified exponential when the linear-abscissa fit has strictly
smaller RMS residual and its slope exceeds ``exp_slope_threshold``; the
slope guard keeps flat series (residual 0 under both fits) polynomial.
When the winning fit still has residual above ``residual_cap`` the result
is inconclusive.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import SeriesTooShort

#: Slope of log y against x above which the exponential alternative wins
#: (when its residual is also smaller).  Separates 3^m from m^4 at m <= 30.
EXP_SLOPE_THRESHOLD = 0.05

#: RMS log-residual above which neither hypothesis is trusted.
RESIDUAL_CAP = 0.25

#: Sentinel exponent reported for exponential series.
EXPONENT_INFINITY = math.inf


@dataclass(frozen=True)
class ScalingFit:
    """Result of a trailing-window scaling fit.

    Attributes
    ----------
    exponent : float
        Fitted degree; ``inf`` when classification is ``"exponential"``.
    window : tuple of float
        (x_lo, x_hi) actually used for the regression.
    residual : float
        RMS residual of the winning fit in log-ordinate space.
    classification : str
        One of ``"polynomial"``, ``"exponential"``, ``"inconclusive"``.
    """

    exponent: float
    window: tuple
    residual: float
    classification: str


def _least_squares_slope(abscissa, ordinate):
    a = np.asarray(abscissa, dtype=float)
    b = np.asarray(ordinate, dtype=float)
    design = np.column_stack([a, np.ones_like(a)])
    coef, *_ = np.linalg.lstsq(design, b, rcond=None)
    resid = b - design @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return float(coef[0]), rms


def trailing_window(length, window_fraction):
    """Number of trailing samples selected by ``window_fraction``.

    At least two points are always used, the whole series at fraction 1.
    """
    if not 0.0 < window_fraction <= 1.0:
        raise ValueError("window_fraction must lie in (0, 1]")
    return max(2, int(math.ceil(window_fraction * length)))


def fit_scaling(
    xs,
    ys,
    window_fraction=0.5,
    exp_slope_threshold=EXP_SLOPE_THRESHOLD,
    residual_cap=RESIDUAL_CAP,
    min_samples=8,
):
    """Fit the scaling degree of a positive series over its trailing window.

    Parameters
    ----------
    xs, ys : array_like
        Positive abscissa (strictly increasing) and positive ordinate.
    window_fraction : float
        Trailing fraction of samples used for the regression.
    min_samples : int
        Minimum series length; shorter input raises :class:`SeriesTooShort`.

    Returns
    -------
    ScalingFit
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise ValueError("xs and ys must be 1-d arrays of equal length")
    if len(xs) < min_samples:
        raise SeriesTooShort(
            f"need at least {min_samples} samples, got {len(xs)}"
        )
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("fit_scaling requires strictly positive samples")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("abscissa must be strictly increasing")

    k = trailing_window(len(xs), window_fraction)
    xw = xs[-k:]
    yw = np.log(ys[-k:])
    window = (float(xw[0]), float(xw[-1]))

    slope_poly, resid_poly = _least_squares_slope(np.log(xw), yw)
    slope_exp, resid_exp = _least_squares_slope(xw, yw)

    if resid_exp < resid_poly and slope_exp > exp_slope_threshold:
        classification = "exponential"
        exponent = EXPONENT_INFINITY
        residual = resid_exp
    else:
        classification = "polynomial"
        # growth degrees are nonnegative; a negative least-squares slope
        # means a bounded series measured with noise, so report degree 0
        exponent = max(slope_poly, 0.0)
        residual = resid_poly
    if residual > residual_cap:
        classification = "inconclusive"
    return ScalingFit(exponent=exponent, window=window,
                      residual=residual, classification=classification)


def cumulative_trapezoid(xs, ys):
    """Cumulative trapezoid integral of samples, starting at 0 at xs[0]."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    out = np.zeros_like(xs)
    np.cumsum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs), out=out[1:])
    return out
