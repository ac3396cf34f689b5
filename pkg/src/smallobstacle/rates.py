"""Log-log rate fitting shared by the convergence studies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float  # max |log residual| half-width around the fit


def fit_rate(pairs) -> RateFit:
    """Least-squares slope of log(value) against log(parameter).

    pairs: iterable of (parameter, value), all strictly positive.
    """
    pairs = [(float(a), float(b)) for a, b in pairs]
    if len(pairs) < 2:
        raise ValueError("need at least two points to fit a rate")
    x = np.log([a for a, _ in pairs])
    y = np.log([b for _, b in pairs])
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("rate fit needs strictly positive finite data")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return RateFit(slope=float(slope), intercept=float(intercept),
                   residual=float(np.max(np.abs(resid))))
