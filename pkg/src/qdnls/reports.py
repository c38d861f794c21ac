"""Report records and fitting helpers shared by the empirical sweeps.

Every sweep produces :class:`EstimateReport` rows carrying the parameter
point, the best measured left/right ratio, and (for >= 4 points) a log-log
slope fit with its standard error.  Reports embed seed, grid data, and the
coefficient regime so any run is reproducible from its own record.  Measured
constants come from sampled data, so they are lower bounds on the true best
constants; that caveat is part of every report.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np


def loglog_fit(xs, ys):
    """Least-squares slope of log y against log x with its standard error.

    Returns (slope, stderr, intercept).  Requires >= 4 points and positive
    data; stderr is from the fit covariance (zero for a 2-point-exact fit
    degenerate case is avoided by the length check).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 4:
        raise ValueError("log-log fit requires at least 4 parameter points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit requires positive data")
    lx, ly = np.log(xs), np.log(ys)
    coeffs, cov = np.polyfit(lx, ly, 1, cov=True)
    return float(coeffs[0]), float(np.sqrt(max(cov[0, 0], 0.0))), float(coeffs[1])


def slope_within(slope, stderr, target, tol):
    """Acceptance rule: the slope +- stderr window must meet target +- tol."""
    return (slope - stderr) <= (target + tol) and (slope + stderr) >= (target - tol)


@dataclass
class ExponentFit:
    exponent: float
    stderr: float
    intercept: float = 0.0

    def to_dict(self):
        return asdict(self)


@dataclass
class EstimateReport:
    """Outcome of one empirical-constant sweep at one parameter point."""

    estimate_id: str
    parameter_point: dict
    best_ratio: float
    trials: int
    fit: ExponentFit | None = None
    seed: int | None = None
    regime: str | None = None
    notes: str = "sampled ratios are lower bounds on the true best constants"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.best_ratio < 0:
            raise ValueError("best_ratio must be nonnegative")

    def to_dict(self):
        d = {
            "estimate_id": self.estimate_id,
            "parameter_point": self.parameter_point,
            "best_ratio": self.best_ratio,
            "trials": self.trials,
            "fit": self.fit.to_dict() if self.fit is not None else None,
            "seed": self.seed,
            "regime": self.regime,
            "notes": self.notes,
        }
        if self.extra:
            d["extra"] = self.extra
        return d


def fit_from_points(xs, ys) -> ExponentFit | None:
    """Fit helper honoring the >= 4 points rule; None when under-determined."""
    if len(xs) < 4:
        return None
    slope, stderr, intercept = loglog_fit(xs, ys)
    return ExponentFit(slope, stderr, intercept)


def canonical_json(payload) -> str:
    """Deterministic JSON: sorted keys, fixed separators, repr floats."""

    def default(obj):
        if isinstance(obj, (np.floating,)):
            return float(obj)
        if isinstance(obj, (np.integer,)):
            return int(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, complex):
            return {"re": obj.real, "im": obj.imag}
        if hasattr(obj, "to_dict"):
            return obj.to_dict()
        raise TypeError(f"not JSON-serializable: {type(obj)}")

    return json.dumps(payload, sort_keys=True, indent=2, default=default)


def write_csv(path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(x) if isinstance(x, float) else str(x) for x in row) + "\n")
