"""Post-processing: distances to attractors, rate fits, tails, relative mass."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .closed_forms import ClosedFormSolution, evaluate as cf_evaluate
from .errors import ValidationError
from .grids import Field, RadialGrid
from .records import MassLedger, RunRecord
from .specs import Family


@dataclass(frozen=True)
class RateFit:
    """Ordinary least squares fit over an explicit window."""

    slope: float
    intercept: float
    r2: float
    window: Tuple[float, float]


def _ols(x: np.ndarray, y: np.ndarray, window: Tuple[float, float],
         min_samples: int = 10) -> RateFit:
    lo, hi = window
    mask = (x >= lo) & (x <= hi)
    if mask.sum() < min_samples:
        raise ValidationError(
            f"need at least {min_samples} samples in window [{lo}, {hi}], "
            f"got {mask.sum()}")
    xs, ys = x[mask], y[mask]
    A = np.vstack([xs, np.ones(xs.size)]).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - np.mean(ys)) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return RateFit(float(coef[0]), float(coef[1]), r2, (float(lo), float(hi)))


def l1_distance(f: Field, grid: RadialGrid, ref: ClosedFormSolution,
                t: Optional[float] = None) -> float:
    """Radial L1 distance between a field and an exact solution on the ball."""
    t = f.time if t is None else t
    vals = cf_evaluate(ref, grid.centers, t)
    return float(np.sum(np.abs(f.values - vals) * grid.volumes))


def loss_rate(ledger: MassLedger, window: Tuple[float, float],
              column: str = "mass") -> RateFit:
    """Least-squares slope of a ledger mass column over the given window.

    column: "mass" for the whole-domain mass, "observed" for the mass inside
    the configured observation ball.
    """
    t = np.asarray(ledger.times)
    if column == "mass":
        y = np.asarray(ledger.masses)
    elif column == "observed":
        if not ledger.observed:
            raise ValidationError("this ledger has no observation-ball column")
        y = np.asarray(ledger.observed)
    else:
        raise ValidationError(f"unknown ledger column {column!r}")
    return _ols(t, y, window)


def tail_exponent(r: np.ndarray, u: np.ndarray,
                  fit_range: Tuple[float, float]) -> float:
    """Slope of log u against log r over the far-field fit range."""
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    lo, hi = fit_range
    mask = (r >= lo) & (r <= hi)
    if mask.sum() < 4:
        raise ValidationError(f"fit range [{lo}, {hi}] holds only {mask.sum()} samples")
    if np.any(u[mask] <= 0):
        raise ValidationError("tail fit needs positive values on the fit range")
    fit = _ols(np.log(r[mask]), np.log(u[mask]),
               (math.log(lo) - 1e-12, math.log(hi) + 1e-12), min_samples=4)
    return fit.slope


def field_tail_exponent(f: Field, grid: RadialGrid,
                        fit_range: Tuple[float, float]) -> float:
    return tail_exponent(grid.centers, f.values, fit_range)


def _check_compatible(run_a: RunRecord, run_b: RunRecord) -> None:
    if run_a.spec != run_b.spec:
        raise ValidationError("runs have different equation specs")
    if run_a.config.checkpoint_times != run_b.config.checkpoint_times:
        raise ValidationError("runs have different checkpoint schedules")
    ga, gb = run_a.grid, run_b.grid
    if getattr(ga, "N", None) != getattr(gb, "N", None) or \
            np.any(np.asarray(ga.r_faces) != np.asarray(gb.r_faces)):
        raise ValidationError("runs live on different grids")


def relative_mass_series(run_a: RunRecord, run_b: RunRecord) -> MassLedger:
    """Checkpoint series of the relative mass int(u - v) for ordered runs."""
    _check_compatible(run_a, run_b)
    vols = run_a.grid.volumes
    out = MassLedger()
    for fa, fb in zip(run_a.checkpoints, run_b.checkpoints):
        diff = fa.values - fb.values
        out.append(fa.time, float(np.sum(diff * vols)), 0.0,
                   float(np.max(diff, initial=0.0)), 0.0)
    return out


def mass_series(run: RunRecord) -> np.ndarray:
    """Checkpoint masses of a run (same sampling as relative_mass_series)."""
    vols = run.grid.volumes
    return np.array([float(np.sum(f.values * vols)) for f in run.checkpoints])


def cutoff_mass_quotient(run_a: RunRecord, run_b: RunRecord, r_inner: float):
    """Localized relative-mass quotient |Y(t)^{1-m} - Y(s)^{1-m}| / |t-s|.

    Y(t) is the relative mass weighted by a smooth radial cutoff (1 inside
    r_inner, cosine taper to 0 at 2*r_inner).  For fast diffusion the
    quotient is bounded by a constant depending only on the cutoff, and
    scaling the cutoff outward by n shrinks the constant like n^{-(N(m-1)+2)}.
    Returns (times, Y, max_quotient).
    """
    _check_compatible(run_a, run_b)
    spec = run_a.spec
    if spec.family is not Family.PME_FDE or not spec.m < 1:
        raise ValidationError("the localized quotient targets fast diffusion runs")
    m = spec.m
    rc = run_a.grid.centers
    vols = run_a.grid.volumes
    phi = np.ones_like(rc)
    taper = (rc > r_inner) & (rc < 2 * r_inner)
    phi[taper] = np.cos(0.5 * math.pi * (rc[taper] - r_inner) / r_inner) ** 2
    phi[rc >= 2 * r_inner] = 0.0

    times, Y = [], []
    for fa, fb in zip(run_a.checkpoints, run_b.checkpoints):
        times.append(fa.time)
        Y.append(float(np.sum((fa.values - fb.values) * phi * vols)))
    times = np.asarray(times)
    Y = np.asarray(Y)
    if np.any(Y < 0):
        raise ValidationError("localized relative mass went negative; runs not ordered")
    q = np.abs(np.diff(Y ** (1 - m))) / np.diff(times)
    return times, Y, float(np.max(q, initial=0.0))


def sup_decay_check(record: RunRecord, window: Tuple[float, float]) -> RateFit:
    """Fit of log(1/sup u) against t^{N/(N-2)} over the window.

    The whole-space decay law at the critical exponent predicts a straight
    line in this abscissa; on truncated domains this is a goodness-of-fit
    trend test only (the sharp constant is not reachable at desk scale), so
    callers should judge r2, not the slope value.
    """
    N = record.spec.N
    if N <= 2:
        raise ValidationError("the decay abscissa t^{N/(N-2)} needs N >= 3")
    t = np.asarray(record.ledger.times)
    sup = np.asarray(record.ledger.sup_vals)
    lo, hi = window
    mask = (t >= lo) & (t <= hi)
    if np.any(sup[mask] <= 0):
        raise ValidationError("solution extinct inside the fit window")
    x = t[mask] ** (N / (N - 2))
    y = np.log(1.0 / sup[mask])
    return _ols(x, y, (float(np.min(x)), float(np.max(x))))
