"""Run configuration and bookkeeping records shared by the PDE solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import ValidationError
from .grids import Field
from .specs import EquationSpec


@dataclass
class SolverConfig:
    """Time-stepping controls.

    dt is the initial step; it adapts between dt_min and dt_max (halving on
    rejected steps, slow regrowth after accepted ones).  reg_eps regularizes
    the degenerate diffusivities (u=0 for slow PME, grad u = 0 for the PLE,
    the p=1 flux); checkpoint_times are hit exactly.

    outer_bc: "dirichlet0" absorbs mass at r=R (the whole-space proxy),
    "zeroflux" walls the domain, "reference" pins the wall value to a known
    exact solution, which selects that solution's far-field tail class
    (needed where the mass-loss rate is a property of the tail class, as in
    planar logarithmic diffusion).
    """

    dt: float = 1e-3
    outer_bc: str = "dirichlet0"  # or "zeroflux"
    reg_eps: float = 1e-8
    newton_tol: float = 1e-11
    newton_max_iter: int = 30
    checkpoint_times: Tuple[float, ...] = ()
    dt_min: float = 1e-12
    dt_max: Optional[float] = None
    dt_growth: float = 1.26
    cfl: float = 0.5  # explicit fractional stepping only
    observe_radius: Optional[float] = None  # also ledger the mass inside this ball

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if self.outer_bc not in ("dirichlet0", "zeroflux", "reference"):
            raise ValidationError(
                f"outer_bc must be dirichlet0|zeroflux|reference, got {self.outer_bc!r}")
        if self.reg_eps < 0:
            raise ValidationError("reg_eps must be >= 0")
        if self.newton_tol <= 0:
            raise ValidationError("newton_tol must be positive")
        if self.newton_max_iter < 1:
            raise ValidationError("newton_max_iter must be >= 1")
        if self.dt_max is None:
            self.dt_max = 64 * self.dt
        self.checkpoint_times = tuple(float(t) for t in self.checkpoint_times)
        if any(b <= a for a, b in zip(self.checkpoint_times, self.checkpoint_times[1:])):
            raise ValidationError("checkpoint_times must be strictly increasing")


@dataclass
class MassLedger:
    """Per-step audit trail: domain mass, cumulative boundary outflux, sup norm.

    For zero-flux runs the masses must stay constant to solver tolerance;
    for absorbing (dirichlet0) runs masses + boundary_outflux is the
    conserved quantity.  `clipped` tracks the cumulative mass touched by the
    nonnegativity clip, which must stay at roundoff level.
    """

    times: List[float] = field(default_factory=list)
    masses: List[float] = field(default_factory=list)
    boundary_outflux: List[float] = field(default_factory=list)
    sup_vals: List[float] = field(default_factory=list)
    clipped: List[float] = field(default_factory=list)
    observed: List[float] = field(default_factory=list)  # mass inside the observation ball

    def append(self, t, mass, outflux, sup, clipped, observed=None):
        self.times.append(float(t))
        self.masses.append(float(mass))
        self.boundary_outflux.append(float(outflux))
        self.sup_vals.append(float(sup))
        self.clipped.append(float(clipped))
        if observed is not None:
            self.observed.append(float(observed))

    def arrays(self):
        return (np.asarray(self.times), np.asarray(self.masses),
                np.asarray(self.boundary_outflux), np.asarray(self.sup_vals))

    def balance_drift(self) -> float:
        """Max |mass + outflux - initial mass| over the run."""
        t, m, o, _ = self.arrays()
        if m.size == 0:
            return 0.0
        return float(np.max(np.abs(m + o - m[0])))


@dataclass
class RunRecord:
    """Full simulation trace: checkpoint states plus the mass ledger."""

    spec: EquationSpec
    config: SolverConfig
    grid: object
    checkpoints: List[Field]
    ledger: MassLedger

    @property
    def final(self) -> Field:
        return self.checkpoints[-1]

    def checkpoint_at(self, t: float) -> Field:
        for f in self.checkpoints:
            if abs(f.time - t) <= 1e-12 * max(1.0, abs(t)):
                return f
        raise ValidationError(f"no checkpoint at t={t}")
