"""Radially symmetric finite-volume solver for the local families.

The whole-space Cauchy problem is emulated on a truncated ball of radius R:
backward-Euler steps of the conservative radial form

    u_t = r^{1-N} (r^{N-1} Phi)_r

with family-specific face flux Phi, Newton iteration on each step, and a
mass ledger that certifies discrete conservation (zero-flux walls) or
closes the balance against the cumulative boundary outflux (absorbing
boundary, the numerical proxy for mass escaping to infinity).

Flux forms: heat Phi = u_r; porous-medium/fast-diffusion Phi = (u^m)_r with
the degeneracy regularized through (u+eps)^m; p-Laplacian
Phi = (u_r^2 + eps^2)^{(p-2)/2} u_r; logarithmic diffusion Phi = (log(u+eps))_r;
total variation flow (p=1 limit) Phi = u_r / sqrt(u_r^2 + eps^2).
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.linalg import solve_banded

from .closed_forms import ClosedFormSolution, evaluate as cf_evaluate
from .errors import NumericalError, StepRejected, ValidationError
from .grids import Field, RadialGrid
from .records import MassLedger, RunRecord, SolverConfig
from .specs import EquationSpec, Family


_FILTRATION = {Family.HE, Family.PME_FDE, Family.LOGDIFF}
_GRADIENT = {Family.PLE, Family.TVF}
SUPPORTED = _FILTRATION | _GRADIENT


def _phi_pair(spec: EquationSpec, eps: float):
    """(phi, phi') for filtration families, applied to cell values.

    Below u=0 (transient Newton iterates only) the nonlinearity continues
    linearly with slope phi'(0), keeping the iteration well defined.
    """
    fam = spec.family
    if fam is Family.HE:
        return (lambda u: u), (lambda u: np.ones_like(u))
    if fam is Family.PME_FDE:
        m = spec.m

        def phi(u):
            up = np.maximum(u, 0.0)
            return np.where(u >= 0, (up + eps) ** m - eps ** m,
                            m * eps ** (m - 1) * u)

        def dphi(u):
            up = np.maximum(u, 0.0)
            return np.where(u >= 0, m * (up + eps) ** (m - 1), m * eps ** (m - 1))

        return phi, dphi
    if fam is Family.LOGDIFF:

        def phi(u):
            up = np.maximum(u, 0.0)
            return np.where(u >= 0, np.log(up + eps), u / eps + math.log(eps))

        def dphi(u):
            up = np.maximum(u, 0.0)
            return np.where(u >= 0, 1.0 / (up + eps), 1.0 / eps)

        return phi, dphi
    raise ValidationError(f"not a filtration family: {fam}")


def _grad_flux_pair(spec: EquationSpec, eps: float):
    """(Phi, Phi') for gradient-flux families, applied to face gradients."""
    fam = spec.family
    if fam is Family.PLE:
        p = spec.p
        def flux(g):
            return (g * g + eps * eps) ** ((p - 2) / 2) * g
        def dflux(g):
            return (g * g + eps * eps) ** ((p - 4) / 2) * (eps * eps + (p - 1) * g * g)
        return flux, dflux
    if fam is Family.TVF:
        def flux(g):
            return g / np.sqrt(g * g + eps * eps)
        def dflux(g):
            return eps * eps / (g * g + eps * eps) ** 1.5
        return flux, dflux
    raise ValidationError(f"not a gradient-flux family: {fam}")


def init_state(grid: RadialGrid, data: Union[Callable, ClosedFormSolution],
               t0: float = 0.0, breaks: Sequence[float] = ()) -> Field:
    """Cell averages of the initial data by per-cell Gauss quadrature.

    `data` is either a callable r -> u0(r) >= 0 or a ClosedFormSolution
    sampled at time t0.  Known kinks/support edges can be passed in
    `breaks` so that straddling cells are split exactly.
    """
    if isinstance(data, ClosedFormSolution):
        sol = data
        f = lambda r: cf_evaluate(sol, r, t0)
        breaks = list(breaks)
        from .closed_forms import SolutionKind
        if sol.kind is SolutionKind.BARENBLATT_PME:
            breaks.append(math.sqrt(sol.C / sol.k) * t0 ** sol.beta)
        elif sol.kind is SolutionKind.BARENBLATT_PLE and sol.spec.p > 2:
            p = sol.spec.p
            breaks.append((sol.C / sol.k) ** ((p - 1) / p) * t0 ** sol.beta)
    else:
        f = data

    nodes, weights = np.polynomial.legendre.leggauss(12)
    N = grid.N
    rf = grid.r_faces
    vols = grid.volumes
    from .grids import sphere_area
    w_n = sphere_area(N)
    avgs = np.empty(grid.cells)
    breaks = sorted(b for b in breaks if np.isfinite(b))
    for j in range(grid.cells):
        a, b = rf[j], rf[j + 1]
        pieces = [a] + [br for br in breaks if a < br < b] + [b]
        total = 0.0
        for lo, hi in zip(pieces[:-1], pieces[1:]):
            r = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
            vals = np.asarray(f(r), dtype=float)
            total += 0.5 * (hi - lo) * np.sum(weights * vals * r ** (N - 1))
        avgs[j] = w_n * total / vols[j]
    if np.any(avgs < -1e-13 * max(1.0, np.max(np.abs(avgs)))):
        raise ValidationError("initial data must be nonnegative")
    return Field(np.maximum(avgs, 0.0), float(t0))


class _Stepper:
    """Backward-Euler Newton stepper bound to one (spec, grid, config)."""

    def __init__(self, spec: EquationSpec, grid: RadialGrid, config: SolverConfig,
                 boundary_value=None):
        if spec.family not in SUPPORTED:
            raise ValidationError(
                f"grid solver handles local families {sorted(f.value for f in SUPPORTED)}, "
                f"got {spec.family.value}")
        if spec.N != grid.N:
            raise ValidationError(f"spec N={spec.N} but grid N={grid.N}")
        self.spec, self.grid, self.config = spec, grid, config
        self.filtration = spec.family in _FILTRATION
        eps = config.reg_eps
        if self.filtration:
            self.phi, self.dphi = _phi_pair(spec, eps)
        else:
            self.flux, self.dflux = _grad_flux_pair(spec, eps)
        rc = grid.centers
        self.dr = np.empty(grid.cells + 1)      # face-to-face distances
        self.dr[0] = np.inf                     # axis face (flux forced to 0)
        self.dr[1:-1] = np.diff(rc)
        self.dr[-1] = grid.R - rc[-1]           # half cell to the outer wall
        self.A = grid.face_areas.copy()
        self.V = grid.volumes
        if config.outer_bc == "zeroflux":
            self.bval = None
        elif config.outer_bc == "dirichlet0":
            self.bval = lambda t: 0.0
        else:  # reference-valued wall
            if boundary_value is None:
                raise ValidationError("outer_bc='reference' needs a reference solution")
            self.bval = boundary_value

    def _face_values(self, v, t_new):
        """(flux, dflux_left, dflux_right) on all faces for state v."""
        n = v.size
        Phi = np.zeros(n + 1)
        dL = np.zeros(n + 1)   # d Phi_face / d v_leftcell
        dR = np.zeros(n + 1)   # d Phi_face / d v_rightcell
        if self.filtration:
            w = self.phi(v)
            dw = self.dphi(v)
            Phi[1:-1] = (w[1:] - w[:-1]) / self.dr[1:-1]
            dL[1:-1] = -dw[:-1] / self.dr[1:-1]
            dR[1:-1] = dw[1:] / self.dr[1:-1]
            if self.bval is not None:
                wb = self.phi(np.array([self.bval(t_new)]))[0]
                Phi[-1] = (wb - w[-1]) / self.dr[-1]
                dL[-1] = -dw[-1] / self.dr[-1]
        else:
            g = np.zeros(n + 1)
            g[1:-1] = (v[1:] - v[:-1]) / self.dr[1:-1]
            if self.bval is not None:
                g[-1] = (self.bval(t_new) - v[-1]) / self.dr[-1]
            Phi[1:-1] = self.flux(g[1:-1])
            d = self.dflux(g[1:-1]) / self.dr[1:-1]
            dL[1:-1] = -d
            dR[1:-1] = d
            if self.bval is not None:
                Phi[-1] = self.flux(np.array([g[-1]]))[0]
                dL[-1] = -self.dflux(np.array([g[-1]]))[0] / self.dr[-1]
        return Phi, dL, dR

    def _residual(self, v, u_old, dt, t_new):
        Phi, dL, dR = self._face_values(v, t_new)
        G = (v - u_old) * self.V / dt - (self.A[1:] * Phi[1:] - self.A[:-1] * Phi[:-1])
        return G, Phi, dL, dR

    def _jacobian_banded(self, dL, dR, dt):
        n = self.V.size
        ab = np.zeros((3, n))
        # diag: V/dt + A_{j+1} dR?? using dPhi/dv with signs folded below
        ab[1, :] = self.V / dt + self.A[1:] * (-dL[1:]) + self.A[:-1] * dR[:-1]
        ab[0, 1:] = -self.A[1:-1] * dR[1:-1]          # super-diagonal (dG_j/dv_{j+1})
        ab[2, :-1] = self.A[1:-1] * dL[1:-1]          # sub-diagonal (dG_j/dv_{j-1})
        return ab

    def step(self, state: Field, dt: float):
        """One backward-Euler step; returns (Field, boundary_outflux, clipped)."""
        u_old = state.values
        t_new = state.time + dt
        v = u_old.copy()
        tol = self.config.newton_tol * max(1.0, float(np.max(u_old, initial=0.0)))
        G, Phi, dL, dR = self._residual(v, u_old, dt, t_new)
        norm = np.max(np.abs(G) * dt / self.V)
        for _ in range(self.config.newton_max_iter):
            if norm <= tol:
                break
            ab = self._jacobian_banded(dL, dR, dt)
            try:
                delta = solve_banded((1, 1), ab, -G)
            except Exception as exc:
                raise StepRejected(f"linear solve failed: {exc}")
            if not np.all(np.isfinite(delta)):
                raise StepRejected("non-finite Newton update")
            lam = 1.0
            while True:
                v_try = v + lam * delta
                G_try, Phi, dL, dR = self._residual(v_try, u_old, dt, t_new)
                norm_try = np.max(np.abs(G_try) * dt / self.V)
                if norm_try <= (1 - 0.25 * lam) * norm or lam < 1 / 64:
                    break
                lam *= 0.5
            v, G, norm = v_try, G_try, norm_try
            if not np.isfinite(norm):
                raise StepRejected("Newton residual became non-finite")
        else:
            raise StepRejected(f"Newton stalled at residual {norm:.3e} (tol {tol:.3e})")

        clipped = float(-np.sum(np.minimum(v, 0.0) * self.V))
        v = np.maximum(v, 0.0)
        outflux = -dt * self.A[-1] * Phi[-1] if self.bval is not None else 0.0
        return Field(v, t_new), float(outflux), clipped


def step(state: Field, spec: EquationSpec, grid: RadialGrid, config: SolverConfig,
         dt: Optional[float] = None, reference: Optional[ClosedFormSolution] = None):
    """Single backward-Euler step (standalone form of the stepper)."""
    stepper = _Stepper(spec, grid, config, _boundary_fn(reference, grid))
    return stepper.step(state, config.dt if dt is None else dt)


def _boundary_fn(reference, grid):
    if reference is None:
        return None
    return lambda t: float(cf_evaluate(reference, grid.R, t))


def run(spec: EquationSpec, data, grid: RadialGrid, config: SolverConfig,
        t0: Optional[float] = None, breaks: Sequence[float] = (),
        reference: Optional[ClosedFormSolution] = None) -> RunRecord:
    """Integrate from the data up to the last checkpoint, ledger every step.

    `data` may be a Field (used as-is), a callable r -> u0(r), or a
    ClosedFormSolution sampled at t0.  With outer_bc='reference' the wall
    value is taken from `reference` (defaulting to the data when that is a
    closed-form solution).  Deterministic for fixed inputs: the step size
    adapts by halving on Newton failures and regrows by a fixed factor, and
    checkpoint times are landed on exactly.
    """
    if not config.checkpoint_times:
        raise ValidationError("config.checkpoint_times must not be empty")
    if isinstance(data, Field):
        state = data.copy()
        if t0 is not None:
            state.time = float(t0)
    else:
        state = init_state(grid, data, t0 if t0 is not None else 0.0, breaks)
    if config.checkpoint_times[0] <= state.time:
        raise ValidationError("first checkpoint must lie after the initial time")

    if config.outer_bc == "reference" and reference is None \
            and isinstance(data, ClosedFormSolution):
        reference = data
    stepper = _Stepper(spec, grid, config, _boundary_fn(reference, grid))
    ledger = MassLedger()
    outflux_cum = 0.0
    clipped_cum = 0.0
    obs_mask = None
    if config.observe_radius is not None:
        obs_mask = grid.centers <= config.observe_radius

    def log(st):
        obs = float(np.sum(st.values[obs_mask] * grid.volumes[obs_mask])) \
            if obs_mask is not None else None
        ledger.append(st.time, float(np.sum(st.values * grid.volumes)),
                      outflux_cum, float(np.max(st.values, initial=0.0)),
                      clipped_cum, obs)

    log(state)
    checkpoints = []
    dt = config.dt
    for target in config.checkpoint_times:
        while state.time < target - 1e-13 * max(1.0, target):
            dt_step = min(dt, target - state.time)
            try:
                new_state, outflux, clipped = stepper.step(state, dt_step)
            except StepRejected:
                dt = dt_step / 2
                if dt < config.dt_min:
                    raise NumericalError(
                        f"step size collapsed below dt_min={config.dt_min} at t={state.time}")
                continue
            state = new_state
            outflux_cum += outflux
            clipped_cum += clipped
            log(state)
            if dt_step >= dt:  # only regrow when we were not checkpoint-limited
                dt = min(dt * config.dt_growth, config.dt_max)
        state.time = target
        checkpoints.append(state.copy())
    return RunRecord(spec, config, grid, checkpoints, ledger)


def extinction_time(record: RunRecord, threshold: float) -> Optional[float]:
    """First ledger time with sup u below the threshold, None if never."""
    for t, sup in zip(record.ledger.times, record.ledger.sup_vals):
        if sup < threshold:
            return t
    return None
