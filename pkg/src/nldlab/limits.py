"""Parameter-limit scans: frozen-Dirac concentration and the p->1 collapse.

As the fast-diffusion exponent descends to its critical value the
normalization constant C of the source-type profile collapses to zero
super-exponentially while the peak K = C^{-1/(1-m)} blows up; the profile
concentrates all its mass at the origin.  These scans tabulate C, K, the
half-max radius d and the mass fraction outside a fixed ball along a list
of eps = m - m_c (or p - p_c) values.

All constants are computed in log-domain extended precision (mpmath):
double precision underflows almost immediately along these scans.  Rows
whose constants are not representable as floats are flagged, never dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath as mp

from .errors import ValidationError
from .grids import sphere_area

_DPS = 60


@dataclass(frozen=True)
class ScanRow:
    """One eps sample of a concentration scan (log columns always finite)."""

    eps: float
    C: float                 # float(C), 0.0 or inf when not representable
    K: float                 # profile peak, = C^{-1/(1-m)} (PME kind)
    d: float                 # half-max radius
    outer_mass_frac: float   # mass fraction outside the probe ball
    log_C: float
    log_K: float
    log_d: float
    probe_values: Tuple[float, ...]  # log profile at the probe radii
    flagged: bool
    mass_check: float        # re-quadrature of the profile mass (target M)


def _finite_float(x: mp.mpf) -> Tuple[float, bool]:
    y = float(x)
    flag = (y == 0.0 and x != 0) or math.isinf(y)
    return y, flag


def _beta_log(a: mp.mpf, b: mp.mpf) -> mp.mpf:
    return mp.loggamma(a) + mp.loggamma(b) - mp.loggamma(a + b)


def _outer_fraction(a: mp.mpf, b: mp.mpf, x_small: mp.mpf) -> mp.mpf:
    """Tail fraction I_{x_small}(b, a) of the Beta(a,b) mass integral.

    The substitution x = u/(1+u) turns the profile mass into a Beta
    integral; the fraction beyond u_R equals the regularized incomplete
    Beta at 1/(1+u_R) with swapped parameters (stable near zero).
    """
    return mp.betainc(b, a, 0, x_small, regularized=True)


def concentration_scan(family: str, N: int, eps_list: Sequence[float],
                       M: float = 1.0, probe_radius: float = 1.0,
                       probe_points: Sequence[float] = (0.5,),
                       mass_recheck: bool = True) -> List[ScanRow]:
    """Scan the source-type profile constants as eps = m - m_c (p - p_c) -> 0.

    family "PME": m = m_c + eps with m_c = (N-2)/N, N >= 3.
    family "PLE": p = p_c + eps with p_c = 2N/(N+1), N >= 2.
    Each row records C (mass normalization), K (peak), d (half-max radius)
    and the mass fraction outside the probe ball, plus log-profile values at
    the probe points; `mass_check` re-integrates the profile by quadrature.
    """
    if any(e <= 0 for e in eps_list):
        raise ValidationError("eps values must be positive")
    if list(eps_list) != sorted(eps_list, reverse=True):
        raise ValidationError("eps_list must be decreasing")
    rows = []
    with mp.workdps(_DPS):
        w = mp.mpf(sphere_area(N))
        for eps_f in eps_list:
            eps = mp.mpf(eps_f)
            if family == "PME":
                if N < 3:
                    raise ValidationError("PME concentration scan needs N >= 3")
                m = mp.mpf(N - 2) / N + eps
                beta = 1 / (N * (m - 1) + 2)
                k = beta * (1 - m) / (2 * m)
                q = 1 / (1 - m) - mp.mpf(N) / 2
                a = mp.mpf(N) / 2
                log_C = (mp.log(w) - a * mp.log(k) + _beta_log(a, q)
                         - mp.log(2 * M)) / q
                inv_power = 1 / (1 - m)          # K = C^{-1/(1-m)}
                half_factor = 2 ** (1 - m) - 1   # F(d) = F(0)/2
                y_power = mp.mpf(2)              # profile argument k*y^2
                b = q
            elif family == "PLE":
                if N < 2:
                    raise ValidationError("PLE concentration scan needs N >= 2")
                p = mp.mpf(2 * N) / (N + 1) + eps
                lam = N * (p - 2) + p
                beta = 1 / lam
                k = ((2 - p) / p) * beta ** (1 / (p - 1))
                gamma = (p - 1) / (2 - p)
                a = N * (p - 1) / p
                b = gamma - a
                log_C = (mp.log(w * (p - 1) / p) + _beta_log(a, b)
                         - a * mp.log(k) - mp.log(M)) / b
                inv_power = gamma
                half_factor = 2 ** (1 / gamma) - 1
                y_power = p / (p - 1)
            else:
                raise ValidationError(f"family must be 'PME' or 'PLE', got {family!r}")

            log_K = -inv_power * log_C
            log_d = (log_C + mp.log(half_factor) - mp.log(k)) / y_power
            u_R = mp.exp(y_power * mp.log(probe_radius) + mp.log(k) - log_C)
            frac = _outer_fraction(a, b, 1 / (1 + u_R))
            probes = tuple(
                float(-inv_power * (log_C + mp.log1p(mp.exp(
                    y_power * mp.log(mp.mpf(x)) + mp.log(k) - log_C))))
                for x in probe_points)

            mass = float("nan")
            if mass_recheck:
                # independent route: numeric quadrature of the unit-C shape
                # (mass = w C^{-b} k^{-N/y_power} J after rescaling y)
                expo = inv_power
                J = mp.quad(lambda t: (1 + t ** y_power) ** (-expo) * t ** (N - 1),
                            [0, 1, 10, mp.inf])
                log_mass = (mp.log(w) + mp.log(J) - b * log_C
                            - (mp.mpf(N) / y_power) * mp.log(k))
                mass = float(mp.exp(log_mass))

            C, fC = _finite_float(mp.exp(log_C))
            K, fK = _finite_float(mp.exp(log_K))
            d, fd = _finite_float(mp.exp(log_d))
            rows.append(ScanRow(
                eps=float(eps_f), C=C, K=K, d=d,
                outer_mass_frac=float(frac),
                log_C=float(log_C), log_K=float(log_K), log_d=float(log_d),
                probe_values=probes, flagged=fC or fK or fd,
                mass_check=mass))
    return rows


@dataclass(frozen=True)
class Ple1dRow:
    """One eps = p-1 sample of the 1D p-Laplacian collapse scan."""

    eps: float
    log_C: float
    log_K: float
    flux: Dict[float, float]        # boundary flux 2|B_x|^{p-1} at each radius
    bound_factor_max: float         # max of B * (|x|^p / (2 eps t))^{1/(2-p)}
    sup_values: Tuple[float, ...]   # B(0, t) at the probe times
    extinction_time: float          # (M/2)^{1/(2-p)}
    flagged: bool


def ple1d_limit_scan(eps_list: Sequence[float], M: float = 1.0,
                     radii: Sequence[float] = (5.0, 10.0, 20.0),
                     t_flux: float = 0.2,
                     sup_times: Sequence[float] = (0.1, 0.3, 0.5, 0.7, 0.9),
                     bound_t: float = 1.0) -> List[Ple1dRow]:
    """Collapse of the 1D p-Laplacian source solution as p -> 1.

    For each eps = p-1 the row verifies the uniform envelope
    B(x,t) <= (2 eps t / |x|^p)^{1/(2-p)} (max of the ratio over a wide
    grid), tabulates the boundary flux 2 |B_x|^{p-1} whose limit is the
    exact mass-loss rate 2, and samples the centre value B(0,t) across the
    expected extinction time (M/2)^{1/(2-p)}.
    """
    if any(e <= 0 or e >= 1 for e in eps_list):
        raise ValidationError("eps = p-1 values must lie in (0,1)")
    rows = []
    with mp.workdps(2 * _DPS):
        for eps_f in eps_list:
            eps = mp.mpf(eps_f)
            p = 1 + eps
            lam = 2 * p - 2          # N(p-2)+p at N=1
            beta = 1 / lam
            alpha = beta
            k = ((2 - p) / p) * beta ** (1 / (p - 1))
            log_k = mp.log((2 - p) / p) + mp.log(beta) / (p - 1)
            gamma = (p - 1) / (2 - p)
            a = (p - 1) / p
            b = gamma - a
            w = mp.mpf(2)
            log_C = (mp.log(w * (p - 1) / p) + _beta_log(a, b)
                     - a * log_k - mp.log(M)) / b
            log_K = -gamma * log_C
            q = p / (p - 1)

            def log_inner(x, t):
                # C + k y^q at y = x t^{-beta}, in log domain
                ly = mp.log(x) - beta * mp.log(t)
                return log_C + mp.log1p(mp.exp(q * ly + log_k - log_C))

            def log_B(x, t):
                return -alpha * mp.log(t) - gamma * log_inner(x, t)

            # pointwise envelope check over a wide grid at t = bound_t
            factor = mp.mpf(0)
            for x in [mp.mpf("0.1") * 2 ** j for j in range(14)]:
                lb = log_B(x, mp.mpf(bound_t))
                lenv = (mp.log(2 * eps * bound_t) - p * mp.log(x)) / (2 - p)
                factor = max(factor, mp.exp(lb - lenv))

            flux = {}
            for R in radii:
                R = mp.mpf(R)
                t = mp.mpf(t_flux)
                ly = mp.log(R) - beta * mp.log(t)
                log_dB = (-alpha * mp.log(t) - (gamma + 1) * log_inner(R, t)
                          + mp.log(gamma * q) + log_k + (q - 1) * ly
                          - beta * mp.log(t))
                flux[float(R)] = float(2 * mp.exp((p - 1) * log_dB))

            # B(0,t) = t^{-alpha} C^{-gamma}
            sups = tuple(float(mp.exp(-alpha * mp.log(mp.mpf(t)) - gamma * log_C))
                         for t in sup_times)
            T = float((mp.mpf(M) / 2) ** (1 / (2 - p)))
            Cf, flag = _finite_float(mp.exp(log_C))
            rows.append(Ple1dRow(
                eps=float(eps_f), log_C=float(log_C), log_K=float(log_K),
                flux=flux, bound_factor_max=float(factor), sup_values=sups,
                extinction_time=T, flagged=flag))
    return rows
