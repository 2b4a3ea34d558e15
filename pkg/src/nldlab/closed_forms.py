"""Exact solutions: constructors, evaluators, mass integrals, PDE residuals.

Every explicit solution in scope lives here as a `ClosedFormSolution`:
the Gaussian heat kernel, the Barenblatt solutions of the porous-medium /
fast-diffusion and p-Laplacian flows, the doubly nonlinear profile, the
s=1/2 fractional kernel (Poisson) and its numerically computed general-s
sibling, the explicit mass-losing solutions of planar logarithmic diffusion
and of the critical 1D fractional flow, and the m=2 porous-medium blow-up
family used for the L^p counterexamples.

Normalization constants are computed two independent ways (Beta/Gamma
closed form and adaptive quadrature) and cross-checked; `residual_norm`
provides a manufactured-solutions check that each formula solves its PDE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import beta as beta_fn

from .errors import (
    DivergentMass,
    NumericalError,
    RangeError,
    ResolutionError,
    TimeWindowError,
    ValidationError,
)
from .grids import RadialGrid, sphere_area
from .quadrature import radial_integral
from .regimes import similarity_exponents
from .specs import EquationSpec, Family


class SolutionKind(Enum):
    GAUSSIAN = "gaussian"
    BARENBLATT_PME = "barenblatt_pme"
    BARENBLATT_FDE = "barenblatt_fde"
    BARENBLATT_PLE = "barenblatt_ple"
    DNLE_PROFILE = "dnle_profile"
    FRAC_KERNEL_HALF = "frac_kernel_half"
    FRAC_KERNEL_NUMERIC = "frac_kernel_numeric"
    LOGDIFF_EXPLICIT = "logdiff_explicit"
    FRAC_EXPLICIT_S12 = "frac_explicit_s12"
    PME_BLOWUP_M2 = "pme_blowup_m2"


class MassLawKind(Enum):
    CONSTANT = "constant"
    LINEAR_LOSS = "linear-loss"
    EXTINCT = "extinct"


@dataclass(frozen=True)
class MassLaw:
    """Exact mass evolution: constant, or (M0 - rate*t)_+ with T = M0/rate."""

    kind: MassLawKind
    M0: float
    rate: float = 0.0
    T: Optional[float] = None

    def __call__(self, t: float) -> float:
        if self.kind is MassLawKind.CONSTANT:
            return self.M0
        return max(self.M0 - self.rate * t, 0.0)


@dataclass(frozen=True)
class ClosedFormSolution:
    """An exact solution with its constants, mass and validity window.

    C is the free profile constant fixed by the mass, k the profile slope
    constant, T the extinction/blow-up time where applicable, `a` the width
    parameter of the explicit logarithmic-diffusion family.
    """

    kind: SolutionKind
    spec: EquationSpec
    C: float
    k: float
    M: float
    alpha: float
    beta: float
    T: Optional[float] = None
    a: Optional[float] = None
    profile: Optional[object] = None  # cached numeric kernel (general s)


_BETA_KINDS = {
    SolutionKind.GAUSSIAN,
    SolutionKind.BARENBLATT_PME,
    SolutionKind.BARENBLATT_FDE,
    SolutionKind.BARENBLATT_PLE,
    SolutionKind.DNLE_PROFILE,
    SolutionKind.FRAC_KERNEL_HALF,
}


def _closed_form_constant(kind: SolutionKind, spec: EquationSpec, M: float) -> tuple:
    """(C, k) from the Beta/Gamma mass condition for the profile kinds."""
    N = spec.N
    w = sphere_area(N)
    if kind is SolutionKind.GAUSSIAN:
        return (4 * math.pi) ** (-N / 2), 0.25

    if kind is SolutionKind.FRAC_KERNEL_HALF:
        C = 2 * M / (w * beta_fn(N / 2, 0.5))
        return C, 1.0

    e = similarity_exponents(spec)
    if kind is SolutionKind.BARENBLATT_PME:
        m = spec.m
        k = e.beta * (m - 1) / (2 * m)
        expo = 1 / (m - 1) + N / 2
        C = (2 * M * k ** (N / 2) / (w * beta_fn(N / 2, m / (m - 1)))) ** (1 / expo)
        return C, k
    if kind is SolutionKind.BARENBLATT_FDE:
        m = spec.m
        k = e.beta * (1 - m) / (2 * m)
        q = 1 / (1 - m) - N / 2
        C = (w * k ** (-N / 2) * beta_fn(N / 2, q) / (2 * M)) ** (1 / q)
        return C, k
    if kind is SolutionKind.BARENBLATT_PLE:
        p = spec.p
        a = N * (p - 1) / p
        if p < 2:  # fast profile, power tail
            k = ((2 - p) / p) * e.beta ** (1 / (p - 1))
            b = (p - 1) / (2 - p) - a
            C = (w * ((p - 1) / p) * beta_fn(a, b) / (M * k ** a)) ** (1 / b)
        else:  # slow profile, compact support
            k = ((p - 2) / p) * e.beta ** (1 / (p - 1))
            g = (p - 1) / (p - 2)
            C = (M * p * k ** a / (w * (p - 1) * beta_fn(a, g + 1))) ** (1 / (g + a))
        return C, k
    if kind is SolutionKind.DNLE_PROFILE:
        m, p = spec.m, spec.p
        a = N * (p - 1) / p
        gamma = (p - 1) / (1 - m * (p - 1))
        k = ((1 - m * (p - 1)) / (m * p)) * e.beta ** (1 / (p - 1))
        b = gamma - a
        C = (w * ((p - 1) / p) * beta_fn(a, b) / (M * k ** a)) ** (1 / b)
        return C, k
    raise ValidationError(f"no closed-form constant for {kind}")


def _unit_profile_integral(kind: SolutionKind, spec: EquationSpec) -> float:
    """Quadrature of the C=1 profile shape; the independent normalization route.

    Returns J such that the mass condition reads
    omega_N * C**(-q) * k**(-theta) * J = M with the same exponents as the
    Beta route; the caller reassembles C from J.
    """
    N = spec.N
    if kind is SolutionKind.GAUSSIAN:
        return radial_integral(lambda r: np.exp(-(r ** 2) / 4), N)
    if kind is SolutionKind.FRAC_KERNEL_HALF:
        return radial_integral(lambda r: (1 + r ** 2) ** (-(N + 1) / 2), N,
                               decay=N + 1.0)
    if kind is SolutionKind.BARENBLATT_PME:
        m = spec.m
        return radial_integral(lambda r: np.maximum(1 - r ** 2, 0) ** (1 / (m - 1)),
                               N, r_edge=1.0)
    if kind is SolutionKind.BARENBLATT_FDE:
        m = spec.m
        return radial_integral(lambda r: (1 + r ** 2) ** (-1 / (1 - m)), N,
                               decay=2 / (1 - m))
    if kind is SolutionKind.BARENBLATT_PLE:
        p = spec.p
        q = p / (p - 1)
        if p < 2:
            g = (p - 1) / (2 - p)
            return radial_integral(lambda r: (1 + r ** q) ** (-g), N, decay=q * g)
        g = (p - 1) / (p - 2)
        return radial_integral(lambda r: np.maximum(1 - r ** q, 0) ** g, N, r_edge=1.0)
    if kind is SolutionKind.DNLE_PROFILE:
        m, p = spec.m, spec.p
        q = p / (p - 1)
        g = (p - 1) / (1 - m * (p - 1))
        return radial_integral(lambda r: (1 + r ** q) ** (-g), N, decay=q * g)
    raise ValidationError(f"no profile integral for {kind}")


def _quadrature_constant(kind: SolutionKind, spec: EquationSpec, M: float) -> float:
    """C from the mass condition with the shape integral done by quadrature."""
    N = spec.N
    w = sphere_area(N)
    if kind is SolutionKind.GAUSSIAN:
        return 1.0 / _unit_profile_integral(kind, spec)
    if kind is SolutionKind.FRAC_KERNEL_HALF:
        return M / _unit_profile_integral(kind, spec)

    _, k = _closed_form_constant(kind, spec, M)
    J = _unit_profile_integral(kind, spec)
    if kind is SolutionKind.BARENBLATT_PME:
        m = spec.m
        # mass = C**(1/(m-1)+N/2) k**(-N/2) * J  (after y = sqrt(C/k) s)
        expo = 1 / (m - 1) + N / 2
        return (M * k ** (N / 2) / J) ** (1 / expo)
    if kind is SolutionKind.BARENBLATT_FDE:
        q = 1 / (1 - spec.m) - N / 2
        return (J * k ** (-N / 2) / M) ** (1 / q)
    if kind is SolutionKind.BARENBLATT_PLE:
        p = spec.p
        a = N * (p - 1) / p
        if p < 2:
            b = (p - 1) / (2 - p) - a
            return (J * k ** (-a) / M) ** (1 / b)
        g = (p - 1) / (p - 2)
        return (M * k ** a / J) ** (1 / (g + a))
    if kind is SolutionKind.DNLE_PROFILE:
        m, p = spec.m, spec.p
        a = N * (p - 1) / p
        b = (p - 1) / (1 - m * (p - 1)) - a
        return (J * k ** (-a) / M) ** (1 / b)
    raise ValidationError(f"no quadrature constant for {kind}")


def normalization_constant(kind: SolutionKind, spec: EquationSpec, M: float = 1.0,
                           rtol: float = 1e-8) -> float:
    """Profile constant C fixing the total mass to M, dual-route checked.

    The Beta/Gamma closed form and the adaptive-quadrature route must agree
    to `rtol` relative; disagreement signals an implementation bug and
    raises NumericalError.
    """
    _validate_kind_range(kind, spec, M)
    C_closed, _ = _closed_form_constant(kind, spec, M)
    C_quad = _quadrature_constant(kind, spec, M)
    rel = abs(C_closed - C_quad) / abs(C_closed)
    if not rel <= rtol:
        raise NumericalError(
            f"normalization mismatch for {kind.value}: closed={C_closed!r} "
            f"quadrature={C_quad!r} (rel {rel:.2e})"
        )
    return C_closed


def _validate_kind_range(kind: SolutionKind, spec: EquationSpec, M: float) -> None:
    if M is not None and not M > 0:
        raise RangeError(f"mass must be positive, got {M}")
    N = spec.N
    fam = spec.family
    if kind is SolutionKind.GAUSSIAN and fam is not Family.HE:
        raise RangeError("gaussian kernel needs the heat-equation family")
    if kind in (SolutionKind.BARENBLATT_PME, SolutionKind.BARENBLATT_FDE,
                SolutionKind.PME_BLOWUP_M2):
        if fam is not Family.PME_FDE:
            raise RangeError(f"{kind.value} needs the pme family")
        m = spec.m
        if kind is SolutionKind.BARENBLATT_PME and not m > 1:
            raise RangeError(f"barenblatt_pme needs m > 1, got m={m}")
        if kind is SolutionKind.BARENBLATT_FDE:
            mc = (N - 2) / N
            if not (mc < m < 1):
                raise RangeError(
                    f"barenblatt_fde needs m_c={mc} < m < 1, got m={m} in N={N}")
        if kind is SolutionKind.PME_BLOWUP_M2 and m != 2:
            raise RangeError(f"blow-up family is the m=2 one, got m={m}")
    if kind is SolutionKind.BARENBLATT_PLE:
        if fam is not Family.PLE:
            raise RangeError("barenblatt_ple needs the ple family")
        pc = 2 * N / (N + 1)
        if spec.p == 2:
            raise RangeError("p=2 is the heat equation; use the gaussian kind")
        if not spec.p > pc:
            raise RangeError(f"barenblatt_ple needs p > p_c={pc}, got p={spec.p}")
    if kind is SolutionKind.DNLE_PROFILE:
        if fam is not Family.DNLE:
            raise RangeError("dnle_profile needs the dnle family")
        m, p = spec.m, spec.p
        if not m * (p - 1) < 1:
            raise RangeError(f"dnle profile printed for the fast range m(p-1) < 1, "
                             f"got m(p-1)={m * (p - 1)}")
        if not m * (p - 1) + p / N > 1:
            raise RangeError(f"dnle needs m(p-1)+p/N > 1, got {m * (p - 1) + p / N}")
    if kind is SolutionKind.FRAC_KERNEL_HALF:
        if fam is not Family.FHE or spec.s != 0.5:
            raise RangeError("frac_kernel_half needs the fhe family with s=1/2")
    if kind is SolutionKind.FRAC_KERNEL_NUMERIC:
        if fam is not Family.FHE:
            raise RangeError("frac_kernel_numeric needs the fhe family")
        if N not in (1, 2):
            raise RangeError("numeric kernels are supported in N=1 and N=2 only")
    if kind is SolutionKind.LOGDIFF_EXPLICIT and fam is not Family.LOGDIFF:
        raise RangeError("logdiff_explicit needs the logdiff family (N=2)")
    if kind is SolutionKind.FRAC_EXPLICIT_S12:
        if fam is not Family.FPME or spec.N != 1 or spec.s != 0.5:
            raise RangeError("frac_explicit_s12 lives at N=1, s=1/2 (fpme family)")


def make_solution(kind: SolutionKind, spec: EquationSpec, M: float = 1.0, *,
                  T: Optional[float] = None, a: Optional[float] = None,
                  C: Optional[float] = None) -> ClosedFormSolution:
    """Construct an exact solution of the given kind with total mass M.

    Mass-conserving kinds fix the free constant C so the mass equals M at
    every time.  The mass-losing kinds (logdiff_explicit, frac_explicit_s12)
    take the extinction time T (or infer it from M at t=0); the blow-up
    family takes C and T directly and has infinite mass.
    """
    _validate_kind_range(kind, spec, M if kind is not SolutionKind.PME_BLOWUP_M2 else None)

    if kind is SolutionKind.LOGDIFF_EXPLICIT:
        a = 1.0 if a is None else float(a)
        if a <= 0:
            raise RangeError(f"width a must be positive, got {a}")
        if T is None:
            if M is None:
                raise ValidationError("logdiff_explicit needs T or M")
            T = M / (8 * math.pi)
        M0 = 8 * math.pi * T
        return ClosedFormSolution(kind, spec, C=8 * a ** 2, k=1.0, M=M0,
                                  alpha=math.nan, beta=math.nan, T=float(T), a=a)
    if kind is SolutionKind.FRAC_EXPLICIT_S12:
        if T is None:
            if M is None:
                raise ValidationError("frac_explicit_s12 needs T or M")
            T = M / (2 * math.pi)
        M0 = 2 * math.pi * T
        return ClosedFormSolution(kind, spec, C=2.0, k=1.0, M=M0,
                                  alpha=math.nan, beta=math.nan, T=float(T))
    if kind is SolutionKind.PME_BLOWUP_M2:
        if C is None or T is None:
            raise ValidationError("pme_blowup_m2 needs C > 0 and T")
        if C <= 0:
            raise RangeError(f"need C > 0, got {C}")
        k = 1.0 / (4 * (spec.N + 2))
        return ClosedFormSolution(kind, spec, C=float(C), k=k, M=math.inf,
                                  alpha=math.nan, beta=math.nan, T=float(T))

    if kind is SolutionKind.FRAC_KERNEL_NUMERIC:
        from . import fractional  # local import; fractional has no reverse dependency

        prof = fractional.kernel_profile(spec.s, spec.N)
        e = similarity_exponents(spec)
        return ClosedFormSolution(kind, spec, C=1.0, k=1.0, M=float(M),
                                  alpha=e.alpha, beta=e.beta, profile=prof)

    C_val, k = _closed_form_constant(kind, spec, M)
    if kind is SolutionKind.GAUSSIAN:
        e = similarity_exponents(spec)
        return ClosedFormSolution(kind, spec, C=C_val, k=k, M=float(M),
                                  alpha=e.alpha, beta=e.beta)
    if kind is SolutionKind.FRAC_KERNEL_HALF:
        return ClosedFormSolution(kind, spec, C=C_val, k=k, M=float(M),
                                  alpha=float(spec.N), beta=1.0)
    e = similarity_exponents(spec)
    return ClosedFormSolution(kind, spec, C=C_val, k=k, M=float(M),
                              alpha=e.alpha, beta=e.beta)


def _check_time(sol: ClosedFormSolution, t: float, need_ahead: float = 0.0) -> None:
    if sol.kind in (SolutionKind.LOGDIFF_EXPLICIT, SolutionKind.FRAC_EXPLICIT_S12,
                    SolutionKind.PME_BLOWUP_M2):
        if not 0 <= t < sol.T - need_ahead:
            raise TimeWindowError(
                f"{sol.kind.value}: t={t} outside [0, T={sol.T})")
    else:
        if not t > need_ahead:
            raise TimeWindowError(f"{sol.kind.value}: needs t > 0, got t={t}")


def evaluate(sol: ClosedFormSolution, x, t: float) -> np.ndarray:
    """Pointwise value at radius |x| and time t (vectorized over x).

    All kinds in the catalog are radially symmetric; x is interpreted as a
    radius (nonnegative values; the sign is irrelevant).
    """
    _check_time(sol, t)
    r = np.abs(np.asarray(x, dtype=float))
    kind, spec = sol.kind, sol.spec
    N = spec.N

    if kind is SolutionKind.GAUSSIAN:
        return sol.M * (4 * math.pi * t) ** (-N / 2) * np.exp(-(r ** 2) / (4 * t))
    if kind is SolutionKind.BARENBLATT_PME:
        y2 = (r / t ** sol.beta) ** 2
        core = np.maximum(sol.C - sol.k * y2, 0.0)
        return t ** (-sol.alpha) * core ** (1 / (spec.m - 1))
    if kind is SolutionKind.BARENBLATT_FDE:
        y2 = (r / t ** sol.beta) ** 2
        return t ** (-sol.alpha) * (sol.C + sol.k * y2) ** (-1 / (1 - spec.m))
    if kind is SolutionKind.BARENBLATT_PLE:
        p = spec.p
        y = r / t ** sol.beta
        if p < 2:
            return t ** (-sol.alpha) * (sol.C + sol.k * y ** (p / (p - 1))) ** (
                -(p - 1) / (2 - p))
        core = np.maximum(sol.C - sol.k * y ** (p / (p - 1)), 0.0)
        return t ** (-sol.alpha) * core ** ((p - 1) / (p - 2))
    if kind is SolutionKind.DNLE_PROFILE:
        m, p = spec.m, spec.p
        y = r / t ** sol.beta
        g = (p - 1) / (1 - m * (p - 1))
        return t ** (-sol.alpha) * (sol.C + sol.k * y ** (p / (p - 1))) ** (-g)
    if kind is SolutionKind.FRAC_KERNEL_HALF:
        return sol.M * sol.C * t / (t ** 2 + r ** 2) ** ((N + 1) / 2)
    if kind is SolutionKind.FRAC_KERNEL_NUMERIC:
        y = r / t ** sol.beta
        return sol.M * t ** (-sol.alpha) * sol.profile.value(y)
    if kind is SolutionKind.LOGDIFF_EXPLICIT:
        return 8 * sol.a ** 2 * (sol.T - t) / (sol.a ** 2 + r ** 2) ** 2
    if kind is SolutionKind.FRAC_EXPLICIT_S12:
        return 2 * (sol.T - t) / (1 + r ** 2)
    if kind is SolutionKind.PME_BLOWUP_M2:
        return sol.k * r ** 2 / (sol.T - t) + sol.C * (sol.T - t) ** (-N / (N + 2))
    raise ValidationError(f"unhandled kind {kind}")  # pragma: no cover


def tail_decay_exponent(sol: ClosedFormSolution) -> Optional[float]:
    """Known far-field power decay of u(.,t), or None for faster-than-power."""
    kind, spec = sol.kind, sol.spec
    if kind is SolutionKind.BARENBLATT_FDE:
        return 2 / (1 - spec.m)
    if kind is SolutionKind.BARENBLATT_PLE and spec.p < 2:
        return spec.p / (2 - spec.p)
    if kind is SolutionKind.DNLE_PROFILE:
        return spec.p / (1 - spec.m * (spec.p - 1))
    if kind is SolutionKind.FRAC_KERNEL_HALF:
        return spec.N + 1.0
    if kind is SolutionKind.FRAC_KERNEL_NUMERIC:
        return spec.N + 2 * spec.s
    if kind is SolutionKind.LOGDIFF_EXPLICIT:
        return 4.0
    if kind is SolutionKind.FRAC_EXPLICIT_S12:
        return 2.0
    return None


def mass(sol: ClosedFormSolution, t: float, rtol: float = 1e-11) -> float:
    """Total mass at time t by adaptive radial quadrature of `evaluate`."""
    _check_time(sol, t)
    if sol.kind is SolutionKind.PME_BLOWUP_M2:
        raise DivergentMass("the blow-up family has infinite mass")

    kind, spec = sol.kind, sol.spec

    def f(r):
        return evaluate(sol, r, t)

    if kind is SolutionKind.BARENBLATT_PME:
        edge = math.sqrt(sol.C / sol.k) * t ** sol.beta
        return radial_integral(f, spec.N, r_edge=edge, rtol=rtol)
    if kind is SolutionKind.BARENBLATT_PLE and spec.p > 2:
        p = spec.p
        edge = (sol.C / sol.k) ** ((p - 1) / p) * t ** sol.beta
        return radial_integral(f, spec.N, r_edge=edge, rtol=rtol)
    decay = tail_decay_exponent(sol)
    if decay is not None and decay <= spec.N:
        raise DivergentMass(f"tail exponent {decay} <= N: infinite mass")
    return radial_integral(f, spec.N, decay=decay, rtol=rtol)


def mass_law(sol: ClosedFormSolution) -> MassLaw:
    """The exact mass evolution law of this solution kind."""
    if sol.kind is SolutionKind.LOGDIFF_EXPLICIT:
        return MassLaw(MassLawKind.LINEAR_LOSS, M0=8 * math.pi * sol.T,
                       rate=8 * math.pi, T=sol.T)
    if sol.kind is SolutionKind.FRAC_EXPLICIT_S12:
        return MassLaw(MassLawKind.LINEAR_LOSS, M0=2 * math.pi * sol.T,
                       rate=2 * math.pi, T=sol.T)
    if sol.kind is SolutionKind.PME_BLOWUP_M2:
        raise DivergentMass("the blow-up family has infinite mass")
    return MassLaw(MassLawKind.CONSTANT, M0=sol.M)


def difference_law(C1: float, C2: float, spec: EquationSpec, t: float,
                   T: float = 1.0) -> float:
    """Exact sup-norm of the difference of two m=2 blow-up family members.

    U(.,t;C1,T) - U(.,t;C2,T) = (C1-C2) (T-t)^{-N/(N+2)}, constant in space.
    """
    if spec.family is not Family.PME_FDE or spec.m != 2:
        raise RangeError("difference law holds for the m=2 blow-up family")
    if not C1 > C2 > 0:
        raise RangeError(f"need C1 > C2 > 0, got C1={C1}, C2={C2}")
    if not 0 <= t < T:
        raise TimeWindowError(f"need 0 <= t < T={T}, got t={t}")
    return (C1 - C2) * (T - t) ** (-spec.N / (spec.N + 2))


def lp_blowup_exponent(m: float, p: float, N: int) -> float:
    """Blow-up exponent mu of ||U1 - U2||_p ~ (T-t)^{-mu} for the m>2 family.

    mu = N beta (p-1)/p with beta = 1/(N(m-1)+2); finite-norm blow-up needs
    p > p_* = N(m-1) / (2(m-2)) (and m > 2).
    """
    if not m > 2:
        raise RangeError(f"the L^p counterexample family needs m > 2, got m={m}")
    p_star = N * (m - 1) / (2 * (m - 2))
    if not p > max(p_star, 1.0):
        raise RangeError(f"need p > p_* = {p_star}, got p={p}")
    beta = 1 / (N * (m - 1) + 2)
    return N * beta * (p - 1) / p


# ---------------------------------------------------------------------------
# PDE residuals (manufactured-solutions check)
# ---------------------------------------------------------------------------


def _radial_div(flux_plus, flux_minus, r, h, N):
    """(1/r^{N-1}) d/dr (r^{N-1} Phi) from face fluxes at r +- h/2."""
    rp = (r + h / 2) ** (N - 1)
    rm = (r - h / 2) ** (N - 1)
    return (rp * flux_plus - rm * flux_minus) / (h * r ** (N - 1))


def _rhs_filtration(sol, r, t, h, transform):
    """Radial Laplacian of transform(u) by centered differences."""
    N = sol.spec.N
    w = lambda rr: transform(evaluate(sol, rr, t))
    wc, wp, wm = w(r), w(r + h), w(r - h)
    return _radial_div((wp - wc) / h, (wc - wm) / h, r, h, N)


def _rhs_gradient_flux(sol, r, t, h, p, transform):
    """div(|grad w|^{p-2} grad w) with w = transform(u), radial, centered."""
    N = sol.spec.N
    w = lambda rr: transform(evaluate(sol, rr, t))
    wc, wp, wm = w(r), w(r + h), w(r - h)
    gp = (wp - wc) / h
    gm = (wc - wm) / h
    phi = lambda g: np.abs(g) ** (p - 2) * g
    return _radial_div(phi(gp), phi(gm), r, h, N)


def _pde_rhs(sol: ClosedFormSolution, r: np.ndarray, t: float, h: float) -> np.ndarray:
    """Discrete right-hand side of the governing PDE at (r, t), step h.

    Local families use centered differences of the printed flux form.  The
    s=1/2 kinds use the Poisson harmonic-extension oracle, differenced at
    step h in the extension variable; the general-s numeric kernel uses its
    spectrally computed companion (the symbol-weighted inverse transform).
    """
    kind, spec = sol.kind, sol.spec
    if kind in (SolutionKind.GAUSSIAN,):
        return _rhs_filtration(sol, r, t, h, lambda u: u)
    if kind in (SolutionKind.BARENBLATT_PME, SolutionKind.BARENBLATT_FDE):
        return _rhs_filtration(sol, r, t, h, lambda u: u ** spec.m)
    if kind is SolutionKind.PME_BLOWUP_M2:
        return _rhs_filtration(sol, r, t, h, lambda u: u ** 2)
    if kind is SolutionKind.LOGDIFF_EXPLICIT:
        return _rhs_filtration(sol, r, t, h, np.log)
    if kind is SolutionKind.BARENBLATT_PLE:
        return _rhs_gradient_flux(sol, r, t, h, spec.p, lambda u: u)
    if kind is SolutionKind.DNLE_PROFILE:
        return _rhs_gradient_flux(sol, r, t, h, spec.p, lambda u: u ** spec.m)
    if kind is SolutionKind.FRAC_KERNEL_HALF:
        # (-Lap)^{1/2} P_t = -d/dt P_t by the harmonic-extension identity;
        # the t-derivative of M C t (t^2+r^2)^{-(N+1)/2} in closed form
        N = spec.N
        return sol.M * sol.C * (t ** 2 + r ** 2) ** (-(N + 3) / 2) * (
            r ** 2 - N * t ** 2)
    if kind is SolutionKind.FRAC_EXPLICIT_S12:
        # u_t = -(-Lap)^{1/2} log u; the harmonic extension of log u in the
        # upper half plane is log(2(T-t)) - log(r^2 + (1+y)^2), and the
        # operator is minus its y-derivative at y=0 (one-sided 2nd order)
        E = lambda y: -np.log(r ** 2 + (1 + y) ** 2)
        dE = (-3 * E(0.0) + 4 * E(h) - E(2 * h)) / (2 * h)
        return dE
    if kind is SolutionKind.FRAC_KERNEL_NUMERIC:
        y = r / t ** sol.beta
        return -sol.M * t ** (-sol.alpha - 1) * sol.profile.symbol_companion(y)
    raise ValidationError(f"no residual form for {kind}")  # pragma: no cover


def _default_window(sol: ClosedFormSolution, grid: RadialGrid, t: float) -> tuple:
    lo, hi = 0.05 * grid.R, 0.80 * grid.R
    kind = sol.kind
    if kind is SolutionKind.BARENBLATT_PME:
        edge = math.sqrt(sol.C / sol.k) * t ** sol.beta
        lo, hi = 0.10 * edge, 0.80 * edge
    elif kind is SolutionKind.BARENBLATT_PLE and sol.spec.p > 2:
        p = sol.spec.p
        edge = (sol.C / sol.k) ** ((p - 1) / p) * t ** sol.beta
        lo, hi = 0.10 * edge, 0.80 * edge
    return max(lo, 0.0), min(hi, 0.95 * grid.R)


def residual_norm(sol: ClosedFormSolution, grid: RadialGrid, t: float,
                  window: Optional[tuple] = None) -> float:
    """Max PDE residual |u_t - RHS(u)| over the grid window at time t.

    Time derivative and RHS are discretized by centered differences whose
    step equals the grid spacing, so the residual of an exact solution
    vanishes at second order under grid refinement (smooth regions; free
    boundaries and the axis are excluded by the window).
    """
    spacing = grid.spacing
    h = float(spacing[0])
    if not np.allclose(spacing, h, rtol=1e-12, atol=0.0):
        raise ValidationError("residual_norm needs a uniform grid")
    lo, hi = window if window is not None else _default_window(sol, grid, t)
    r = grid.centers
    r = r[(r >= max(lo, h)) & (r <= hi)]
    if r.size < 8:
        raise ResolutionError(
            f"window [{lo:.3g}, {hi:.3g}] holds only {r.size} cells at h={h:.3g}")
    _check_time(sol, t, need_ahead=2 * h)
    if t - h <= 0 and sol.kind not in (SolutionKind.LOGDIFF_EXPLICIT,
                                       SolutionKind.FRAC_EXPLICIT_S12,
                                       SolutionKind.PME_BLOWUP_M2):
        raise TimeWindowError(f"need t - h > 0 for the centered time difference")

    ut = (evaluate(sol, r, t + h) - evaluate(sol, r, t - h)) / (2 * h)
    rhs = _pde_rhs(sol, r, t, h)
    return float(np.max(np.abs(ut - rhs)))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def solution_to_dict(sol: ClosedFormSolution) -> dict:
    d = {
        "kind": sol.kind.value,
        "spec": sol.spec.to_dict(),
        "C": sol.C,
        "k": sol.k,
        "M": sol.M,
    }
    if sol.T is not None:
        d["T"] = sol.T
    if sol.a is not None:
        d["a"] = sol.a
    return d


def solution_from_dict(d: dict) -> ClosedFormSolution:
    kind = SolutionKind(d["kind"])
    spec = EquationSpec.from_dict(d["spec"])
    if kind is SolutionKind.PME_BLOWUP_M2:
        return make_solution(kind, spec, C=d["C"], T=d["T"])
    if kind in (SolutionKind.LOGDIFF_EXPLICIT, SolutionKind.FRAC_EXPLICIT_S12):
        return make_solution(kind, spec, T=d["T"], a=d.get("a"))
    sol = make_solution(kind, spec, M=d["M"])
    if abs(sol.C - d["C"]) > 1e-9 * abs(d["C"]):
        raise ValidationError("stored constant C disagrees with the rebuilt one")
    return sol
