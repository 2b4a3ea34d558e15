"""Pure exponent algebra: critical exponents, similarity exponents, regimes.

Everything here is closed-form arithmetic on the family parameters.  The
conventions: a finite-mass self-similar (source-type) solution has the form
u(x,t) = t^{-alpha} F(x t^{-beta}) with alpha = N*beta, and each family has a
critical parameter value at which alpha and beta diverge and the finite-mass
self-similar solution ceases to exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

from .errors import NoFiniteMassSelfSimilar, NotApplicable, PreconditionFailed, ValidationError
from .specs import EquationSpec, Family


class Regime(Enum):
    SLOW = "slow"
    LINEAR = "linear"
    GOOD_FAST = "good-fast"
    CRITICAL = "critical"
    VERY_FAST = "very-fast"


#: Regimes for which finite-mass self-similar exponents exist.
_HAS_EXPONENTS = {Regime.SLOW, Regime.LINEAR, Regime.GOOD_FAST}


@dataclass(frozen=True)
class SimilarityExponents:
    """Time-decay exponent alpha and space-spread exponent beta.

    For anisotropic families `sigmas` holds the per-axis spread fractions
    (axis i spreads like t^{sigma_i * alpha}); they sum to 1.
    """

    alpha: float
    beta: float
    sigmas: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    critical_value: float
    exponents: Optional[SimilarityExponents]
    conserves_mass: bool


def critical_exponent(family: Family, N: int, s: Optional[float] = None) -> float:
    """Critical parameter value below which mass conservation fails.

    Returns m_c = (N-2)/N for PME/FDE, p_c = 2N/(N+1) for PLE, and the
    fractional analogs (N-2s)/N and 2N/(N+s).  Families without a scalar
    critical parameter raise NotApplicable.
    """
    if N < 1 or int(N) != N:
        raise ValidationError(f"N must be an integer >= 1, got {N}")
    if family in (Family.FPME, Family.FPLE):
        if s is None or not 0 < s < 1:
            raise ValidationError(f"{family.value}: needs s in (0,1), got {s}")
    elif s is not None:
        raise ValidationError(f"{family.value}: s not accepted")

    if family is Family.PME_FDE:
        return (N - 2) / N
    if family is Family.PLE:
        return 2 * N / (N + 1)
    if family is Family.FPME:
        return (N - 2 * s) / N
    if family is Family.FPLE:
        return 2 * N / (N + s)
    raise NotApplicable(f"no scalar critical exponent for family {family.value}")


def similarity_exponents(spec: EquationSpec) -> SimilarityExponents:
    """Exponents of the finite-mass self-similar solution of `spec`.

    Raises NoFiniteMassSelfSimilar when the parameter sits at or below the
    family's critical value (the exponents diverge there).
    """
    fam, N = spec.family, spec.N
    if fam is Family.HE:
        return SimilarityExponents(N / 2, 0.5)
    if fam is Family.FHE:
        return SimilarityExponents(N / (2 * spec.s), 1 / (2 * spec.s))
    if fam is Family.PME_FDE:
        denom = N * (spec.m - 1) + 2
        if denom <= 0:
            raise NoFiniteMassSelfSimilar(
                f"m={spec.m} <= m_c={(N - 2) / N} in N={N}"
            )
        return SimilarityExponents(N / denom, 1 / denom)
    if fam is Family.PLE:
        denom = N * (spec.p - 2) + spec.p
        if denom <= 0:
            raise NoFiniteMassSelfSimilar(
                f"p={spec.p} <= p_c={2 * N / (N + 1)} in N={N}"
            )
        return SimilarityExponents(N / denom, 1 / denom)
    if fam is Family.FPME:
        denom = N * (spec.m - 1) + 2 * spec.s
        if denom <= 0:
            raise NoFiniteMassSelfSimilar(
                f"m={spec.m} <= m_c={(N - 2 * spec.s) / N} at s={spec.s}, N={N}"
            )
        return SimilarityExponents(N / denom, 1 / denom)
    if fam is Family.FPLE:
        denom = N * (spec.p - 2) + spec.s * spec.p
        if denom <= 0:
            raise NoFiniteMassSelfSimilar(
                f"p={spec.p} <= p_c={2 * N / (N + spec.s)} at s={spec.s}, N={N}"
            )
        return SimilarityExponents(N / denom, 1 / denom)
    if fam is Family.DNLE:
        return dnle_exponents(spec.m, spec.p, N)
    if fam is Family.ANISO_PME:
        return anisotropic_exponents("PME", spec.exps, N)
    if fam is Family.ANISO_PLE:
        return anisotropic_exponents("PLE", spec.exps, N)
    # LOGDIFF and TVF sit exactly at their singular limits.
    raise NoFiniteMassSelfSimilar(
        f"{fam.value}: borderline family, no finite-mass self-similar solution"
    )


def dnle_exponents(m: float, p: float, N: int) -> SimilarityExponents:
    """Doubly nonlinear exponents: alpha = 1/(m(p-1) - 1 + p/N), beta = alpha/N.

    Requires m(p-1) + p/N > 1; on or below that critical line the
    finite-mass self-similar solution does not exist.
    """
    if m <= 0 or p <= 1 or N < 1:
        raise ValidationError(f"need m>0, p>1, N>=1, got m={m}, p={p}, N={N}")
    denom = m * (p - 1) - 1 + p / N
    if denom <= 0:
        raise NoFiniteMassSelfSimilar(
            f"m(p-1)+p/N = {m * (p - 1) + p / N} <= 1 (critical line)"
        )
    alpha = 1 / denom
    return SimilarityExponents(alpha, alpha / N)


def anisotropic_exponents(kind: str, exps: Sequence[float], N: int) -> SimilarityExponents:
    """Per-axis similarity exponents for the anisotropic fast-diffusion models.

    PME kind: requires 0 < m_i < 1 (H1) and mean(m_i) > (N-2)/N (H2);
    alpha = N/(N(mbar-1)+2) and sigma_i = 1/N + (mbar-m_i)/2.

    PLE kind: requires 1 < p_i < 2 (H1p) and sum(1/p_i) < (N+1)/2 (H2p).
    The sigma_i are the unique solution of the per-axis scaling identities
    alpha(p_i-2) + p_i sigma_i alpha = 1 together with sum(sigma_i) = 1,
    which gives alpha = S/(N+1-2S) and sigma_i = 1/(p_i alpha) - 1 + 2/p_i
    with S = sum(1/p_i).  (The PME-kind sigmas solve the analogous system
    alpha(m_i-1) + 2 sigma_i alpha = 1.)
    """
    exps = [float(e) for e in exps]
    if N < 2:
        raise ValidationError("anisotropic families need N >= 2")
    if len(exps) != N:
        raise ValidationError(f"need {N} exponents, got {len(exps)}")
    if kind == "PME":
        if not all(0 < e < 1 for e in exps):
            raise PreconditionFailed("H1", f"all m_i must lie in (0,1), got {exps}")
        mbar = sum(exps) / N
        if not mbar > (N - 2) / N:
            raise PreconditionFailed(
                "H2", f"mean(m_i)={mbar} must exceed m_c={(N - 2) / N}"
            )
        alpha = N / (N * (mbar - 1) + 2)
        sigmas = tuple(1 / N + (mbar - e) / 2 for e in exps)
    elif kind == "PLE":
        if not all(1 < e < 2 for e in exps):
            raise PreconditionFailed("H1p", f"all p_i must lie in (1,2), got {exps}")
        S = sum(1 / e for e in exps)
        if not S < (N + 1) / 2:
            raise PreconditionFailed(
                "H2p", f"sum(1/p_i)={S} must be below (N+1)/2={(N + 1) / 2}"
            )
        alpha = S / (N + 1 - 2 * S)
        sigmas = tuple(1 / (e * alpha) - 1 + 2 / e for e in exps)
    else:
        raise ValidationError(f"kind must be 'PME' or 'PLE', got {kind!r}")
    return SimilarityExponents(alpha, alpha / N, sigmas)


def _split(value: float, critical: float, linear_value: float) -> Regime:
    if value > linear_value:
        return Regime.SLOW
    if value == linear_value:
        return Regime.LINEAR
    if value > critical:
        return Regime.GOOD_FAST
    if value == critical:
        return Regime.CRITICAL
    return Regime.VERY_FAST


def classify(spec: EquationSpec) -> RegimeReport:
    """Regime classification plus the mass-conservation verdict.

    Mass is conserved in the slow, linear, good-fast and critical regimes
    and lost in the very fast regime.  The two singular borderline families
    (planar logarithmic diffusion, 1D total variation flow) are classified
    as critical but lose mass at their known exact rates.
    """
    fam, N = spec.family, spec.N

    if fam in (Family.HE, Family.FHE):
        return RegimeReport(Regime.LINEAR, math.nan, similarity_exponents(spec), True)

    if fam is Family.LOGDIFF:
        return RegimeReport(Regime.CRITICAL, 0.0, None, False)
    if fam is Family.TVF:
        return RegimeReport(Regime.CRITICAL, 1.0, None, False)

    if fam in (Family.PME_FDE, Family.FPME):
        crit = critical_exponent(fam, N, spec.s)
        regime = _split(spec.m, crit, 1.0)
    elif fam in (Family.PLE, Family.FPLE):
        crit = critical_exponent(fam, N, spec.s)
        regime = _split(spec.p, crit, 2.0)
    elif fam is Family.DNLE:
        crit = (1 - spec.p / N) / (spec.p - 1)  # critical m at this (p, N)
        # slow/fast split at m(p-1) = 1 (the equation is 1-homogeneous there),
        # existence split on the critical line m(p-1) + p/N = 1
        c = spec.m * (spec.p - 1) + spec.p / N
        if c > 1:
            regime = Regime.SLOW if spec.m * (spec.p - 1) > 1 else (
                Regime.LINEAR if spec.m * (spec.p - 1) == 1 else Regime.GOOD_FAST)
        elif c == 1:
            regime = Regime.CRITICAL
        else:
            regime = Regime.VERY_FAST
    elif fam is Family.ANISO_PME:
        crit = (N - 2) / N
        regime = _split(sum(spec.exps) / N, crit, 1.0)
        if regime in (Regime.SLOW, Regime.LINEAR):  # excluded by H1 (all m_i < 1)
            regime = Regime.GOOD_FAST
    elif fam is Family.ANISO_PLE:
        crit = 2 * N / (N + 1)
        pbar = N / sum(1 / e for e in spec.exps)
        regime = _split(pbar, crit, 2.0)
        if regime in (Regime.SLOW, Regime.LINEAR):
            regime = Regime.GOOD_FAST
    else:  # pragma: no cover
        raise ValidationError(f"unhandled family {fam}")

    exponents = similarity_exponents(spec) if regime in _HAS_EXPONENTS else None
    return RegimeReport(regime, crit, exponents, regime is not Regime.VERY_FAST)


def scaling_identity_residual(spec: EquationSpec, e: SimilarityExponents) -> float:
    """Residual of the family's exact scaling identity (0 for correct exponents).

    PME/FDE: alpha(m-1) + 2 beta = 1; PLE: alpha(p-2) + p beta = 1; the
    fractional versions carry 2s beta resp. s p beta; DNLE:
    alpha(m(p-1)-1) + p beta = 1; anisotropic families are checked per axis.
    """
    fam = spec.family
    if fam is Family.HE:
        return abs(2 * e.beta - 1)
    if fam is Family.FHE:
        return abs(2 * spec.s * e.beta - 1)
    if fam is Family.PME_FDE:
        return abs(e.alpha * (spec.m - 1) + 2 * e.beta - 1)
    if fam is Family.PLE:
        return abs(e.alpha * (spec.p - 2) + spec.p * e.beta - 1)
    if fam is Family.FPME:
        return abs(e.alpha * (spec.m - 1) + 2 * spec.s * e.beta - 1)
    if fam is Family.FPLE:
        return abs(e.alpha * (spec.p - 2) + spec.s * spec.p * e.beta - 1)
    if fam is Family.DNLE:
        return abs(e.alpha * (spec.m * (spec.p - 1) - 1) + spec.p * e.beta - 1)
    if fam is Family.ANISO_PME:
        res = max(abs(e.alpha * (mi - 1) + 2 * sig * e.alpha - 1)
                  for mi, sig in zip(spec.exps, e.sigmas))
        return max(res, abs(sum(e.sigmas) - 1))
    if fam is Family.ANISO_PLE:
        res = max(abs(e.alpha * (pi - 2) + pi * sig * e.alpha - 1)
                  for pi, sig in zip(spec.exps, e.sigmas))
        return max(res, abs(sum(e.sigmas) - 1))
    raise NotApplicable(f"no scaling identity for {fam.value}")
