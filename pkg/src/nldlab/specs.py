"""Equation specifications: family tags plus the parameters (m, p, s, N).

One `EquationSpec` identifies a single PDE instance out of the families in
scope: heat equation, porous medium / fast diffusion, p-Laplacian evolution,
their fractional counterparts, the two singular borderline flows
(planar logarithmic diffusion, 1D total variation flow), the doubly
nonlinear equation and the anisotropic fast-diffusion models.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

from .errors import ValidationError


class Family(Enum):
    HE = "he"
    PME_FDE = "pme"
    PLE = "ple"
    FHE = "fhe"
    FPME = "fpme"
    FPLE = "fple"
    LOGDIFF = "logdiff"
    TVF = "tvf"
    DNLE = "dnle"
    ANISO_PME = "aniso_pme"
    ANISO_PLE = "aniso_ple"


#: Families whose nonlinearity is a power of u (need m).
_NEEDS_M = {Family.PME_FDE, Family.FPME, Family.DNLE}
#: Families with a gradient power nonlinearity (need p).
_NEEDS_P = {Family.PLE, Family.FPLE, Family.DNLE}
#: Nonlocal families (need the fractional order s).
FRACTIONAL = {Family.FHE, Family.FPME, Family.FPLE}
#: Anisotropic families (need an exponent vector of length N).
ANISOTROPIC = {Family.ANISO_PME, Family.ANISO_PLE}


@dataclass(frozen=True)
class EquationSpec:
    """Family tag plus parameters identifying one PDE instance.

    Parameters must be present exactly when the family requires them:
    `m` for PME/FDE-type, `p` for p-Laplacian-type, `s` in (0,1) for the
    fractional families, `exps` (length N) for the anisotropic families.
    LOGDIFF is the rescaled m->0 porous-medium flow, fixed to N=2;
    TVF is the p=1 limit of the PLE, fixed to N=1.
    """

    family: Family
    N: int = 1
    m: Optional[float] = None
    p: Optional[float] = None
    s: Optional[float] = None
    exps: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        fam = self.family
        if not isinstance(fam, Family):
            raise ValidationError(f"unknown family {fam!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValidationError(f"N must be an integer >= 1, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

        def forbid(name, value):
            if value is not None:
                raise ValidationError(f"{fam.value}: parameter {name} not accepted")

        if fam in _NEEDS_M:
            if self.m is None or not self.m > 0:
                raise ValidationError(f"{fam.value}: needs m > 0, got {self.m}")
        else:
            forbid("m", self.m)
        if fam in _NEEDS_P:
            if self.p is None or not self.p > 1:
                raise ValidationError(f"{fam.value}: needs p > 1, got {self.p}")
        else:
            forbid("p", self.p)
        if fam in FRACTIONAL:
            if self.s is None or not 0 < self.s < 1:
                raise ValidationError(f"{fam.value}: needs s in (0,1), got {self.s}")
        else:
            forbid("s", self.s)

        if fam in ANISOTROPIC:
            if self.N < 2:
                raise ValidationError(f"{fam.value}: needs N >= 2")
            if self.exps is None or len(self.exps) != self.N:
                raise ValidationError(
                    f"{fam.value}: needs an exponent vector of length N={self.N}"
                )
            object.__setattr__(self, "exps", tuple(float(e) for e in self.exps))
            lo, hi, name = (0.0, 1.0, "m_i") if fam is Family.ANISO_PME else (1.0, 2.0, "p_i")
            for e in self.exps:
                if not lo < e < hi:
                    raise ValidationError(
                        f"{fam.value}: all {name} must lie in ({lo},{hi}), got {e}"
                    )
        else:
            forbid("exps", self.exps)

        if fam is Family.LOGDIFF and self.N != 2:
            raise ValidationError("logdiff is fixed to N=2")
        if fam is Family.TVF and self.N != 1:
            raise ValidationError("tvf is fixed to N=1")

    # -- convenience constructors -------------------------------------------------

    @staticmethod
    def he(N: int) -> "EquationSpec":
        return EquationSpec(Family.HE, N=N)

    @staticmethod
    def pme(m: float, N: int) -> "EquationSpec":
        return EquationSpec(Family.PME_FDE, N=N, m=m)

    @staticmethod
    def ple(p: float, N: int) -> "EquationSpec":
        return EquationSpec(Family.PLE, N=N, p=p)

    @staticmethod
    def fhe(s: float, N: int) -> "EquationSpec":
        return EquationSpec(Family.FHE, N=N, s=s)

    @staticmethod
    def fpme(m: float, s: float, N: int) -> "EquationSpec":
        return EquationSpec(Family.FPME, N=N, m=m, s=s)

    @staticmethod
    def fple(p: float, s: float, N: int) -> "EquationSpec":
        return EquationSpec(Family.FPLE, N=N, p=p, s=s)

    @staticmethod
    def logdiff() -> "EquationSpec":
        return EquationSpec(Family.LOGDIFF, N=2)

    @staticmethod
    def tvf() -> "EquationSpec":
        return EquationSpec(Family.TVF, N=1)

    @staticmethod
    def dnle(m: float, p: float, N: int) -> "EquationSpec":
        return EquationSpec(Family.DNLE, N=N, m=m, p=p)

    @staticmethod
    def aniso_pme(exps: Sequence[float], N: Optional[int] = None) -> "EquationSpec":
        exps = tuple(exps)
        return EquationSpec(Family.ANISO_PME, N=N or len(exps), exps=exps)

    @staticmethod
    def aniso_ple(exps: Sequence[float], N: Optional[int] = None) -> "EquationSpec":
        exps = tuple(exps)
        return EquationSpec(Family.ANISO_PLE, N=N or len(exps), exps=exps)

    def to_dict(self) -> dict:
        d = {"family": self.family.value, "N": self.N}
        for key in ("m", "p", "s"):
            v = getattr(self, key)
            if v is not None:
                d[key] = v
        if self.exps is not None:
            d["exps"] = list(self.exps)
        return d

    @staticmethod
    def from_dict(d: dict) -> "EquationSpec":
        try:
            fam = Family(d["family"])
        except (KeyError, ValueError):
            raise ValidationError(f"bad or missing family in {d!r}")
        known = {"family", "N", "m", "p", "s", "exps"}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown spec keys: {sorted(unknown)}")
        exps = d.get("exps")
        return EquationSpec(
            fam,
            N=d.get("N", 2 if fam is Family.LOGDIFF else 1),
            m=d.get("m"),
            p=d.get("p"),
            s=d.get("s"),
            exps=tuple(exps) if exps is not None else None,
        )
