"""Adaptive radial quadrature with explicit power-tail correction.

Integrals of radial profiles over R^N reduce to omega_N * int f(r) r^{N-1} dr.
Heavy power tails (the rule rather than the exception here) defeat naive
truncation, so the far field is closed with the known decay exponent:
beyond the quadrature horizon S the integrand is extrapolated as
f(S) (r/S)^{-decay}, whose radial integral is exact.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import DivergentMass, NumericalError
from .grids import sphere_area


def radial_integral(
    f: Callable[[np.ndarray], np.ndarray],
    N: int,
    *,
    r_edge: Optional[float] = None,
    decay: Optional[float] = None,
    inner: float = 0.0,
    rtol: float = 1e-11,
) -> float:
    """Integral of f over R^N (restricted to r >= inner) in the radial measure.

    f must accept numpy arrays of radii.
    r_edge: known support edge for compactly supported profiles.
    decay:  far-field power exponent d with f ~ C r^{-d}; requires d > N for
            convergence, otherwise DivergentMass.  Omit for rapidly decaying
            profiles (the horizon is grown until the remainder is negligible).
    """
    w = sphere_area(N)

    def g(r):
        r = np.asarray(r, dtype=float)
        return f(r) * r ** (N - 1)

    def point(r):
        return float(np.asarray(f(np.array([r], dtype=float)))[0])

    if r_edge is not None:
        if r_edge <= inner:
            return 0.0
        val, _ = integrate.quad(g, inner, r_edge, limit=200, epsabs=0.0, epsrel=rtol)
        return w * val

    if decay is not None and decay <= N:
        raise DivergentMass(f"tail exponent {decay} <= N={N}: integral diverges")

    S = max(8.0, 4 * inner + 4.0)
    prev = None
    for _ in range(60):
        val, _ = integrate.quad(g, inner, S, limit=400, epsabs=0.0, epsrel=rtol)
        if decay is not None:
            tail = point(S) * S ** N / (decay - N)
            total = w * (val + tail)
            if prev is not None and abs(total - prev) <= 10 * rtol * max(abs(total), 1e-300):
                return total
        else:
            total = w * val
            remainder = w * abs(point(S)) * S ** N
            if prev is not None and remainder <= rtol * max(abs(total), 1e-300):
                return total
        prev = total
        S *= 2.0
    raise NumericalError("radial quadrature did not stabilize; check the decay exponent")
