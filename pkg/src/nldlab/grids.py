"""Spatial discretizations: radial finite-volume grids and sampled fields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in R^N (2 for N=1, 2*pi, 4*pi, ...)."""
    return 2.0 * math.pi ** (N / 2) / math.gamma(N / 2)


@dataclass(frozen=True)
class RadialGrid:
    """Cell-centered radial grid on the ball of radius R in R^N.

    `r_faces` holds the cell interfaces, r_faces[0] = 0 and r_faces[-1] = R;
    cell volumes carry the N-dimensional radial measure omega_N r^{N-1} dr.
    """

    N: int
    R: float
    r_faces: np.ndarray

    def __post_init__(self):
        if self.N < 1 or int(self.N) != self.N:
            raise ValidationError(f"N must be an integer >= 1, got {self.N}")
        rf = np.asarray(self.r_faces, dtype=float)
        if rf.ndim != 1 or rf.size < 2:
            raise ValidationError("need at least two faces")
        if rf[0] != 0.0 or abs(rf[-1] - self.R) > 1e-12 * max(1.0, self.R):
            raise ValidationError("faces must run from 0 to R")
        if np.any(np.diff(rf) <= 0):
            raise ValidationError("faces must be strictly increasing")
        object.__setattr__(self, "r_faces", rf)

    @staticmethod
    def uniform(N: int, R: float, cells: int) -> "RadialGrid":
        if cells < 1:
            raise ValidationError("need at least one cell")
        return RadialGrid(N, float(R), np.linspace(0.0, float(R), cells + 1))

    @property
    def cells(self) -> int:
        return self.r_faces.size - 1

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.r_faces[:-1] + self.r_faces[1:])

    @property
    def volumes(self) -> np.ndarray:
        """Cell volumes omega_N (r_+^N - r_-^N) / N."""
        rf = self.r_faces
        return sphere_area(self.N) * (rf[1:] ** self.N - rf[:-1] ** self.N) / self.N

    @property
    def face_areas(self) -> np.ndarray:
        return sphere_area(self.N) * self.r_faces ** (self.N - 1)

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.r_faces)


@dataclass
class Field:
    """Sampled solution values (cell averages or node samples) at one time."""

    values: np.ndarray
    time: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("field values must be finite")

    def copy(self) -> "Field":
        return Field(self.values.copy(), self.time)
