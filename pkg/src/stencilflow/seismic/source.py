"""Source wavelets and acquisition geometry."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..sparse import SparseFunction

__all__ = ["ricker", "AcquisitionGeometry"]


def ricker(f0: float, t, delay: float | None = None) -> np.ndarray:
    """Ricker wavelet with unit peak at ``delay`` (default 1/f0)."""
    if not f0 > 0:
        raise ParameterError("peak frequency must be positive")
    delay = 1.0 / f0 if delay is None else float(delay)
    a = (math.pi * f0 * (np.asarray(t, dtype=np.float64) - delay)) ** 2
    return (1 - 2 * a) * np.exp(-a)


@dataclass
class AcquisitionGeometry:
    """Sources and receivers in physical coordinates plus the time axis.

    ``src_coords`` and ``rec_coords`` are (npoints, ndim) arrays.
    """

    src_coords: np.ndarray
    rec_coords: np.ndarray
    t0: float
    tn: float
    dt: float
    f0: float = 10.0
    delay: float | None = None

    def __post_init__(self):
        self.src_coords = np.atleast_2d(np.asarray(self.src_coords, dtype=np.float64))
        self.rec_coords = np.atleast_2d(np.asarray(self.rec_coords, dtype=np.float64))
        if not (self.dt > 0 and self.tn > self.t0):
            raise ParameterError("need dt > 0 and tn > t0")

    @property
    def nt(self) -> int:
        return int(math.floor((self.tn - self.t0) / self.dt + 1e-9)) + 1

    @property
    def time_axis(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)

    def wavelet(self) -> np.ndarray:
        return ricker(self.f0, self.time_axis - self.t0, self.delay)

    def make_src(self, grid, name="src", wavelet=True) -> SparseFunction:
        s = SparseFunction(name, grid, len(self.src_coords), self.nt, self.src_coords)
        if wavelet:
            s.data[:] = self.wavelet()[None, :]
        return s

    def make_rec(self, grid, name="rec") -> SparseFunction:
        return SparseFunction(name, grid, len(self.rec_coords), self.nt, self.rec_coords)

    def with_sources(self, src_coords) -> "AcquisitionGeometry":
        return AcquisitionGeometry(src_coords, self.rec_coords, self.t0, self.tn, self.dt,
                                   self.f0, self.delay)
