"""Velocity models, absorbing layers and the explicit-scheme stability bound."""
from __future__ import annotations

import math

import numpy as np

from ..errors import ParameterError, StabilityError
from ..fdcoeff import centered_offsets, fd_weights
from ..symbolic.functions import Function, Grid

__all__ = ["SeismicModel", "build_damping", "critical_dt", "DAMPING_DECADES"]

# target amplitude reduction across the layer (ln of this sets eta_max)
DAMPING_DECADES = 1000.0


def _ramp(x, profile):
    if profile == "linear":
        return x
    if profile == "quadratic":
        return x * x
    if profile == "exponential":
        a = 3.0
        return np.expm1(a * x) / math.expm1(a)
    raise ParameterError(f"unknown damping profile {profile!r}")


def build_damping(grid: Grid, nbl: int, vmax: float = 1.0, profile: str = "quadratic"):
    """Damping coefficient over ``grid.shape``: zero inside, ramping up in the outer ``nbl`` cells.

    The per-axis ramps are summed so corners see the strongest damping.
    """
    nbl = int(nbl)
    if nbl < 0:
        raise ParameterError("nbl must be >= 0")
    if nbl and 2 * nbl >= min(grid.shape):
        raise ParameterError(f"nbl={nbl} too wide for grid {grid.shape}")
    eta = np.zeros(grid.shape)
    if nbl == 0:
        return eta
    eta_max = vmax * math.log(DAMPING_DECADES) / (nbl * min(grid.spacing))
    for axis, n in enumerate(grid.shape):
        i = np.arange(n, dtype=float)
        depth = np.maximum(nbl - i, 0) + np.maximum(i - (n - 1 - nbl), 0)
        prof = eta_max * _ramp(depth / nbl, profile)
        shape = [1] * grid.ndim
        shape[axis] = n
        eta = eta + prof.reshape(shape)
    return eta


def critical_dt(spacing, m_min: float, space_order: int, gamma: float = 1.0) -> float:
    """Largest stable step: gamma * min(h) * sqrt(min m) / sqrt(ndim * sum|w| / 2)."""
    w = fd_weights(2, centered_offsets(space_order)).weights
    wsum = float(sum(abs(x) for x in w))
    return gamma * min(spacing) * math.sqrt(m_min) / math.sqrt(len(spacing) * wsum / 2)


class SeismicModel:
    """Squared slowness and damping on a grid padded by ``nbl`` absorbing cells per side.

    ``origin`` and ``spacing`` describe the physical (unpadded) domain; all
    user-facing coordinates are physical.
    """

    def __init__(self, vp, spacing, origin=None, nbl: int = 0, space_order: int = 4,
                 profile: str = "quadratic", dtype=np.float64):
        vp = np.asarray(vp, dtype=np.float64)
        if np.any(~np.isfinite(vp)) or np.any(vp <= 0):
            raise ParameterError("velocities must be finite and positive")
        self.spacing = tuple(float(h) for h in spacing)
        if len(self.spacing) != vp.ndim:
            raise ParameterError("spacing must match the velocity dimensionality")
        self.origin = tuple(float(o) for o in (origin or (0.0,) * vp.ndim))
        self.nbl = nbl = int(nbl)
        self.space_order = int(space_order)
        self.profile = profile
        shape = tuple(s + 2 * nbl for s in vp.shape)
        gorigin = tuple(o - nbl * h for o, h in zip(self.origin, self.spacing))
        self.grid = Grid(shape, spacing=self.spacing, origin=gorigin, dtype=dtype)
        self.m = Function("m", self.grid, space_order=self.space_order)
        self.eta = Function("eta", self.grid, space_order=self.space_order)
        self.eta.interior[:] = build_damping(self.grid, nbl, vp.max(), profile)
        self.vp = vp

    @property
    def vp(self):
        return self._vp

    @vp.setter
    def vp(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != self.grid.ndim or np.any(v <= 0):
            raise ParameterError("velocities must be positive with the model's dimensionality")
        self._vp = v
        self.set_m(1.0 / np.pad(v, self.nbl, mode="edge") ** 2)

    @property
    def shape(self):
        return self._vp.shape

    def physical(self, arr):
        """View of the physical region of a grid-shaped array."""
        n = self.nbl
        return arr[tuple(slice(n, n + s) for s in self.shape)]

    def set_m(self, m_full):
        m_full = np.asarray(m_full, dtype=np.float64)
        if m_full.shape != self.grid.shape:
            raise ParameterError(f"m must have shape {self.grid.shape}")
        if np.any(~np.isfinite(m_full)) or np.any(m_full <= 0):
            raise ParameterError("squared slowness must be finite and positive")
        # the halo repeats edge values so m never reads as zero
        self.m.data[:] = np.pad(m_full, self.m.halo, mode="edge")

    @property
    def m_values(self):
        return np.array(self.m.interior)

    @property
    def critical_dt(self):
        return critical_dt(self.spacing, float(self.m_values.min()), self.space_order)

    def check_dt(self, dt: float):
        cdt = self.critical_dt
        if not dt > 0 or dt > cdt * (1 + 1e-12):
            raise StabilityError(f"dt={dt:g} violates the stability bound dt <= {cdt:g}")

    def physical_mask(self):
        mask = np.zeros(self.grid.shape, dtype=bool)
        self.physical(mask)[...] = True
        return mask
