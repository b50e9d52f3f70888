"""Closed-form 2-D constant-velocity solution for a point source.

The field solves ``u_tt - c^2 lap u = c^2 q(t) delta(x - xs)``, which is the
continuum limit of the forward operator fed with ``q / (hx*hy)`` on a node.
Per angular frequency the Green's function is ``-(i/4) H0^(2)(k r)``.

Evaluation uses a complex frequency ``w - i*sigma``: the source is damped by
``exp(-sigma t)`` before the FFT and the result is undamped afterwards, which
suppresses the periodic wrap-around of the discrete transform.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ParameterError
from .special import hankel2_0

__all__ = ["analytic_2d"]


def analytic_2d(velocity: float, wavelet, src_coord, rec_coords, dt: float, nt: int,
                pad: int = 4, decades: float = 10.0, discrete_time: bool = False) -> np.ndarray:
    """Traces (nrec, nt) at ``rec_coords`` for a source ``wavelet`` sampled every ``dt``.

    ``wavelet`` is either a callable of time or an array (zero-extended past its end).
    ``discrete_time`` replaces ``k = w/c`` by the dispersion relation of the
    second-order time stencil, isolating the spatial error of a simulation.
    """
    if not velocity > 0 or not dt > 0 or nt < 2:
        raise ParameterError("need velocity > 0, dt > 0 and nt >= 2")
    rec = np.atleast_2d(np.asarray(rec_coords, dtype=np.float64))
    r = np.sqrt(np.sum((rec - np.asarray(src_coord, dtype=np.float64)) ** 2, axis=1))
    if np.any(r <= 0):
        raise ConfigError("a receiver coincides with the source (r = 0 is singular)")
    n = int(pad) * nt
    t = np.arange(n) * dt
    if callable(wavelet):
        q = np.asarray(wavelet(t), dtype=np.float64)
    else:
        w = np.asarray(wavelet, dtype=np.float64).ravel()
        q = np.zeros(n)
        q[:min(n, w.size)] = w[:n]
    sigma = decades * np.log(10.0) / (n * dt)
    spec = np.fft.rfft(q * np.exp(-sigma * t))
    omega = 2 * np.pi * np.fft.rfftfreq(n, dt) - 1j * sigma
    if discrete_time:
        k = 2.0 / dt * np.sin(omega * dt / 2) / velocity
    else:
        k = omega / velocity
    out = np.empty((len(r), nt))
    for i, ri in enumerate(r):
        g = -0.25j * hankel2_0(k * ri)
        out[i] = (np.fft.irfft(g * spec, n) * np.exp(sigma * t))[:nt]
    return out
