"""Zeroth-order Bessel and Hankel functions for complex arguments.

Small arguments use the ascending power series summed in extended precision
(the alternating terms peak near e^|z| before cancelling); large arguments use
the Hankel asymptotic expansion truncated at its smallest term.
"""
from __future__ import annotations

import numpy as np

from ..errors import ParameterError

__all__ = ["j0", "y0", "hankel2_0", "SWITCH"]

SWITCH = 17.0
EULER_GAMMA = 0.57721566490153286060651209008240243


def _series(z):
    """(J0, Y0) by power series; z is a 1-D complex array with 0 < |z| <= SWITCH."""
    zl = z.astype(np.clongdouble)
    q = -(zl * zl) / 4
    term = np.ones_like(zl)
    j = np.ones_like(zl)
    s = np.zeros_like(zl)       # sum of H_k * term_k for the Y0 tail
    harm = np.longdouble(0)
    for k in range(1, 80):
        term = term * q / (k * k)
        harm += np.longdouble(1) / k
        j += term
        s += harm * term
        if np.all(np.abs(term) * harm < 1e-22 * np.maximum(np.abs(j), 1e-300)):
            break
    two_pi = 2 / np.pi
    y = two_pi * ((np.log(zl / 2) + EULER_GAMMA) * j - s)
    return j.astype(np.complex128), y.astype(np.complex128)


def _asymptotic_h2(z):
    """H0^(2) by the large-argument expansion, truncated at its smallest term."""
    total = np.ones_like(z)
    term = np.ones_like(z)
    done = np.zeros(z.shape, dtype=bool)
    prev = np.abs(term)
    for k in range(1, 60):
        # a_k(0) ratio: -(2k-1)^2 / (8k); the H2 branch carries (-i)^k / z^k
        term = term * (-(2 * k - 1) ** 2 / (8.0 * k)) * (-1j) / z
        mag = np.abs(term)
        grow = mag > prev
        done |= grow
        total = np.where(done, total, total + term)
        prev = mag
        if np.all(done | (mag < 1e-17)):
            break
    return np.sqrt(2 / (np.pi * z)) * np.exp(-1j * (z - np.pi / 4)) * total


def _asymptotic_j_y(z):
    h2 = _asymptotic_h2(z)
    # H1(z) = conj(H2(conj z)) for the principal branch
    h1 = np.conj(_asymptotic_h2(np.conj(z)))
    return (h1 + h2) / 2, (h1 - h2) / 2j


def _eval(z):
    z = np.asarray(z, dtype=np.complex128)
    flat = z.ravel()
    if np.any(flat == 0):
        raise ParameterError("Y0 and H0 are singular at z = 0")
    if np.any((flat.real < 0) & (flat.imag == 0)):
        raise ParameterError("negative real arguments lie on the branch cut")
    j = np.empty_like(flat)
    y = np.empty_like(flat)
    small = np.abs(flat) <= SWITCH
    if small.any():
        j[small], y[small] = _series(flat[small])
    if (~small).any():
        j[~small], y[~small] = _asymptotic_j_y(flat[~small])
    return j.reshape(z.shape), y.reshape(z.shape)


def j0(z):
    """Bessel function of the first kind, order zero."""
    z = np.asarray(z, dtype=np.complex128)
    if np.any(z == 0):
        out = np.ones_like(z)
        nz = z != 0
        if nz.any():
            out[nz] = _eval(z[nz])[0]
        return out
    return _eval(z)[0]


def y0(z):
    """Bessel function of the second kind, order zero (singular at 0)."""
    return _eval(z)[1]


def hankel2_0(z):
    """Hankel function of the second kind, order zero: J0 - i Y0."""
    z = np.asarray(z, dtype=np.complex128)
    flat = z.ravel()
    if np.any(flat == 0):
        raise ParameterError("H0 is singular at z = 0")
    if np.any((flat.real < 0) & (flat.imag == 0)):
        raise ParameterError("negative real arguments lie on the branch cut")
    out = np.empty_like(flat)
    small = np.abs(flat) <= SWITCH
    if small.any():
        jj, yy = _series(flat[small])
        out[small] = jj - 1j * yy
    if (~small).any():
        out[~small] = _asymptotic_h2(flat[~small])
    return out.reshape(z.shape)
