"""Berry connection, curvature and Chern numbers of the principal bands.

The band bundle over the sphere is spanned by psi_m(n) = u0(n)^dagger e_m
with u0 the ZYZ reference unitary of the model.  In this gauge the
connection has A_theta = 0 and a closed-form A_phi depending only on the
tilted polar angle; the curvature integrates to the Chern number, which
jumps as the coupling crosses 1/2.  A gauge-invariant plaquette method on
the frames provides an exactly integer cross-check.
"""

from __future__ import annotations

from math import pi

import numpy as np

from .model import ModelParams, gap_N, principal_bands, tilt_angles

__all__ = [
    "berry_connection",
    "berry_curvature",
    "chern_analytic",
    "chern_plaquette",
]


def berry_connection(params: ModelParams, m: float, theta):
    """(A_theta, A_phi) of band m in the reference gauge.

    A_theta = 0 identically; A_phi(theta) = -m (1 - cos theta') with theta'
    the tilted polar angle.  A_phi here multiplies d phi (not normalized by
    sin theta).
    """
    theta = np.asarray(theta, dtype=float)
    ct, _, _ = tilt_angles(theta, params.lam)
    return np.zeros_like(theta), -float(m) * (1.0 - ct)


def berry_curvature(params: ModelParams, m: float, theta):
    """F_theta_phi(theta) = d A_phi / d theta = -m sin(theta') theta''."""
    theta = np.asarray(theta, dtype=float)
    _, st, dtp = tilt_angles(theta, params.lam)
    return -float(m) * st * dtp


def chern_analytic(params: ModelParams, m: float) -> int:
    """Chern number of band m: 0 for lam < 1/2, -2m for lam > 1/2."""
    if abs(params.lam - 0.5) < 1e-15:
        raise ValueError("Chern number undefined at the gap closing lam = 1/2")
    if params.lam < 0.5:
        return 0
    return int(round(-2 * float(m)))


def chern_plaquette(params: ModelParams, m: float, n_theta: int = 24, n_phi: int = 24) -> int:
    """Lattice Chern number from plaquette phases of the band frames.

    Includes the pole rows; any pointwise frame gauge gives the same
    integer.  Raises at lam = 1/2 where the band touches its neighbour.
    """
    lam = params.lam
    theta = np.linspace(0.0, pi, n_theta + 1)
    phi = 2 * pi * np.arange(n_phi) / n_phi
    if np.min(gap_N(theta, lam)) < 1e-12:
        raise ValueError("band degeneracy on the grid; Chern number undefined")
    th2, ph2 = np.meshgrid(theta, phi, indexing="ij")
    bd = principal_bands(params, th2, ph2, m)
    psi = bd.frame  # (n_theta+1, n_phi, d_s)

    def link(a, b):
        z = np.sum(a.conj() * b, axis=-1)
        return z / np.abs(z)

    u_phi = link(psi, np.roll(psi, -1, axis=1))  # (theta rows, phi)
    u_theta = link(psi[:-1], psi[1:])  # (theta links, phi)
    plaq = (
        u_phi[:-1]
        * u_theta[:, (np.arange(n_phi) + 1) % n_phi]
        / (u_phi[1:] * u_theta)
    )
    total = float(np.sum(np.angle(plaq))) / (2 * pi)
    c = int(round(total))
    if abs(total - c) > 1e-8:
        raise ArithmeticError(f"plaquette sum {total} not an integer")
    return c
