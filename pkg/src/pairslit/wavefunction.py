"""Wave-function model for a pair of identical particles behind a two-slit screen.

Each slit releases a Gaussian packet at t = 0 (soft slit edges, so no Fresnel
fringing); the packets drift with group velocity (u_x, +/-u_y) and spread
through the complex width sigma_t.  The symmetric pair wave function is the
normalized product of the two one-particle packet sums, which expands into the
four slit-pair terms.

All evaluators accept scalars or numpy arrays and broadcast; they are pure
functions and safe to call from any thread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PhysicalParams",
    "sigma_t",
    "overlap_normalization",
    "slit_packet",
    "packet_sum",
    "pair_wavefunction",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Physical configuration of the source, slits and particles.

    Natural units hbar = mass = 1 by default; every constant stays an explicit
    field so dimensional runs remain possible.

    Attributes
    ----------
    sigma0 : float
        Half-width of each slit; initial width of the emerging packets.
    slit_offset : float
        Slit centers sit at y = +slit_offset (slit A) and y = -slit_offset (B).
    kx, ky : float
        Wavenumbers of the incident plane wave.  The usual far-source setup
        has ky ~ 0.
    amplitude : complex
        Overall scale of the one-particle packets.  The default 1 makes the
        pair wave function unit-normalized at t = 0 for ky = 0.
    """

    sigma0: float
    slit_offset: float
    kx: float
    ky: float = 0.0
    hbar: float = 1.0
    mass: float = 1.0
    amplitude: complex = 1.0 + 0.0j

    def __post_init__(self) -> None:
        if not (self.sigma0 > 0 and math.isfinite(self.sigma0)):
            raise ValueError("sigma0 must be positive and finite")
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise ValueError("mass must be positive and finite")
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise ValueError("hbar must be positive and finite")
        if self.slit_offset < 0 or not math.isfinite(self.slit_offset):
            raise ValueError("slit_offset must be >= 0 and finite")

    @property
    def group_velocity_x(self) -> float:
        return self.hbar * self.kx / self.mass

    @property
    def group_velocity_y(self) -> float:
        return self.hbar * self.ky / self.mass

    @property
    def kinetic_energy_x(self) -> float:
        return 0.5 * self.mass * self.group_velocity_x**2

    @property
    def wavelength(self) -> float:
        if self.kx <= 0:
            raise ValueError("wavelength requires kx > 0")
        return 2.0 * math.pi / self.kx

    @property
    def spreading_rate(self) -> float:
        """Inverse time scale s of packet spreading: |sigma_t|^2 = sigma0^2 (1 + (s t)^2)."""
        return self.hbar / (2.0 * self.mass * self.sigma0**2)


def sigma_t(params: PhysicalParams, t):
    """Complex packet width sigma0 * (1 + i s t); equals sigma0 exactly at t = 0."""
    return params.sigma0 * (1.0 + 1j * params.spreading_rate * np.asarray(t))


def overlap_normalization(params: PhysicalParams) -> float:
    """Normalization constant 1 / [2 (1 + exp(-slit_offset^2 / 2 sigma0^2))].

    Makes the pair wave function a unit-norm state at t = 0 when ky = 0 and
    amplitude = 1.
    """
    ratio = params.slit_offset / params.sigma0
    return 1.0 / (2.0 * (1.0 + math.exp(-0.5 * ratio * ratio)))


def slit_packet(params: PhysicalParams, slit: str, x, y, t):
    """Time-evolved Gaussian packet emerging from one slit.

    Parameters
    ----------
    slit : {"A", "B"}
        "A" is the slit at +slit_offset (drifting toward +y for ky > 0),
        "B" the mirror one at -slit_offset.

    Returns the complex amplitude; broadcasts over array inputs.  The
    (2 pi sigma_t^2)^(-1/4) prefactor uses the principal branch, which is
    continuous in t from the real positive value at t = 0.
    """
    if slit == "A":
        sign = 1.0
    elif slit == "B":
        sign = -1.0
    else:
        raise ValueError(f"slit must be 'A' or 'B', got {slit!r}")

    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    st = sigma_t(params, t)
    uy = params.group_velocity_y
    center = sign * (params.slit_offset + uy * t)
    prefactor = params.amplitude * (2.0 * np.pi * st**2) ** (-0.25)
    envelope = np.exp(-((y - center) ** 2) / (4.0 * params.sigma0 * st))
    phase = np.exp(
        1j
        * (
            params.kx * np.asarray(x, dtype=float)
            + sign * params.ky * (y - sign * (params.slit_offset + 0.5 * uy * t))
            - params.kinetic_energy_x * t / params.hbar
        )
    )
    return prefactor * envelope * phase


def packet_sum(params: PhysicalParams, x, y, t):
    """One-particle amplitude behind the screen: sum of the two slit packets."""
    return slit_packet(params, "A", x, y, t) + slit_packet(params, "B", x, y, t)


def pair_wavefunction(params: PhysicalParams, x1, y1, x2, y2, t):
    """Symmetric two-particle amplitude.

    Evaluated in the factorized form N * (A1 + B1) * (A2 + B2); its expansion
    reproduces the four slit-pair product terms (AB + BA + AA + BB) pointwise.
    """
    return (
        overlap_normalization(params)
        * packet_sum(params, x1, y1, t)
        * packet_sum(params, x2, y2, t)
    )
