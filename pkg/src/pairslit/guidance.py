"""Pilot-wave guidance velocities for the particle pair.

The two y-velocities follow from the phase gradient of the pair wave
function, v_i = (hbar/m) Im(d_{y_i} psi / psi).  Because the wave function
factorizes into one-particle packet sums, each velocity depends only on its
own coordinate; the slit-pair expansion of the gradient is evaluated
analytically (no numerical differentiation on the production path).

Velocities diverge at nodes of the wave function, so every evaluation is
guarded by a node threshold scaled to the instantaneous amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .wavefunction import (
    PhysicalParams,
    overlap_normalization,
    sigma_t,
    slit_packet,
)

__all__ = [
    "PairState",
    "VelocityPair",
    "NodeProximity",
    "node_threshold",
    "velocity",
    "velocity_field",
    "com_velocity",
    "com_velocity_parts",
    "com_position_closed_form",
]

# |psi| threshold, as a fraction of the instantaneous two-particle amplitude
# scale |a|^2 (2 pi |sigma_t|^2)^(-1/2); below it the velocity is unreliable.
NODE_EPS_FACTOR = 1e-12


@dataclass(frozen=True)
class PairState:
    """Configuration-space point (y1, y2) at time t; x-motion is uniform and implicit."""

    y1: float
    y2: float
    t: float = 0.0

    def __post_init__(self) -> None:
        if not (self.t >= 0 and math.isfinite(self.t)):
            raise ValueError("t must be >= 0 and finite")
        if not (math.isfinite(self.y1) and math.isfinite(self.y2)):
            raise ValueError("coordinates must be finite")


class VelocityPair(NamedTuple):
    v1: float
    v2: float


class NodeProximity(RuntimeError):
    """Raised when |psi| at the requested state is below the node threshold."""


def node_threshold(params: PhysicalParams, t) -> float:
    """Node guard for |psi|: NODE_EPS_FACTOR times the pair amplitude scale at time t."""
    mod2 = np.abs(sigma_t(params, t)) ** 2
    return NODE_EPS_FACTOR * abs(params.amplitude) ** 2 / np.sqrt(2.0 * np.pi * mod2)


def velocity_field(params: PhysicalParams, y, t, with_modulus: bool = False):
    """Vectorized guidance velocity for one particle coordinate.

    Evaluates (hbar/m) Im[(A' + B')/(A + B)] elementwise over broadcast
    (y, t), using the analytic per-packet log-derivatives
        A'/A = -(y - c)/(2 sigma0 sigma_t) + i ky
        B'/B = -(y + c)/(2 sigma0 sigma_t) - i ky
    with c = slit_offset + u_y t.  The prefactor and the common x/energy
    phase cancel in the ratio, so only the packet envelopes and slit phases
    are exponentiated.  Does not raise at nodes; callers that need the node
    guard ask for ``with_modulus=True`` and compare |A+B| against their
    threshold.
    """
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    st = sigma_t(params, t)
    c = params.slit_offset + params.group_velocity_y * t
    inv = 1.0 / (2.0 * params.sigma0 * st)
    ky = params.ky
    half_drift = params.slit_offset + 0.5 * params.group_velocity_y * t
    a_red = np.exp(-((y - c) ** 2) * (0.5 * inv) + 1j * (ky * (y - half_drift)))
    b_red = np.exp(-((y + c) ** 2) * (0.5 * inv) - 1j * (ky * (y + half_drift)))
    ga = -(y - c) * inv + 1j * ky
    gb = -(y + c) * inv - 1j * ky
    phi_red = a_red + b_red
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (params.hbar / params.mass) * np.imag((ga * a_red + gb * b_red) / phi_red)
    if with_modulus:
        scale = abs(params.amplitude) * (2.0 * np.pi * np.abs(st) ** 2) ** -0.25
        return v, scale * np.abs(phi_red)
    return v


def _check_node(params: PhysicalParams, state: PairState, mod1: float, mod2: float) -> None:
    total = overlap_normalization(params) * mod1 * mod2
    if not (total > node_threshold(params, state.t)):
        raise NodeProximity(
            f"|psi| = {total:.3e} at (y1={state.y1}, y2={state.y2}, t={state.t}) "
            "is below the node threshold"
        )


def velocity(params: PhysicalParams, state: PairState) -> VelocityPair:
    """Guidance velocities (dy1/dt, dy2/dt) at a configuration-space point.

    Raises
    ------
    NodeProximity
        If |psi| at the state is below ``node_threshold``; integrators treat
        this as a shrink-step / reject signal.
    """
    v1, m1 = velocity_field(params, state.y1, state.t, with_modulus=True)
    v2, m2 = velocity_field(params, state.y2, state.t, with_modulus=True)
    _check_node(params, state, float(m1), float(m2))
    return VelocityPair(float(v1), float(v2))


def com_velocity(params: PhysicalParams, state: PairState) -> float:
    """Velocity of the pair's center of mass, (v1 + v2) / 2."""
    v = velocity(params, state)
    return 0.5 * (v.v1 + v.v2)


def com_velocity_parts(params: PhysicalParams, state: PairState) -> tuple[float, float]:
    """Decompose the center-of-mass velocity into leading and residual terms.

    The leading term is the packet-spreading drift
        s^2 t ((y1 + y2)/2) / (1 + (s t)^2),
    and the residual collects the slit-asymmetric contribution, proportional
    to (A1 A2 - B1 B2).  The sum equals ``com_velocity`` identically; the
    residual is negligible when slit_offset << sigma0, which is what makes
    the closed-form center-of-mass path a good approximation.
    """
    s = params.spreading_rate
    t = state.t
    leading = (s * s * t) * 0.5 * (state.y1 + state.y2) / (1.0 + (s * t) ** 2)

    st = complex(sigma_t(params, t))
    a1 = complex(slit_packet(params, "A", 0.0, state.y1, t))
    b1 = complex(slit_packet(params, "B", 0.0, state.y1, t))
    a2 = complex(slit_packet(params, "A", 0.0, state.y2, t))
    b2 = complex(slit_packet(params, "B", 0.0, state.y2, t))
    _check_node(params, state, abs(a1 + b1), abs(a2 + b2))
    c = params.slit_offset + params.group_velocity_y * t
    coeff = c / (params.sigma0 * st) + 2j * params.ky
    ratio = (a1 * a2 - b1 * b2) / ((a1 + b1) * (a2 + b2))
    residual = (params.hbar / (2.0 * params.mass)) * (coeff * ratio).imag
    return float(leading), float(residual)


def com_position_closed_form(params: PhysicalParams, y0: float, t) -> float:
    """Closed-form center-of-mass path y0 * sqrt(1 + (s t)^2).

    Solves the leading-term equation of motion exactly; a center of mass
    starting on the axis stays on the axis for all times.
    """
    st = params.spreading_rate * np.asarray(t, dtype=float)
    return y0 * np.sqrt(1.0 + st * st)
