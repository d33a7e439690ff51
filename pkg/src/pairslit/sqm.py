"""Standard-quantum-mechanics observables on the detection screen.

Detection statistics come straight from |psi|^2: the joint density, the
probability of simultaneous detection in a pair of detector bins of size
``bin_delta`` (a 2-D quadrature of the joint density), one-particle
marginals, the fringe-spacing scale, and two asymmetry measures used to
contrast against the trajectory ensembles:

* mirror-coincidence complement: the probability that a detected pair
  does NOT land in mirror-image detector bins, computed bin-by-bin from the
  joint detection probability over the screen grid;
* center-of-mass band exceedance: joint-density mass with |y1 + y2|/2
  beyond a given half-width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .wavefunction import (
    PhysicalParams,
    overlap_normalization,
    packet_sum,
    pair_wavefunction,
    sigma_t,
)

__all__ = [
    "ScreenConfig",
    "DegenerateGeometry",
    "FringeSpacing",
    "joint_density",
    "joint_detection_probability",
    "total_probability_mass",
    "marginal_pdf",
    "marginal_bin_masses",
    "joint_bin_mass_grid",
    "fringe_spacing",
    "mirror_detection_probability",
    "asymmetric_detection_probability",
    "com_band_exceedance",
]

QUAD_TOL = 1e-8  # absolute tolerance per detector bin


class DegenerateGeometry(ValueError):
    """Raised when a geometric quantity is undefined (e.g. fringe spacing at zero slit offset)."""


@dataclass(frozen=True)
class ScreenConfig:
    """Detector geometry.

    Attributes
    ----------
    distance : float
        Screen position D along x; both particles reach it at
        t = D / u_x.
    bin_delta : float
        Detector size for joint detection probabilities (small).
    y_min, y_max : float
        Extent of the analysis window on the screen.
    n_bins : int
        Number of histogram bins over [y_min, y_max] for ensemble statistics
        (independent of the detector size ``bin_delta``).
    """

    distance: float
    bin_delta: float
    y_min: float
    y_max: float
    n_bins: int = 50

    def __post_init__(self) -> None:
        if not (self.bin_delta > 0):
            raise ValueError("bin_delta must be > 0")
        if not (self.y_min < self.y_max):
            raise ValueError("y_min must be < y_max")
        if self.n_bins < 1:
            raise ValueError("n_bins must be >= 1")
        if not (self.distance > 0):
            raise ValueError("distance must be > 0")

    def time_of_flight(self, params: PhysicalParams) -> float:
        ux = params.group_velocity_x
        if ux <= 0:
            raise ValueError("time of flight requires kx > 0")
        return self.distance / ux

    def histogram_edges(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.n_bins + 1)

    def detector_edges(self) -> np.ndarray:
        """Detector-bin edges at integer multiples of bin_delta covering the window.

        The grid is symmetric about y = 0 so that the mirror image of every
        bin is again a bin of the grid.
        """
        m = int(math.ceil(max(abs(self.y_min), abs(self.y_max)) / self.bin_delta))
        return self.bin_delta * np.arange(-m, m + 1)


def default_screen(params: PhysicalParams, distance: float, bin_delta: float,
                   n_bins: int = 50, extent_sigmas: float = 8.0) -> ScreenConfig:
    """Screen spanning +/- extent_sigmas * |sigma_T| around the axis."""
    t = distance / (params.hbar * params.kx / params.mass)
    half = extent_sigmas * abs(complex(sigma_t(params, t)))
    return ScreenConfig(distance=distance, bin_delta=bin_delta,
                        y_min=-half, y_max=half, n_bins=n_bins)


def joint_density(params: PhysicalParams, y1, y2, t):
    """|psi(y1, y2; t)|^2.  The common x-phase cancels, so x is fixed at 0."""
    return np.abs(pair_wavefunction(params, 0.0, y1, 0.0, y2, t)) ** 2


@lru_cache(maxsize=8)
def _gl_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _panel_points(a: float, b: float, panels: int, order: int = 16):
    """Gauss-Legendre nodes/weights for `panels` equal panels of [a, b]."""
    x, w = _gl_nodes(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return pts, wts


def _tensor_quad(f: Callable, a1: float, b1: float, a2: float, b2: float,
                 tol: float = QUAD_TOL, max_panels: int = 64) -> float:
    """2-D quadrature by tensor Gauss-Legendre with panel-doubling refinement.

    Doubles the panel count per axis until successive estimates agree within
    ``tol`` (absolute, with a matching relative guard).
    """
    prev = None
    panels = 1
    while True:
        p1, w1 = _panel_points(a1, b1, panels)
        p2, w2 = _panel_points(a2, b2, panels)
        vals = f(p1[:, None], p2[None, :])
        est = float(w1 @ vals @ w2)
        if prev is not None and abs(est - prev) <= max(tol, tol * abs(est)):
            return est
        if panels >= max_panels:
            return est
        prev = est
        panels *= 2


def joint_detection_probability(params: PhysicalParams, screen: ScreenConfig,
                                q1: float, q2: float, tol: float = QUAD_TOL) -> float:
    """Probability of simultaneous detection in bins [q1, q1+delta] x [q2, q2+delta].

    Deterministic 2-D quadrature of the joint density at the screen time
    T = distance / u_x, to absolute tolerance ``tol`` per bin.
    """
    t = screen.time_of_flight(params)
    d = screen.bin_delta
    return _tensor_quad(
        lambda u, v: joint_density(params, u, v, t), q1, q1 + d, q2, q2 + d, tol=tol
    )


def total_probability_mass(params: PhysicalParams, t: float,
                           half_width: float | None = None) -> float:
    """Integral of the joint density over the (y1, y2) plane at time t.

    The window defaults to +/- 10 |sigma_t|, where the Gaussian tails are far
    below quadrature tolerance.
    """
    if half_width is None:
        half_width = params.slit_offset + 10.0 * abs(complex(sigma_t(params, t)))
    return _tensor_quad(
        lambda u, v: joint_density(params, u, v, t),
        -half_width, half_width, -half_width, half_width,
    )


def marginal_pdf(params: PhysicalParams, y, t):
    """One-particle detection density N |A + B|^2 (the y2-integrated joint density).

    Exactly normalized for ky = 0 and amplitude 1.
    """
    return overlap_normalization(params) * np.abs(packet_sum(params, 0.0, y, t)) ** 2


def marginal_bin_masses(params: PhysicalParams, edges: np.ndarray, t: float,
                        order: int = 24) -> np.ndarray:
    """Probability mass of the one-particle marginal in each [edges[i], edges[i+1]]."""
    edges = np.asarray(edges, dtype=float)
    x, w = _gl_nodes(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = mid[:, None] + half[:, None] * x[None, :]
    vals = marginal_pdf(params, pts, t)
    return (vals * w[None, :]).sum(axis=1) * half


def joint_bin_mass_grid(params: PhysicalParams, edges: np.ndarray, t: float) -> np.ndarray:
    """Matrix of joint-density masses over the tensor grid edges x edges.

    Uses the factorized structure of the pair wave function, so entry (i, j)
    equals the 2-D quadrature of |psi|^2 over bin_i x bin_j.
    """
    masses = marginal_bin_masses(params, edges, t)
    return np.outer(masses, masses)


class FringeSpacing(NamedTuple):
    """Fringe-spacing scale in its two equivalent forms.

    ``geometric`` = wavelength * distance / (2 slit_offset); ``kinematic`` =
    pi hbar T / (slit_offset * mass) with T the time of flight.  They are
    equal exactly when T = distance / u_x.
    """

    geometric: float
    kinematic: float


def fringe_spacing(params: PhysicalParams, screen: ScreenConfig) -> FringeSpacing:
    """Distance between neighboring interference maxima in the far field."""
    if params.slit_offset == 0:
        raise DegenerateGeometry("fringe spacing is undefined for slit_offset = 0")
    lam = params.wavelength
    geometric = lam * screen.distance / (2.0 * params.slit_offset)
    t = screen.time_of_flight(params)
    kinematic = math.pi * params.hbar * t / (params.slit_offset * params.mass)
    return FringeSpacing(geometric, kinematic)


def mirror_detection_probability(params: PhysicalParams, screen: ScreenConfig) -> float:
    """Probability that the two detections land in mirror-image bins.

    Sums the joint detection probability over all pairs (bin, mirror(bin))
    of the symmetric detector grid.
    """
    edges = screen.detector_edges()
    t = screen.time_of_flight(params)
    # Factorized bins: P(bin_i, bin_j) = m_i * m_j with m the marginal bin
    # masses, which matches the per-bin 2-D quadrature to QUAD_TOL.  The
    # mirror of [e_k, e_{k+1}] is [-e_{k+1}, -e_k], i.e. bin (n-1-k).
    masses = marginal_bin_masses(params, edges, t)
    return float(np.sum(masses * masses[::-1]))


def asymmetric_detection_probability(params: PhysicalParams, screen: ScreenConfig) -> float:
    """Probability of a joint detection in non-mirror bins of the screen grid.

    This is the bin-level asymmetry measure: 1 minus the mirror-coincidence
    probability.  It stays far from zero even when the center-of-mass spread
    is small compared to the fringe spacing, because landing in the one
    mirror bin out of many is itself unlikely.
    """
    return 1.0 - mirror_detection_probability(params, screen)


def _com_pdf(params: PhysicalParams, c: np.ndarray, t: float, order: int = 64) -> np.ndarray:
    """Density of the center of mass (y1 + y2)/2 at time t.

    f(c) = 2 * integral g(y) g(2c - y) dy with g the one-particle marginal.
    """
    half_extent = params.slit_offset + 8.0 * abs(complex(sigma_t(params, t)))
    # integrate over y in panels spanning the marginal's support
    pts, wts = _panel_points(-half_extent, half_extent, panels=8, order=order)
    g_y = marginal_pdf(params, pts, t)
    g_ref = marginal_pdf(params, 2.0 * np.asarray(c)[:, None] - pts[None, :], t)
    return 2.0 * (g_ref * (g_y * wts)[None, :]).sum(axis=1)


def com_band_exceedance(params: PhysicalParams, t: float, half_width: float) -> float:
    """Joint-density mass with |y1 + y2| / 2 beyond ``half_width``.

    This is the center-of-mass reading of "asymmetric detection": how much
    probability lies off the mirror line y1 = -y2 beyond the band.  The value
    underflows gradually (it stays representable down to ~1e-300), so deep
    tails still come out strictly positive.
    """
    if half_width < 0:
        raise ValueError("half_width must be >= 0")
    sig_com = abs(complex(sigma_t(params, t))) / math.sqrt(2.0)
    upper = half_width + 12.0 * sig_com + params.slit_offset
    mass = 0.0
    for lo, hi in ((half_width, upper), (-upper, -half_width)):
        pts, wts = _panel_points(lo, hi, panels=16, order=32)
        mass += float(_com_pdf(params, pts, t) @ wts)
    return mass
