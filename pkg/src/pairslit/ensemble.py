"""Quantum-equilibrium sampling and trajectory integration for pair ensembles.

Initial pair positions are drawn from the t = 0 joint density.  Because the
pair wave function factorizes, the two coordinates are i.i.d. under the
one-particle density, which is tabulated once and inverted (inverse-CDF with
monotone interpolation).  Conditioned ensembles (opposite slits, shifted
center of mass) are drawn from the exact conditional distribution instead of
rejection, since the interesting conditioning regions carry probability mass
far below any workable rejection rate.

Trajectories integrate dy_i/dt = v(y_i, t) with a vectorized Dormand-Prince
4(5) pair (or fixed-step RK4).  Each pair has its own adaptive step sequence,
independent of every other pair, which makes results bit-identical for any
chunking or thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Union

import numpy as np

from .guidance import NodeProximity, PairState, node_threshold, velocity_field
from .wavefunction import PhysicalParams, overlap_normalization, packet_sum

__all__ = [
    "NoConditioning",
    "OppositeSlits",
    "ComOffset",
    "Conditioning",
    "ConditioningStarved",
    "SamplerConfig",
    "IntegratorConfig",
    "TrajectoryStatus",
    "Trajectory",
    "EnsembleResult",
    "DensityTable",
    "equilibrium_density_table",
    "sample_initial_positions",
    "integrate_trajectory",
    "run_ensemble",
]

THREADS_ENV_VAR = "PAIRSLIT_NUM_THREADS"
_trapz = getattr(np, "trapezoid", np.trapz)
_CHUNK = 16384  # fixed chunk size so memory use never depends on the thread count


class ConditioningStarved(RuntimeError):
    """Raised when the conditioning region carries no resolvable probability mass."""


@dataclass(frozen=True)
class NoConditioning:
    pass


@dataclass(frozen=True)
class OppositeSlits:
    """Keep only pairs whose coordinates start on opposite sides of the axis."""


@dataclass(frozen=True)
class ComOffset:
    """Condition the pair's initial center of mass into a window.

    Keeps (y1 + y2)/2 within ``window``/2 of ``target``.  With
    ``opposite_sides`` set, additionally requires the two coordinates to lie
    on opposite sides of the axis, which (by the no-crossing property at
    ky = 0) is the initial-condition image of opposite-side detection.
    """

    target: float
    window: float
    opposite_sides: bool = False

    def __post_init__(self) -> None:
        if not (self.window > 0 and math.isfinite(self.window)):
            raise ValueError("window must be > 0")
        if not math.isfinite(self.target):
            raise ValueError("target must be finite")


Conditioning = Union[NoConditioning, OppositeSlits, ComOffset]


@dataclass(frozen=True)
class SamplerConfig:
    n_pairs: int
    seed: int
    conditioning: Conditioning = NoConditioning()

    def __post_init__(self) -> None:
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be >= 1")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk45_adaptive"
    dt_initial: float = 1e-2
    tol: float = 1e-8
    max_steps: int = 20000

    def __post_init__(self) -> None:
        if self.method not in ("rk4_fixed", "rk45_adaptive"):
            raise ValueError("method must be 'rk4_fixed' or 'rk45_adaptive'")
        if not (self.dt_initial > 0):
            raise ValueError("dt_initial must be > 0")
        if not (self.tol > 0):
            raise ValueError("tol must be > 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


class TrajectoryStatus(IntEnum):
    COMPLETED = 0
    REJECTED_NODE = 1
    REJECTED_CONDITION = 2


@dataclass
class Trajectory:
    """Time-ordered path of one pair from t = 0 to the final time reached."""

    initial: PairState
    samples: list[PairState]
    terminal: PairState
    status: TrajectoryStatus


# ---------------------------------------------------------------------------
# equilibrium density tabulation and inverse-CDF sampling


def _density_unnormalized(params: PhysicalParams, y):
    """|A + B|^2 at t = 0, up to a constant factor (prefactors cancel in sampling).

    Real-arithmetic form of the two-packet density: envelopes plus the
    interference cross term cos(2 ky y).
    """
    y = np.asarray(y, dtype=float)
    q = 1.0 / (4.0 * params.sigma0**2)
    ea = np.exp(-((y - params.slit_offset) ** 2) * q)
    eb = np.exp(-((y + params.slit_offset) ** 2) * q)
    cross = 2.0 * ea * eb
    if params.ky != 0.0:
        cross = cross * np.cos(2.0 * params.ky * y)
    return ea * ea + eb * eb + cross


@dataclass(frozen=True)
class DensityTable:
    """Dense tabulation of a 1-D density with its CDF for inverse sampling."""

    y: np.ndarray
    pdf: np.ndarray
    cdf: np.ndarray  # normalized to [0, 1]
    mass: float      # integral of the raw pdf over the table

    @classmethod
    def from_samples(cls, y: np.ndarray, pdf: np.ndarray) -> "DensityTable":
        incr = 0.5 * (pdf[1:] + pdf[:-1]) * np.diff(y)
        cdf = np.concatenate([[0.0], np.cumsum(incr)])
        mass = float(cdf[-1])
        if not (mass > 0 and math.isfinite(mass)):
            raise ConditioningStarved("density table has no resolvable mass")
        return cls(y=y, pdf=pdf, cdf=cdf / mass, mass=mass)

    def ppf(self, q):
        return np.interp(q, self.cdf, self.y)

    def cdf_at(self, y):
        return np.interp(y, self.y, self.cdf)

    def restricted_ppf(self, q, lo: float, hi: float):
        """Inverse CDF of the density restricted to [lo, hi]."""
        f_lo = float(self.cdf_at(lo))
        f_hi = float(self.cdf_at(hi))
        if not (f_hi > f_lo):
            raise ConditioningStarved(f"no probability mass in [{lo}, {hi}]")
        return self.ppf(f_lo + np.asarray(q) * (f_hi - f_lo))

    def mean(self) -> float:
        return float(_trapz(self.y * self.pdf, self.y) / self.mass)

    def std(self) -> float:
        m = self.mean()
        var = _trapz((self.y - m) ** 2 * self.pdf, self.y) / self.mass
        return float(math.sqrt(var))


def equilibrium_density_table(params: PhysicalParams, n_points: int = 10001,
                              extent: float | None = None) -> DensityTable:
    """Tabulate the one-particle position density at t = 0."""
    if extent is None:
        extent = params.slit_offset + 10.0 * params.sigma0
    y = np.linspace(-extent, extent, n_points)
    return DensityTable.from_samples(y, _density_unnormalized(params, y))


def _open_uniform(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniforms strictly inside (0, 1), so inverse CDFs never hit support endpoints."""
    return rng.random(shape) * (1.0 - 2.0**-52) + 2.0**-53


def _conditional_rows(params: PhysicalParams, u: np.ndarray, extent: float,
                      sigma_lower: float, opposite: bool, n_grid: int = 1025):
    """Per-u grids and conditional densities for the lower/first coordinate.

    For each sum value u, tabulates rho(w) * rho(u - w) on a row grid.  With
    ``opposite`` the row covers w < min(0, u) (the lower coordinate of an
    opposite-side pair); otherwise it covers the full overlap support.
    """
    u = np.asarray(u, dtype=float)
    if opposite:
        # decay scale of the conditional is ~sigma_lower; the sqrt form keeps
        # the grid just wide enough that the cut tail is below e^-40
        hi = np.minimum(0.0, u)
        lo = 0.5 * u - np.sqrt((0.5 * u) ** 2 + 80.0 * sigma_lower**2) - params.slit_offset
    else:
        lo = np.maximum(-extent, u - extent)
        hi = np.minimum(extent, u + extent)
    frac = np.linspace(0.0, 1.0, n_grid)
    grid = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    pdf = _density_unnormalized(params, grid) * _density_unnormalized(params, u[:, None] - grid)
    return grid, pdf


def _rows_ppf(grid: np.ndarray, pdf: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise inverse CDF: one draw per row of a tabulated density."""
    dy = grid[:, 1:] - grid[:, :-1]
    incr = 0.5 * (pdf[:, 1:] + pdf[:, :-1]) * dy
    cdf = np.concatenate([np.zeros((grid.shape[0], 1)), np.cumsum(incr, axis=1)], axis=1)
    total = cdf[:, -1]
    if not np.all(total > 0):
        raise ConditioningStarved("conditional density row has no resolvable mass")
    cdf = cdf / total[:, None]
    target = np.asarray(q)[:, None]
    idx = np.clip((cdf < target).sum(axis=1), 1, grid.shape[1] - 1)
    rows = np.arange(grid.shape[0])
    c0 = cdf[rows, idx - 1]
    c1 = cdf[rows, idx]
    w = np.where(c1 > c0, (target[:, 0] - c0) / np.maximum(c1 - c0, 1e-300), 0.0)
    return grid[rows, idx - 1] + w * (grid[rows, idx] - grid[rows, idx - 1])


def _sample_com_offset(params: PhysicalParams, cond: ComOffset, n: int,
                       u_draw: np.ndarray, w_draw: np.ndarray, coin: np.ndarray,
                       table: DensityTable) -> tuple[np.ndarray, float]:
    """Exact conditional draw for the center-of-mass window (optionally opposite sides).

    Returns the (n, 2) positions and the equilibrium probability mass of the
    conditioning region (the would-be acceptance rate of a rejection sampler).
    """
    extent = float(table.y[-1])
    sigma_lower = table.std() / math.sqrt(2.0)
    u_lo = 2.0 * cond.target - cond.window
    u_hi = 2.0 * cond.target + cond.window
    u_grid = np.linspace(u_lo, u_hi, 1025)
    grid, pdf = _conditional_rows(params, u_grid, extent, sigma_lower, cond.opposite_sides)
    f_u = _trapz(pdf, grid, axis=1)
    if cond.opposite_sides:
        f_u = 2.0 * f_u  # the mirror half w > max(0, u) carries equal mass
    u_table = DensityTable.from_samples(u_grid, f_u)
    region_mass = u_table.mass / table.mass**2

    u = u_table.ppf(u_draw)
    w = np.empty(n)
    for start in range(0, n, _CHUNK):
        sl = slice(start, min(start + _CHUNK, n))
        g, p = _conditional_rows(params, u[sl], extent, sigma_lower, cond.opposite_sides)
        w[sl] = _rows_ppf(g, p, w_draw[sl])
    partner = u - w
    if cond.opposite_sides:
        first = np.where(coin < 0.5, w, partner)
        second = np.where(coin < 0.5, partner, w)
        out = np.column_stack([first, second])
    else:
        out = np.column_stack([w, partner])
    return out, region_mass


def _sample_positions(params: PhysicalParams, n: int, conditioning: Conditioning,
                      seed_seq: np.random.SeedSequence) -> tuple[np.ndarray, float]:
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    draws = _open_uniform(rng, (n, 3))
    table = equilibrium_density_table(params)

    if isinstance(conditioning, NoConditioning):
        y1 = table.ppf(draws[:, 0])
        y2 = table.ppf(draws[:, 1])
        return np.column_stack([y1, y2]), 1.0

    if isinstance(conditioning, OppositeSlits):
        lo, hi = float(table.y[0]), float(table.y[-1])
        y_neg = table.restricted_ppf(draws[:, 0], lo, 0.0)
        y_pos = table.restricted_ppf(draws[:, 1], 0.0, hi)
        f0 = float(table.cdf_at(0.0))
        region_mass = 2.0 * f0 * (1.0 - f0)
        first = np.where(draws[:, 2] < 0.5, y_pos, y_neg)
        second = np.where(draws[:, 2] < 0.5, y_neg, y_pos)
        return np.column_stack([first, second]), region_mass

    if isinstance(conditioning, ComOffset):
        return _sample_com_offset(params, conditioning, n,
                                  draws[:, 0], draws[:, 1], draws[:, 2], table)

    raise TypeError(f"unknown conditioning {conditioning!r}")


def sample_initial_positions(params: PhysicalParams, sampler: SamplerConfig) -> np.ndarray:
    """Draw initial pair positions (n_pairs, 2) from the t = 0 equilibrium density.

    Conditioned variants sample the exact conditional distribution, which is
    distribution-identical to filtering an i.i.d. equilibrium stream but does
    not need the (possibly astronomically small) acceptance rate.
    """
    positions, _ = _sample_positions(
        params, sampler.n_pairs, sampler.conditioning, np.random.SeedSequence(sampler.seed)
    )
    return positions


# ---------------------------------------------------------------------------
# trajectory integration

# Dormand-Prince 4(5) tableau; first-same-as-last pair, 4th-order error estimate.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_ERR = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                    -17253 / 339200, 22 / 525, -1 / 40])

_MAX_NODE_HALVINGS = 20


class _Recorder:
    """Collects (pair, t, y1, y2) rows for accepted steps at a given stride."""

    def __init__(self, stride: int):
        self.stride = max(1, stride)
        self.chunks: list[np.ndarray] = []

    def add(self, idx: np.ndarray, t: np.ndarray, y: np.ndarray) -> None:
        if idx.size:
            self.chunks.append(np.column_stack([idx.astype(float), t, y[:, 0], y[:, 1]]))

    def rows(self) -> np.ndarray:
        if not self.chunks:
            return np.empty((0, 4))
        out = np.concatenate(self.chunks, axis=0)
        order = np.lexsort((out[:, 1], out[:, 0]))
        return out[order]


def _field_with_node_mask(params: PhysicalParams, norm: float, y: np.ndarray,
                          t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v, mod = velocity_field(params, y, t[:, None], with_modulus=True)
    psi_mod = norm * mod[:, 0] * mod[:, 1]
    bad = ~(psi_mod > node_threshold(params, t))
    bad |= ~np.isfinite(v).all(axis=1)
    return v, bad


def _integrate_chunk_rk45(params: PhysicalParams, y0: np.ndarray, t_end: float,
                          integ: IntegratorConfig, recorder: _Recorder | None,
                          index_offset: int) -> tuple[np.ndarray, np.ndarray, int]:
    n = y0.shape[0]
    norm = overlap_normalization(params)
    y = y0.astype(float).copy()
    t = np.zeros(n)
    h = np.full(n, min(integ.dt_initial, t_end))
    status = np.full(n, -1, dtype=np.int8)
    halvings = np.zeros(n, dtype=np.int32)
    steps = np.zeros(n, dtype=np.int64)
    accepted_count = np.zeros(n, dtype=np.int64)
    crossings = 0
    h_floor = 1e-14 * t_end

    # reject pairs starting at (or numerically on) a node
    _, bad0 = _field_with_node_mask(params, norm, y, t)
    status[bad0] = TrajectoryStatus.REJECTED_NODE

    if recorder is not None:
        alive0 = np.flatnonzero(status < 0)
        recorder.add(alive0 + index_offset, t[alive0], y[alive0])

    while True:
        active = np.flatnonzero(status < 0)
        if active.size == 0:
            break
        ya = y[active]
        ta = t[active]
        ha = np.minimum(h[active], t_end - ta)
        reaches_end = ha >= (t_end - ta) - 1e-15 * t_end

        m = active.size
        k = np.empty((7, m, 2))
        node = np.zeros(m, dtype=bool)
        v, bad = _field_with_node_mask(params, norm, ya, ta)
        k[0] = v
        node |= bad
        for i, arow in enumerate(_DP_A, start=1):
            y_stage = ya + ha[:, None] * np.tensordot(arow, k[: len(arow)], axes=(0, 0))
            t_stage = ta + _DP_C[i] * ha
            v, bad = _field_with_node_mask(params, norm, y_stage, t_stage)
            k[i] = v
            node |= bad
        y_new = ya + ha[:, None] * np.tensordot(_DP_B5, k, axes=(0, 0))
        err_vec = ha[:, None] * np.tensordot(_DP_ERR, k, axes=(0, 0))
        scale = integ.tol * params.sigma0 + integ.tol * np.maximum(np.abs(ya), np.abs(y_new))
        with np.errstate(invalid="ignore"):
            err = np.max(np.abs(err_vec) / scale, axis=1)
        err = np.where(np.isfinite(err), err, np.inf)

        # node-tainted steps: halve and retry, reject after too many halvings
        if node.any():
            sel = active[node]
            halvings[sel] += 1
            h[sel] = ha[node] * 0.5
            dead = (halvings[sel] > _MAX_NODE_HALVINGS) | (h[sel] < h_floor)
            status[sel[dead]] = TrajectoryStatus.REJECTED_NODE

        ok = ~node
        accept = ok & (err <= 1.0)
        reject = ok & ~accept

        if reject.any():
            sel = active[reject]
            factor = np.maximum(0.2, 0.9 * err[reject] ** -0.2)
            h[sel] = np.maximum(ha[reject] * np.minimum(1.0, factor), h_floor)

        if accept.any():
            sel = active[accept]
            ya_s = ya[accept]
            yn_s = y_new[accept]
            crossings += int(np.count_nonzero(ya_s * yn_s < 0.0))
            y[sel] = yn_s
            t_next = np.where(reaches_end[accept], t_end, ta[accept] + ha[accept])
            t[sel] = t_next
            halvings[sel] = 0
            accepted_count[sel] += 1
            e = np.maximum(err[accept], 1e-300)
            factor = 0.9 * e**-0.2
            h[sel] = ha[accept] * np.clip(factor, 0.2, 10.0)
            done = reaches_end[accept]
            status[sel[done]] = TrajectoryStatus.COMPLETED
            if recorder is not None:
                rec = done | (accepted_count[sel] % recorder.stride == 0)
                recorder.add(sel[rec] + index_offset, t_next[rec], yn_s[rec])

        steps[active] += 1
        over = active[steps[active] >= integ.max_steps]
        if over.size:
            alive = over[status[over] < 0]
            status[alive] = TrajectoryStatus.REJECTED_NODE

    return y, status, crossings


def _integrate_chunk_rk4(params: PhysicalParams, y0: np.ndarray, t_end: float,
                         integ: IntegratorConfig, recorder: _Recorder | None,
                         index_offset: int) -> tuple[np.ndarray, np.ndarray, int]:
    n = y0.shape[0]
    norm = overlap_normalization(params)
    n_steps = max(1, int(math.ceil(t_end / integ.dt_initial)))
    if n_steps > integ.max_steps:
        raise ValueError("rk4_fixed needs more steps than max_steps allows")
    dt = t_end / n_steps
    y = y0.astype(float).copy()
    status = np.full(n, -1, dtype=np.int8)
    crossings = 0

    _, bad0 = _field_with_node_mask(params, norm, y, np.zeros(n))
    status[bad0] = TrajectoryStatus.REJECTED_NODE

    if recorder is not None:
        alive0 = np.flatnonzero(status < 0)
        recorder.add(alive0 + index_offset, np.zeros(alive0.size), y[alive0])

    for step in range(n_steps):
        active = np.flatnonzero(status < 0)
        if active.size == 0:
            break
        ya = y[active]
        t0 = np.full(active.size, step * dt)
        is_last = step == n_steps - 1
        t1 = np.full(active.size, t_end if is_last else (step + 1) * dt)
        node = np.zeros(active.size, dtype=bool)

        k1, bad = _field_with_node_mask(params, norm, ya, t0); node |= bad
        k2, bad = _field_with_node_mask(params, norm, ya + 0.5 * dt * k1, t0 + 0.5 * dt); node |= bad
        k3, bad = _field_with_node_mask(params, norm, ya + 0.5 * dt * k2, t0 + 0.5 * dt); node |= bad
        k4, bad = _field_with_node_mask(params, norm, ya + dt * k3, t1); node |= bad
        y_new = ya + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        status[active[node]] = TrajectoryStatus.REJECTED_NODE
        ok = ~node
        sel = active[ok]
        crossings += int(np.count_nonzero(ya[ok] * y_new[ok] < 0.0))
        y[sel] = y_new[ok]
        if is_last:
            status[sel] = TrajectoryStatus.COMPLETED
        if recorder is not None and sel.size:
            rec = is_last | (np.full(sel.size, step + 1) % recorder.stride == 0)
            recorder.add(sel[rec] + index_offset, t1[ok][rec], y_new[ok][rec])

    return y, status, crossings


def _integrate_chunk(params, y0, t_end, integ, recorder, index_offset):
    if integ.method == "rk45_adaptive":
        return _integrate_chunk_rk45(params, y0, t_end, integ, recorder, index_offset)
    return _integrate_chunk_rk4(params, y0, t_end, integ, recorder, index_offset)


@dataclass
class EnsembleResult:
    """Outcome of an ensemble run; arrays are indexed by pair."""

    y_initial: np.ndarray        # (n, 2) positions at t = 0
    y_final: np.ndarray          # (n, 2) positions at the final time reached
    status: np.ndarray           # (n,) TrajectoryStatus values
    t_end: float
    crossings: int               # sign changes of any coordinate on accepted steps
    conditioning_mass: float     # equilibrium probability of the conditioning region
    trajectory_rows: np.ndarray | None = None  # (rows, 4): pair, t, y1, y2

    @property
    def n_pairs(self) -> int:
        return self.status.size

    @property
    def completed(self) -> np.ndarray:
        return self.status == TrajectoryStatus.COMPLETED

    @property
    def n_completed(self) -> int:
        return int(np.count_nonzero(self.completed))

    @property
    def n_rejected_node(self) -> int:
        return int(np.count_nonzero(self.status == TrajectoryStatus.REJECTED_NODE))

    @property
    def n_rejected_condition(self) -> int:
        return int(np.count_nonzero(self.status == TrajectoryStatus.REJECTED_CONDITION))

    @property
    def rejection_fraction(self) -> float:
        return 1.0 - self.n_completed / self.n_pairs


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_ensemble(params: PhysicalParams, sampler: SamplerConfig,
                 integ: IntegratorConfig, t_end: float,
                 record_stride: int | None = None) -> EnsembleResult:
    """Sample, integrate and gather an ensemble of pair trajectories.

    Deterministic for a fixed (config, seed): sampling happens up front from a
    single seeded stream, and each pair's integration is independent of every
    other pair, so the thread count (``PAIRSLIT_NUM_THREADS``) never changes
    any result.
    """
    if not (t_end > 0 and math.isfinite(t_end)):
        raise ValueError("t_end must be positive and finite")
    y0, region_mass = _sample_positions(
        params, sampler.n_pairs, sampler.conditioning, np.random.SeedSequence(sampler.seed)
    )

    n = y0.shape[0]
    recorder = _Recorder(record_stride) if record_stride is not None else None
    y_final = np.empty_like(y0)
    status = np.empty(n, dtype=np.int8)
    crossings = 0

    spans = [(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]
    workers = min(_thread_count(), len(spans))
    if workers > 1 and recorder is None:
        def job(span):
            return span, _integrate_chunk(params, y0[span[0]:span[1]], t_end, integ, None, span[0])

        with ThreadPoolExecutor(max_workers=workers) as pool:
            for (a, b), (yf, st, cr) in pool.map(job, spans):
                y_final[a:b] = yf
                status[a:b] = st
                crossings += cr
    else:
        for a, b in spans:
            yf, st, cr = _integrate_chunk(params, y0[a:b], t_end, integ, recorder, a)
            y_final[a:b] = yf
            status[a:b] = st
            crossings += cr

    return EnsembleResult(
        y_initial=y0,
        y_final=y_final,
        status=status,
        t_end=t_end,
        crossings=crossings,
        conditioning_mass=region_mass,
        trajectory_rows=recorder.rows() if recorder is not None else None,
    )


def integrate_trajectory(params: PhysicalParams, initial: PairState, t_end: float,
                         integ: IntegratorConfig) -> Trajectory:
    """Integrate a single pair from t = 0 to t_end, recording every accepted step."""
    if initial.t != 0.0:
        raise ValueError("initial state must have t = 0")
    recorder = _Recorder(stride=1)
    y0 = np.array([[initial.y1, initial.y2]])
    yf, st, _ = _integrate_chunk(params, y0, t_end, integ, recorder, 0)
    rows = recorder.rows()
    samples = [PairState(y1=row[2], y2=row[3], t=row[1]) for row in rows]
    if not samples or samples[0].t != 0.0:
        samples.insert(0, initial)
    status = TrajectoryStatus(int(st[0]))
    terminal = samples[-1] if samples else initial
    if status == TrajectoryStatus.COMPLETED and terminal.t != t_end:
        terminal = PairState(y1=float(yf[0, 0]), y2=float(yf[0, 1]), t=t_end)
        samples.append(terminal)
    return Trajectory(initial=initial, samples=samples, terminal=terminal, status=status)
