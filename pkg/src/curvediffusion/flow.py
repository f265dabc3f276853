"""Time stepping for the curve diffusion flow.

The normal velocity is minus the second arclength derivative of curvature.
Written in the parametrization, that velocity splits as

    -k_ss nu  =  -gamma_ssss - k^3 nu - 3 k k_s tau,

so the default scheme treats the stiff fourth-derivative term implicitly with
its coefficient (the arclength spacing) frozen at the current step, and the
lower-order curvature terms explicitly.  Each step then solves one periodic
pentadiagonal system per coordinate by a direct banded factorization with a
rank-4 correction for the wrap-around entries.  Explicit RK4 on the plain
normal velocity is kept as a cross-validation scheme; it needs dt of order
(L/n)^4 and is only practical at coarse resolution.

Vertices carry no tangential dynamics of their own.  The step moves them by
the computed velocity and then restores the uniform-in-arclength sampling by
resampling, either every step or when the chord spread passes a threshold;
the choice is a gauge and must not change the evolving shape.  After
redistribution the vertices are translated a common tiny distance along the
normals so the enclosed polygon area matches the pre-step value exactly,
which pins the one conserved quantity of the flow to rounding error instead
of letting truncation error accumulate over tens of thousands of steps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_banded

from .errors import (
    BlowUpSignal,
    DegenerateGeometryError,
    RejectedInputError,
    SolverError,
)
from .geometry import (
    UNIFORM_IN_ARCLENGTH,
    UNIFORM_IN_PARAMETER,
    CurveMetrics,
    SampledCurve,
    metrics,
    resample_uniform,
)

SCHEME_LINEARLY_IMPLICIT = "linearly-implicit"
SCHEME_EXPLICIT_RK4 = "explicit-rk4"
SCHEMES = (SCHEME_LINEARLY_IMPLICIT, SCHEME_EXPLICIT_RK4)

REDISTRIBUTE_EVERY_STEP = "resample-every-step"
REDISTRIBUTE_ON_SPREAD = "resample-when-spread-exceeds"
REDISTRIBUTIONS = (REDISTRIBUTE_EVERY_STEP, REDISTRIBUTE_ON_SPREAD)

TRAJECTORY_FIELDS = (
    "t", "L", "A", "I", "omega", "kbar", "kosc",
    "ks2", "kss2", "kmin", "dL_dt", "dA_dt", "residual",
)


@dataclass(frozen=True)
class FlowConfig:
    """Scheme, resolution, stop conditions, and tolerances for one run.

    ``spread_threshold`` is the chord-spread value that triggers resampling
    under the resample-when-spread-exceeds policy; it must lie strictly
    between 0 and 1.  ``curvature_energy_ceiling`` bounds the squared L2 norm
    of curvature (arclength integral of k^2); crossing it, or any chord
    falling below ``min_segment_factor`` times the mean spacing, stops the
    run with a blow-up signal.  ``conserve_area`` toggles the exact area
    projection; switching it off exposes the raw truncation drift.
    """

    n: int = 256
    dt: float = 1e-4
    scheme: str = SCHEME_LINEARLY_IMPLICIT
    redistribution: str = REDISTRIBUTE_EVERY_STEP
    spread_threshold: float = 0.01
    max_time: Optional[float] = None
    max_steps: Optional[int] = None
    stop_when_kosc_exceeds: Optional[float] = None
    curvature_energy_ceiling: float = 1e5
    min_segment_factor: float = 1e-3
    solve_tolerance: float = 1e-8
    geometry_epsilon: float = 1e-9
    conserve_area: bool = True

    def __post_init__(self):
        if self.dt <= 0 or not math.isfinite(self.dt):
            raise RejectedInputError("dt must be a positive finite number")
        if self.n < 16:
            raise RejectedInputError("need n >= 16")
        if self.scheme not in SCHEMES:
            raise RejectedInputError(
                f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}"
            )
        if self.redistribution not in REDISTRIBUTIONS:
            raise RejectedInputError(
                f"unknown redistribution {self.redistribution!r}; "
                f"expected one of {REDISTRIBUTIONS}"
            )
        if not 0.0 < self.spread_threshold < 1.0:
            raise RejectedInputError("spread_threshold must lie in (0, 1)")
        if self.max_time is None and self.max_steps is None:
            raise RejectedInputError(
                "no stop condition: set max_time and/or max_steps"
            )
        if self.max_time is not None and self.max_time <= 0:
            raise RejectedInputError("max_time must be positive")
        if self.max_steps is not None and self.max_steps < 0:
            raise RejectedInputError("max_steps must be >= 0")
        if self.stop_when_kosc_exceeds is not None and self.stop_when_kosc_exceeds <= 0:
            raise RejectedInputError("stop_when_kosc_exceeds must be positive")
        if self.curvature_energy_ceiling <= 0:
            raise RejectedInputError("curvature_energy_ceiling must be positive")
        if not 0.0 < self.min_segment_factor < 1.0:
            raise RejectedInputError("min_segment_factor must lie in (0, 1)")
        if self.solve_tolerance <= 0:
            raise RejectedInputError("solve_tolerance must be positive")
        if self.geometry_epsilon <= 0:
            raise RejectedInputError("geometry_epsilon must be positive")


@dataclass(frozen=True)
class FlowState:
    curve: SampledCurve
    time: float = 0.0
    step_index: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.time) and self.time >= 0.0):
            raise RejectedInputError("time must be finite and >= 0")
        if self.step_index < 0:
            raise RejectedInputError("step_index must be >= 0")


@dataclass(frozen=True)
class TrajectoryRecord:
    """Diagnostics for one accepted step.

    The rate fields are backward differences across the step that produced
    this record.  ``int_dev_ks2`` and ``int_dev2_ks2`` are the arclength
    integrals of (k - kbar) k_s^2 and (k - kbar)^2 k_s^2 on the record's
    curve; they feed the oscillation-energy balance in identity_residuals
    and are not part of the serialized schema (deserialized records carry
    None there).
    """

    time: float
    metrics: CurveMetrics
    dL_dt_measured: float
    dA_dt_measured: float
    dKosc_dt_measured: float
    solver_residual: float
    int_dev_ks2: Optional[float] = None
    int_dev2_ks2: Optional[float] = None

    def __post_init__(self):
        for name in ("time", "dL_dt_measured", "dA_dt_measured",
                     "dKosc_dt_measured", "solver_residual"):
            if not math.isfinite(getattr(self, name)):
                raise RejectedInputError(f"non-finite {name} in trajectory record")
        for name in ("int_dev_ks2", "int_dev2_ks2"):
            value = getattr(self, name)
            if value is not None and not math.isfinite(value):
                raise RejectedInputError(f"non-finite {name} in trajectory record")


@dataclass(frozen=True)
class RunResult:
    records: Tuple[TrajectoryRecord, ...]
    final_state: FlowState
    reason: str
    detail: str = ""
    initial_metrics: Optional[CurveMetrics] = None


@dataclass(frozen=True)
class ResidualStat:
    """Max/mean of one identity's residuals, raw and scale-normalized.

    abs_* are in the identity's natural units (the area identity is divided
    by the enclosed area first).  rel_* divide by the largest term entering
    the identity at that record; records where every term is numerically
    zero contribute 0 (the identity holds trivially there).
    """

    abs_max: float
    abs_mean: float
    rel_max: float
    rel_mean: float


@dataclass(frozen=True)
class IdentityResiduals:
    area: ResidualStat
    length: ResidualStat
    average_curvature: ResidualStat
    osc_energy: ResidualStat
    record_count: int


def _frames(pts: np.ndarray, h: float):
    """Centered tangent, normal, and curvature of a near-uniform closed polygon."""
    fwd = np.roll(pts, -1, axis=0)
    bwd = np.roll(pts, 1, axis=0)
    d1 = (fwd - bwd) / (2.0 * h)
    d2 = (fwd - 2.0 * pts + bwd) / (h * h)
    tnorm = np.linalg.norm(d1, axis=1)
    if (tnorm == 0.0).any() or not np.isfinite(tnorm).all():
        raise DegenerateGeometryError("degenerate tangent while stepping")
    tau = d1 / tnorm[:, None]
    nu = np.column_stack([-tau[:, 1], tau[:, 0]])
    k = d2[:, 0] * nu[:, 0] + d2[:, 1] * nu[:, 1]
    return tau, nu, k


def _solve_cyclic_pentadiagonal(c: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (I + c P) x = rhs with P the periodic [1,-4,6,-4,1] stencil.

    Banded LU on the open-boundary pentadiagonal core, then a rank-4
    correction restores the four wrap-around corner entries (two per end).
    rhs may have several columns; all share one factorization.
    """
    n = rhs.shape[0]
    ab = np.zeros((5, n))
    ab[0, 2:] = c
    ab[1, 1:] = -4.0 * c
    ab[2, :] = 1.0 + 6.0 * c
    ab[3, :-1] = -4.0 * c
    ab[4, :-2] = c

    u = np.zeros((n, 4))
    v = np.zeros((n, 4))
    u[0, 0] = u[1, 1] = u[n - 2, 2] = u[n - 1, 3] = 1.0
    v[n - 2, 0] = c
    v[n - 1, 0] = -4.0 * c
    v[n - 1, 1] = c
    v[0, 2] = c
    v[0, 3] = -4.0 * c
    v[1, 3] = c

    stacked = solve_banded((2, 2), ab, np.concatenate([rhs, u], axis=1))
    y = stacked[:, : rhs.shape[1]]
    z = stacked[:, rhs.shape[1]:]
    cap = np.eye(4) + v.T @ z

    def correct(yy):
        return yy - z @ np.linalg.solve(cap, v.T @ yy)

    x = correct(y)
    # iterative refinement: the rank-4 correction loses digits when the
    # open-boundary core is much better conditioned along the seam than
    # the cyclic operator, which happens at large c; a few passes restore
    # a backward-stable solution
    norm_m = 1.0 + 16.0 * c
    for _ in range(4):
        gap = rhs - _apply_cyclic_pentadiagonal(c, x)
        scale = float(np.abs(rhs).max()) + norm_m * float(np.abs(x).max())
        if float(np.abs(gap).max()) <= 1e-13 * scale:
            break
        x = x + correct(solve_banded((2, 2), ab, gap))
    return x


def _apply_cyclic_pentadiagonal(c: float, x: np.ndarray) -> np.ndarray:
    return x + c * (
        np.roll(x, 2, axis=0) - 4.0 * np.roll(x, 1, axis=0) + 6.0 * x
        - 4.0 * np.roll(x, -1, axis=0) + np.roll(x, -2, axis=0)
    )


def _implicit_advance(pts: np.ndarray, h: float, dt: float,
                      solve_tolerance: float) -> Tuple[np.ndarray, float]:
    tau, nu, k = _frames(pts, h)
    ks = (np.roll(k, -1) - np.roll(k, 1)) / (2.0 * h)
    explicit = (k ** 3)[:, None] * nu + (3.0 * k * ks)[:, None] * tau
    b = pts - dt * explicit
    c = dt / h ** 4
    x = _solve_cyclic_pentadiagonal(c, b)
    gap = _apply_cyclic_pentadiagonal(c, x) - b
    # backward error: residual relative to what rounding alone must produce
    scale = float(np.abs(b).max()) + (1.0 + 16.0 * c) * float(np.abs(x).max())
    residual = float(np.abs(gap).max()) / max(scale, 1e-30)
    if not np.isfinite(residual) or residual > solve_tolerance:
        raise SolverError(
            f"implicit step residual {residual:.3e} exceeds tolerance "
            f"{solve_tolerance:.1e}"
        )
    return x, residual


def _rk4_velocity(pts: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    h = float(seg.mean())
    if h <= 0 or not math.isfinite(h):
        raise DegenerateGeometryError("collapsed polygon inside RK4 stage")
    _, nu, k = _frames(pts, h)
    kss = (np.roll(k, -1) - 2.0 * k + np.roll(k, 1)) / (h * h)
    return -kss[:, None] * nu


def _rk4_advance(pts: np.ndarray, dt: float) -> np.ndarray:
    k1 = _rk4_velocity(pts)
    k2 = _rk4_velocity(pts + 0.5 * dt * k1)
    k3 = _rk4_velocity(pts + 0.5 * dt * k2)
    k4 = _rk4_velocity(pts + dt * k3)
    return pts + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _project_area(pts: np.ndarray, target: float) -> np.ndarray:
    """Translate all vertices by a common multiple of the vertex normals so
    the shoelace area equals target exactly (to rounding).

    The area is quadratic in that multiple; the root closer to zero is taken.
    If the quadratic has no real root, or the linear coefficient degenerates,
    the polygon is returned unchanged.
    """
    seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    h = float(seg.mean())
    _, nu, _ = _frames(pts, h)
    nxt_p = np.roll(pts, -1, axis=0)
    nxt_n = np.roll(nu, -1, axis=0)
    area = 0.5 * float(np.sum(pts[:, 0] * nxt_p[:, 1] - nxt_p[:, 0] * pts[:, 1]))
    delta = target - area
    lin = 0.5 * float(
        np.sum(pts[:, 0] * nxt_n[:, 1] - nxt_n[:, 0] * pts[:, 1])
        + np.sum(nu[:, 0] * nxt_p[:, 1] - nxt_p[:, 0] * nu[:, 1])
    )
    quad = 0.5 * float(np.sum(nu[:, 0] * nxt_n[:, 1] - nxt_n[:, 0] * nu[:, 1]))
    disc = lin * lin + 4.0 * quad * delta
    if abs(lin) < 1e-12 or disc < 0.0:
        return pts
    # stable small root of quad a^2 + lin a - delta = 0
    alpha = 2.0 * delta / (lin + math.copysign(math.sqrt(disc), lin))
    if not math.isfinite(alpha):
        return pts
    return pts + alpha * nu


def _spread_param(pts: np.ndarray) -> str:
    seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    spread = float((seg.max() - seg.min()) / seg.mean())
    return UNIFORM_IN_ARCLENGTH if spread <= 1e-6 else UNIFORM_IN_PARAMETER


def _redistribute(raw: np.ndarray, state: FlowState, config: FlowConfig,
                  prev_area: float) -> SampledCurve:
    """Apply area projection and the redistribution policy to a raw polygon.

    The projection runs twice: once on the raw polygon, where it absorbs the
    step's truncation leak (a correction large enough to disturb chord
    uniformity, which the resample then restores), and once after the
    resample to cancel the much smaller area perturbation the resample
    itself introduces.
    """
    if config.conserve_area:
        try:
            raw = _project_area(raw, prev_area)
        except DegenerateGeometryError as exc:
            raise BlowUpSignal(
                f"area projection failed: {exc}", last_state=state,
                reason="degenerate-geometry",
            ) from exc
    seg = np.linalg.norm(np.roll(raw, -1, axis=0) - raw, axis=1)
    mean = float(seg.mean())
    if float(seg.min()) < config.min_segment_factor * mean:
        raise BlowUpSignal(
            "a segment collapsed below the resolvable scale",
            last_state=state, reason="segment-collapse",
        )
    spread = float((seg.max() - seg.min()) / mean)
    resample = (
        config.redistribution == REDISTRIBUTE_EVERY_STEP
        or spread > config.spread_threshold
    )
    try:
        if resample:
            interim = SampledCurve(raw, param=UNIFORM_IN_PARAMETER,
                                   generation=state.curve.generation)
            curve = resample_uniform(interim, config.n)
            if config.conserve_area:
                pts = _project_area(curve.vertices, prev_area)
                curve = SampledCurve(pts, param=_spread_param(pts),
                                     generation=curve.generation)
        else:
            curve = SampledCurve(raw, param=_spread_param(raw),
                                 generation=state.curve.generation)
    except (DegenerateGeometryError, RejectedInputError) as exc:
        raise BlowUpSignal(
            f"redistribution failed: {exc}", last_state=state,
            reason="degenerate-geometry",
        ) from exc
    return curve


def _advance(state: FlowState, config: FlowConfig) -> Tuple[FlowState, float]:
    pts = state.curve.vertices
    seg = state.curve.segment_lengths()
    h = float(seg.mean())
    nxt = np.roll(pts, -1, axis=0)
    prev_area = 0.5 * float(np.sum(pts[:, 0] * nxt[:, 1] - nxt[:, 0] * pts[:, 1]))

    if config.scheme == SCHEME_LINEARLY_IMPLICIT:
        raw, residual = _implicit_advance(pts, h, config.dt, config.solve_tolerance)
    else:
        raw = _rk4_advance(pts, config.dt)
        residual = 0.0

    if not np.isfinite(raw).all():
        raise BlowUpSignal(
            "non-finite coordinates after the step",
            last_state=state, reason="non-finite",
        )
    curve = _redistribute(raw, state, config, prev_area)

    # curvature-energy ceiling, the continuation criterion in reverse
    h_new = curve.length() / curve.n
    _, _, k = _frames(curve.vertices, h_new)
    energy = float(np.sum(k * k)) * h_new
    if energy >= config.curvature_energy_ceiling:
        raise BlowUpSignal(
            f"curvature energy {energy:.3e} reached the ceiling "
            f"{config.curvature_energy_ceiling:.3e}",
            last_state=state, reason="curvature-energy-ceiling",
        )

    new_state = FlowState(
        curve=curve,
        time=config.dt * (state.step_index + 1),
        step_index=state.step_index + 1,
    )
    return new_state, residual


def step(state: FlowState, config: FlowConfig) -> FlowState:
    """Advance one time step and apply the redistribution policy.

    Raises SolverError on a failed linear solve and BlowUpSignal (carrying
    the last good state) on post-step degeneracy; blow-up is the expected
    exit for singular initial shapes.
    """
    if not state.curve.is_uniform():
        state = FlowState(
            curve=resample_uniform(state.curve, config.n),
            time=state.time, step_index=state.step_index,
        )
    return _advance(state, config)[0]


def _diagnostic_curve(curve: SampledCurve, n: int) -> SampledCurve:
    if curve.is_uniform():
        return curve
    return resample_uniform(curve, n)


def _record_for(state: FlowState, config: FlowConfig, residual: float,
                prev: CurveMetrics, prev_time: float) -> TrajectoryRecord:
    curve = _diagnostic_curve(state.curve, config.n)
    m = metrics(curve)
    h = m.length / curve.n
    _, _, k = _frames(curve.vertices, h)
    ks = (np.roll(k, -1) - np.roll(k, 1)) / (2.0 * h)
    dev = k - m.average_curvature
    dt = state.time - prev_time
    return TrajectoryRecord(
        time=state.time,
        metrics=m,
        dL_dt_measured=(m.length - prev.length) / dt,
        dA_dt_measured=(m.signed_area - prev.signed_area) / dt,
        dKosc_dt_measured=(m.osc_energy - prev.osc_energy) / dt,
        solver_residual=residual,
        int_dev_ks2=float(np.sum(dev * ks * ks)) * h,
        int_dev2_ks2=float(np.sum(dev * dev * ks * ks)) * h,
    )


def run(initial: SampledCurve, config: FlowConfig,
        on_record: Optional[Callable[[FlowState, TrajectoryRecord], None]] = None
        ) -> RunResult:
    """Iterate the step until a stop condition fires.

    Returns the per-step diagnostic records, the final state, and the reason
    the run ended: max-time, max-steps, kosc-threshold, or blow-up.  On
    blow-up the records cover the accepted steps only and the final state is
    the last good one.  ``on_record`` is called with the state and record
    after each accepted step; callers use it to capture snapshots.
    """
    if not (initial.is_uniform() and initial.n == config.n):
        initial = resample_uniform(initial, config.n)
    state = FlowState(curve=initial, time=0.0, step_index=0)
    prev = metrics(initial)
    initial_metrics = prev
    prev_time = 0.0
    records: List[TrajectoryRecord] = []

    def done(reason: str, detail: str = "") -> RunResult:
        return RunResult(tuple(records), state, reason, detail, initial_metrics)

    eps = 1e-9 * config.dt
    while True:
        if config.max_steps is not None and state.step_index >= config.max_steps:
            return done("max-steps")
        if (config.max_time is not None
                and state.time + config.dt > config.max_time + eps):
            return done("max-time")
        try:
            state, residual = _advance(state, config)
            record = _record_for(state, config, residual, prev, prev_time)
        except BlowUpSignal as sig:
            if sig.last_state is not None:
                state = sig.last_state
            return done("blow-up", str(sig))
        records.append(record)
        if on_record is not None:
            on_record(state, record)
        prev = record.metrics
        prev_time = state.time
        if (config.stop_when_kosc_exceeds is not None
                and record.metrics.osc_energy > config.stop_when_kosc_exceeds):
            return done("kosc-threshold",
                        f"osc energy {record.metrics.osc_energy:.3e}")


def identity_residuals(trajectory: Sequence[TrajectoryRecord]) -> IdentityResiduals:
    """Centered-difference residuals of the evolution identities.

    At each interior record the report checks that the area rate vanishes,
    the length rate matches minus the squared L2 norm of k_s, the average
    curvature rate matches 2 omega pi / L^2 times that norm, and the
    oscillation-energy rate balances its production and dissipation terms.
    """
    records = list(trajectory)
    if len(records) < 3:
        raise RejectedInputError("need at least 3 trajectory records")
    for rec in records:
        if rec.int_dev_ks2 is None or rec.int_dev2_ks2 is None:
            raise RejectedInputError(
                "records lack the oscillation-balance integrals "
                "(deserialized trajectories cannot be re-checked)"
            )

    rows = []
    for j in range(1, len(records) - 1):
        lo, mid, hi = records[j - 1], records[j], records[j + 1]
        span = hi.time - lo.time
        m = mid.metrics
        dL = (hi.metrics.length - lo.metrics.length) / span
        dA = (hi.metrics.signed_area - lo.metrics.signed_area) / span
        dkbar = (hi.metrics.average_curvature - lo.metrics.average_curvature) / span
        dkosc = (hi.metrics.osc_energy - lo.metrics.osc_energy) / span

        area_scale = max(abs(m.signed_area), 1e-12 * m.length ** 2)
        area_abs = abs(dA) / area_scale

        len_resid = dL + m.ks_norm_sq
        len_terms = (abs(dL), m.ks_norm_sq)

        kbar_drive = 2.0 * m.winding_number * math.pi / m.length ** 2 * m.ks_norm_sq
        kbar_resid = dkbar - kbar_drive
        kbar_terms = (abs(dkbar), abs(kbar_drive))

        L = m.length
        kbar = m.average_curvature
        gain = (3.0 * L * mid.int_dev2_ks2
                + 6.0 * kbar * L * mid.int_dev_ks2
                + 2.0 * kbar ** 2 * L * m.ks_norm_sq)
        loss = m.osc_energy * m.ks_norm_sq / L + 2.0 * L * m.kss_norm_sq
        osc_resid = dkosc + loss - gain
        osc_terms = (abs(dkosc), m.osc_energy * m.ks_norm_sq / L,
                     2.0 * L * m.kss_norm_sq,
                     abs(3.0 * L * mid.int_dev2_ks2),
                     abs(6.0 * kbar * L * mid.int_dev_ks2),
                     abs(2.0 * kbar ** 2 * L * m.ks_norm_sq))

        rows.append((
            (area_abs, area_abs, (1.0,)),
            (len_resid, abs(len_resid), len_terms),
            (kbar_resid, abs(kbar_resid), kbar_terms),
            (osc_resid, abs(osc_resid), osc_terms),
        ))

    # rel residuals only make sense where the identity's terms rise above
    # time-differenced rounding noise; the unit scales set that bar
    span = records[-1].time - records[0].time
    unit_len = max(r.metrics.length for r in records) / span
    unit_kbar = max(abs(r.metrics.average_curvature) for r in records) / span
    unit_osc = max(max(r.metrics.osc_energy for r in records), 1.0) / span

    def stat(idx: int, unit: float) -> ResidualStat:
        abses = [row[idx][1] for row in rows]
        scales = [max(row[idx][2]) for row in rows]
        floor = max(1e-7 * max(scales), 1e-10 * unit, 1e-300)
        rels = [a / s if s >= floor else 0.0 for a, s in zip(abses, scales)]
        return ResidualStat(
            abs_max=float(max(abses)),
            abs_mean=float(np.mean(abses)),
            rel_max=float(max(rels)),
            rel_mean=float(np.mean(rels)),
        )

    return IdentityResiduals(
        area=stat(0, 0.0),
        length=stat(1, unit_len),
        average_curvature=stat(2, unit_kbar),
        osc_energy=stat(3, unit_osc),
        record_count=len(rows),
    )


def record_to_json(record: TrajectoryRecord) -> str:
    m = record.metrics
    obj = {
        "t": record.time,
        "L": m.length,
        "A": m.signed_area,
        "I": m.isoperimetric_ratio,
        "omega": m.winding_number,
        "kbar": m.average_curvature,
        "kosc": m.osc_energy,
        "ks2": m.ks_norm_sq,
        "kss2": m.kss_norm_sq,
        "kmin": m.min_curvature,
        "dL_dt": record.dL_dt_measured,
        "dA_dt": record.dA_dt_measured,
        "residual": record.solver_residual,
    }
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def write_trajectory_jsonl(records: Sequence[TrajectoryRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(record_to_json(rec) + "\n")


def read_trajectory_jsonl(path) -> List[TrajectoryRecord]:
    """Rebuild records from a serialized trajectory.

    The serialized schema carries neither the oscillation-balance integrals
    nor the oscillation rate; the rate is reconstructed by backward
    differences and the integrals come back as None, so identity_residuals
    rejects round-tripped trajectories by design.
    """
    parsed = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RejectedInputError(
                    f"malformed trajectory line {line_no}"
                ) from exc
            missing = [f for f in TRAJECTORY_FIELDS if f not in obj]
            if missing:
                raise RejectedInputError(
                    f"trajectory line {line_no} lacks fields {missing}"
                )
            parsed.append(obj)
    records = []
    for j, obj in enumerate(parsed):
        m = CurveMetrics(
            length=float(obj["L"]),
            signed_area=float(obj["A"]),
            isoperimetric_ratio=(None if obj["I"] is None else float(obj["I"])),
            winding_number=int(obj["omega"]),
            average_curvature=float(obj["kbar"]),
            osc_energy=float(obj["kosc"]),
            ks_norm_sq=float(obj["ks2"]),
            kss_norm_sq=float(obj["kss2"]),
            min_curvature=float(obj["kmin"]),
        )
        if j > 0:
            span = float(obj["t"]) - parsed[j - 1]["t"]
            dkosc = (m.osc_energy - parsed[j - 1]["kosc"]) / span
        else:
            dkosc = 0.0
        records.append(TrajectoryRecord(
            time=float(obj["t"]),
            metrics=m,
            dL_dt_measured=float(obj["dL_dt"]),
            dA_dt_measured=float(obj["dA_dt"]),
            dKosc_dt_measured=dkosc,
            solver_residual=float(obj["residual"]),
        ))
    return records
