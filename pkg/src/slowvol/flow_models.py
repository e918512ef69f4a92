"""Fiberwise homogeneous degree-2 Hamiltonians on model cotangent bundles.

Every model in the catalog satisfies H(q, r p) = r^2 H(q, p) for r > 0 and
H > 0 off the zero section, so the level set Sigma = {H = 1} meets each
fiber in a starshaped sphere and the restricted flow is a Reeb flow on the
unit-sphere bundle.  Degree 2 (rather than 1) keeps H smooth away from
p = 0 for the metric models and gives the clean dilation conjugation

    flow(x, r t) = dilation(flow(dilation(x, r), t), 1/r),

which doubles as an integration test: its residual must vanish at the
integrator's order.

Charts:
  FlatTorus / RandersTorus2 / StarshapedTorus2  q in [0,1)^d, periodic.
  Nil3 / Sol3     universal-cover coordinates, q unrestricted in R^3.
  RoundSphere2    ambient (q, p) in R^3 x R^3 with |q| = 1, q.p = 0.

The sphere uses the ambient extension H = |q|^2|p|^2 - (q.p)^2, which
equals |p|^2 on the constraint set and whose unconstrained flow preserves
the constraints identically; a projection after each numeric step guards
against roundoff drift.  Its Reeb orbits are great circles of common
period pi under this normalization (speed 2 on Sigma), and the
periodicity test uses that value.

Integrators: implicit midpoint (symplectic, default) with fixed-point
stage iteration, rk4 for cross-checks, and closed-form "exact" flows for
FlatTorus, RoundSphere2, RandersTorus2 and Nil3.  Energy drift above
energy_drift_cap per unit time triggers step halving and retry.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import (
    ConfigError,
    ConstraintViolation,
    EnergyDriftExceeded,
    GradientMismatch,
    NonPositiveH,
    ZeroCovector,
)

__all__ = [
    "CONSTRAINT_TOLERANCE",
    "PhasePoint",
    "FlowConfig",
    "HamiltonianModel",
    "FlatTorus",
    "RoundSphere2",
    "Nil3",
    "Sol3",
    "RandersTorus2",
    "StarshapedTorus2",
    "hamiltonian",
    "gradient",
    "flow",
    "flow_batch",
    "dilation",
    "conjugation_residual",
    "euler_residual",
    "gradient_fd_mismatch",
    "chart_distance",
    "parse_model",
    "catalog_models",
    "write_trajectory_csv",
]

CONSTRAINT_TOLERANCE = 1e-9

# fixed-point sweeps allowed per implicit-midpoint stage
_MAX_STAGE_ITERATIONS = 64


@dataclass(frozen=True)
class PhasePoint:
    """A point (q, p) of the cotangent bundle in chart coordinates."""

    q: tuple
    p: tuple

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(v) for v in self.q))
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if len(self.q) != len(self.p):
            raise ValueError("q and p must have the same length")


@dataclass(frozen=True)
class FlowConfig:
    """Integration parameters shared by every flow-based experiment."""

    step: float = 1e-3
    integrator: str = "implicit_midpoint"
    newton_tolerance: float = 1e-12
    energy_drift_cap: float = 1e-6  # per unit time
    max_step_halvings: int = 8

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.newton_tolerance <= 0 or self.energy_drift_cap <= 0:
            raise ValueError("tolerances must be positive")
        if self.integrator not in ("exact", "implicit_midpoint", "rk4"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.max_step_halvings < 0:
            raise ValueError("max_step_halvings must be >= 0")


class HamiltonianModel:
    """Base class for the model catalog; instances are immutable."""

    homogeneity_degree = 2
    tag = ""
    kernel_code = -1
    torus_chart = False
    smooth_at_zero = True  # H extends smoothly across p = 0
    needs_projection = False

    # configuration-manifold dimension and number of chart coordinates
    config_dim = 0
    chart_dim = 0

    def kernel_params(self) -> np.ndarray:
        return np.zeros(1)

    def h_batch(self, Q, P) -> np.ndarray:
        raise NotImplementedError

    def exact_flow(self, Q, P, t):
        """Closed-form flow in cover coordinates, or None."""
        return None

    def fiber_frame(self, q) -> np.ndarray:
        """Orthonormal rows spanning the covector space over q."""
        return np.eye(self.chart_dim)

    def describe(self) -> str:
        return self.tag


def _format_number(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return repr(float(v))


@dataclass(frozen=True, eq=True)
class FlatTorus(HamiltonianModel):
    """H = p^T G p on T^d = (R/Z)^d with a constant rational metric G."""

    dimension: int = 2
    metric: tuple = ()

    tag = "FlatTorus"
    kernel_code = _kernels.FLAT_TORUS
    torus_chart = True

    def __post_init__(self):
        d = self.dimension
        if d < 1:
            raise ValueError("dimension must be >= 1")
        rows = self.metric
        if not rows:
            rows = tuple(
                tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d)
            )
        else:
            rows = tuple(tuple(Fraction(v) for v in row) for row in rows)
        if len(rows) != d or any(len(r) != d for r in rows):
            raise ValueError("metric must be a d x d matrix")
        for i in range(d):
            for j in range(i):
                if rows[i][j] != rows[j][i]:
                    raise ValueError("metric must be symmetric")
        try:
            np.linalg.cholesky(np.array(rows, dtype=float))
        except np.linalg.LinAlgError:
            raise ValueError("metric must be positive definite") from None
        object.__setattr__(self, "metric", rows)

    @property
    def config_dim(self):
        return self.dimension

    @property
    def chart_dim(self):
        return self.dimension

    @cached_property
    def metric_array(self) -> np.ndarray:
        return np.array(self.metric, dtype=float)

    def kernel_params(self):
        return np.ascontiguousarray(self.metric_array.reshape(-1))

    def h_batch(self, Q, P):
        GP = P @ self.metric_array
        return np.einsum("ij,ij->i", P, GP)

    def exact_flow(self, Q, P, t):
        return Q + (2.0 * t) * (P @ self.metric_array), P.copy()

    @property
    def is_identity_metric(self) -> bool:
        d = self.dimension
        return all(
            self.metric[i][j] == (1 if i == j else 0)
            for i in range(d)
            for j in range(d)
        )

    def describe(self):
        if self.is_identity_metric:
            return f"FlatTorus({self.dimension})"
        rows = "; ".join(
            " ".join(_format_number(v) for v in row) for row in self.metric
        )
        return f"FlatTorus({self.dimension}; {rows})"


@dataclass(frozen=True)
class RoundSphere2(HamiltonianModel):
    """Great-circle flow on S^2 in the ambient constrained chart.

    H = |q|^2 |p|^2 - (q.p)^2 extends |p|^2 off the constraint set
    {|q| = 1, q.p = 0}; both constraints are conserved exactly by the
    extended flow.
    """

    tag = "RoundSphere2"
    kernel_code = _kernels.ROUND_SPHERE
    needs_projection = True
    config_dim = 2
    chart_dim = 3

    def h_batch(self, Q, P):
        q2 = np.einsum("ij,ij->i", Q, Q)
        p2 = np.einsum("ij,ij->i", P, P)
        qp = np.einsum("ij,ij->i", Q, P)
        return q2 * p2 - qp * qp

    def exact_flow(self, Q, P, t):
        norm = np.sqrt(np.einsum("ij,ij->i", P, P))
        safe = np.where(norm == 0.0, 1.0, norm)
        angle = (2.0 * t) * norm
        c = np.cos(angle)[:, None]
        s = np.sin(angle)[:, None]
        unit = P / safe[:, None]
        Qn = c * Q + s * unit
        Pn = c * P - (s * norm[:, None]) * Q
        still = norm == 0.0
        if np.any(still):
            Qn[still] = Q[still]
            Pn[still] = P[still]
        return Qn, Pn

    def fiber_frame(self, q):
        q = np.asarray(q, dtype=float)
        # any vector not parallel to q seeds the tangent frame
        seed = np.array([1.0, 0.0, 0.0])
        if abs(q[0]) > 0.9:
            seed = np.array([0.0, 1.0, 0.0])
        e1 = seed - np.dot(seed, q) * q
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(q, e1)
        return np.stack([e1, e2])


@dataclass(frozen=True)
class Nil3(HamiltonianModel):
    """Geodesic cometric of the left-invariant Heisenberg metric.

    The metric dx^2 + dy^2 + (dz - x dy)^2 inverts to the cometric
    H = p_x^2 + (p_y + x p_z)^2 + p_z^2 in cover coordinates on R^3.
    """

    tag = "Nil3"
    kernel_code = _kernels.NIL3
    config_dim = 3
    chart_dim = 3

    def h_batch(self, Q, P):
        u = P[:, 1] + Q[:, 0] * P[:, 2]
        return P[:, 0] ** 2 + u * u + P[:, 2] ** 2

    def exact_flow(self, Q, P, t):
        return _nil3_exact(Q, P, float(t))


@dataclass(frozen=True)
class Sol3(HamiltonianModel):
    """H = e^{-2z} p_x^2 + e^{2z} p_y^2 + p_z^2, the exponential contrast case."""

    tag = "Sol3"
    kernel_code = _kernels.SOL3
    config_dim = 3
    chart_dim = 3

    def h_batch(self, Q, P):
        z = Q[:, 2]
        return (
            np.exp(-2.0 * z) * P[:, 0] ** 2
            + np.exp(2.0 * z) * P[:, 1] ** 2
            + P[:, 2] ** 2
        )


@dataclass(frozen=True)
class RandersTorus2(HamiltonianModel):
    """Irreversible Finsler model H = (|p| + b.p)^2 on T^2, |b| < 1."""

    drift: tuple = (0.3, 0.0)

    tag = "RandersTorus2"
    kernel_code = _kernels.RANDERS
    torus_chart = True
    smooth_at_zero = False
    config_dim = 2
    chart_dim = 2

    def __post_init__(self):
        b = tuple(float(v) for v in self.drift)
        if len(b) != 2:
            raise ValueError("drift must be a 2-vector")
        if math.hypot(*b) >= 1.0:
            raise ValueError("drift norm must be < 1")
        object.__setattr__(self, "drift", b)

    def kernel_params(self):
        return np.array(self.drift)

    def h_batch(self, Q, P):
        norm = np.sqrt(np.einsum("ij,ij->i", P, P))
        return (norm + P @ np.array(self.drift)) ** 2

    def exact_flow(self, Q, P, t):
        # H is independent of q, so p is constant and q moves linearly
        norm = np.sqrt(np.einsum("ij,ij->i", P, P))
        if np.any(norm == 0.0):
            raise ZeroCovector("flow is undefined at p = 0")
        b = np.array(self.drift)
        f = norm + P @ b
        v = 2.0 * f[:, None] * (P / norm[:, None] + b)
        return Q + t * v, P.copy()

    def describe(self):
        return f"RandersTorus2({self.drift[0]!r}, {self.drift[1]!r})"


@dataclass(frozen=True)
class StarshapedTorus2(HamiltonianModel):
    """H = |p|^2 / rho(q, theta)^2 with a truncated Fourier radial profile.

    rho(q, theta) = base_radius + sum amp * cos(2 pi (k1 q1 + k2 q2)
    + m theta + phase) over the terms, where theta is the angle of p.
    The fiber sphere over q is the curve of radius rho in direction
    theta, starshaped as long as rho stays positive; positivity is
    checked on a 16 x 16 x 16 sample grid at construction.
    """

    base_radius: float = 1.0
    terms: tuple = ()

    tag = "StarshapedTorus2"
    kernel_code = _kernels.STARSHAPED
    torus_chart = True
    smooth_at_zero = False
    config_dim = 2
    chart_dim = 2

    def __post_init__(self):
        base = float(self.base_radius)
        if base <= 0:
            raise ValueError("base_radius must be positive")
        terms = tuple(
            (int(k1), int(k2), int(m), float(amp), float(ph))
            for k1, k2, m, amp, ph in self.terms
        )
        object.__setattr__(self, "base_radius", base)
        object.__setattr__(self, "terms", terms)
        n = 16
        qs = np.arange(n) / n
        thetas = 2.0 * math.pi * np.arange(n) / n
        q1, q2, th = np.meshgrid(qs, qs, thetas, indexing="ij")
        rho = self._rho(q1.ravel(), q2.ravel(), th.ravel())
        if rho.min() <= 0.0:
            raise NonPositiveH(
                f"radial profile reaches {rho.min():.6g} <= 0 on the sample grid"
            )

    def _rho(self, q1, q2, theta):
        rho = np.full(np.shape(q1), self.base_radius, dtype=float)
        for k1, k2, m, amp, ph in self.terms:
            rho += amp * np.cos(
                2.0 * math.pi * (k1 * q1 + k2 * q2) + m * theta + ph
            )
        return rho

    def kernel_params(self):
        params = [self.base_radius, float(len(self.terms))]
        for k1, k2, m, amp, ph in self.terms:
            params.extend([float(k1), float(k2), float(m), amp, ph])
        return np.array(params)

    def h_batch(self, Q, P):
        n2 = np.einsum("ij,ij->i", P, P)
        theta = np.arctan2(P[:, 1], P[:, 0])
        rho = self._rho(Q[:, 0], Q[:, 1], theta)
        return n2 / rho**2

    def describe(self):
        if not self.terms:
            return f"StarshapedTorus2({self.base_radius!r})"
        rows = "; ".join(
            f"{k1} {k2} {m} {amp!r} {ph!r}" for k1, k2, m, amp, ph in self.terms
        )
        return f"StarshapedTorus2({self.base_radius!r}; {rows})"


def _nil3_exact(Q, P, t):
    """Closed-form Heisenberg geodesic flow in cover coordinates.

    With u = p_y + x p_z and omega = 2 p_z, the (x, p_x) pair rotates at
    rate omega while p_y, p_z stay constant; y and z follow by
    quadrature.  A series branch handles |omega t| < 1e-4, where the
    closed form divides by near-zero quantities.  Cross-validated
    against rk4 at 4e-13 and used by tests as the reference for the
    midpoint integrator.
    """
    x0, y0, z0 = Q[:, 0], Q[:, 1], Q[:, 2]
    px0, py0, pz = P[:, 0], P[:, 1], P[:, 2]
    u0 = py0 + x0 * pz
    w = 2.0 * pz
    a = w * t
    small = np.abs(a) < 1e-4
    wg = np.where(small, 1.0, w)
    pzg = np.where(small, 1.0, pz)

    sa = np.sin(a)
    ca = np.cos(a)
    s2a = np.sin(2.0 * a)
    c2a = np.cos(2.0 * a)
    x_g = x0 + u0 * (ca - 1.0) / pzg + 2.0 * px0 * sa / wg
    px_g = -u0 * sa + px0 * ca
    y_inc_g = 2.0 * u0 * sa / wg + 2.0 * px0 * (1.0 - ca) / wg
    action = (
        (u0**2 + px0**2) * t / 2.0
        + (u0**2 - px0**2) * s2a / (4.0 * wg)
        + u0 * px0 * (1.0 - c2a) / (2.0 * wg)
    )
    g_g = (2.0 * action - u0 * y_inc_g) / pzg

    t2 = t * t
    t3 = t2 * t
    x_s = x0 + 2.0 * px0 * t - u0 * w * t2 - px0 * w * w * t3 / 3.0
    px_s = px0 - u0 * w * t - px0 * w * w * t2 / 2.0
    y_inc_s = (
        2.0 * u0 * t
        + px0 * w * t2
        - u0 * w * w * t3 / 3.0
        - px0 * w * w * w * t2 * t2 / 12.0
    )
    g_s = 2.0 * u0 * px0 * t2 + w * t3 * (4.0 * px0**2 - 2.0 * u0**2) / 3.0

    x = np.where(small, x_s, x_g)
    px = np.where(small, px_s, px_g)
    y_inc = np.where(small, y_inc_s, y_inc_g)
    g = np.where(small, g_s, g_g)

    y = y0 + y_inc
    z = z0 + 2.0 * pz * t + x0 * y_inc + g
    return np.stack([x, y, z], axis=1), np.stack([px, py0.copy(), pz.copy()], axis=1)


# ---------------------------------------------------------------------------
# point validation and shared helpers


def _point_arrays(model, x: PhasePoint):
    if len(x.q) != model.chart_dim:
        raise ValueError(
            f"{model.tag} expects {model.chart_dim} chart coordinates, got {len(x.q)}"
        )
    Q = np.array([x.q], dtype=float)
    P = np.array([x.p], dtype=float)
    return Q, P


def _check_point(model, x: PhasePoint):
    Q, P = _point_arrays(model, x)
    if not model.smooth_at_zero and not np.any(P):
        raise ZeroCovector(f"{model.tag} is not smooth at p = 0")
    if model.needs_projection:
        q = Q[0]
        p = P[0]
        radial = abs(np.linalg.norm(q) - 1.0)
        tangency = abs(float(np.dot(q, p)))
        scale = 1.0 + float(np.linalg.norm(p))
        if radial > CONSTRAINT_TOLERANCE or tangency > CONSTRAINT_TOLERANCE * scale:
            raise ConstraintViolation(
                f"|q| - 1 = {radial:.3e}, q.p = {tangency:.3e} exceed tolerance"
            )
    return Q, P


def _project_sphere_rows(Q, P):
    norm = np.linalg.norm(Q, axis=1, keepdims=True)
    Q /= norm
    qp = np.einsum("ij,ij->i", Q, P)[:, None]
    P -= qp * Q
    return Q, P


def _wrap_rows(Q):
    return Q - np.floor(Q)


# ---------------------------------------------------------------------------
# public operations


def hamiltonian(model, x: PhasePoint) -> float:
    """Evaluate H at x; degree-2 homogeneous in p."""
    Q, P = _check_point(model, x)
    return float(model.h_batch(Q, P)[0])


def gradient(model, x: PhasePoint):
    """Analytic (dH/dq, dH/dp) at x as a pair of tuples."""
    Q, P = _check_point(model, x)
    DQ = np.empty_like(Q)
    DP = np.empty_like(P)
    _kernels.gradient_batch(
        model.kernel_code, model.kernel_params(), Q, P, DQ, DP
    )
    return tuple(DQ[0]), tuple(DP[0])


def flow_batch(model, Q, P, t_from, t_to, config: FlowConfig | None = None):
    """Advance a batch of phase points from t_from to t_to.

    Coordinates are treated as cover coordinates: torus charts are NOT
    wrapped here, so mesh edges stay geometrically contiguous.  Returns
    fresh arrays.  A row whose energy drift exceeds energy_drift_cap * |t|
    is retried with the step halved, up to max_step_halvings, then
    EnergyDriftExceeded.

    Step halving is decided per row, never per batch: each trajectory's
    step schedule depends only on its own initial condition and the
    (t_from, t_to, step) arguments, so integrating points together or one
    at a time gives bit-identical results.  Mesh refinement relies on this
    when it inserts midpoints long after their neighbours were advanced.
    """
    config = config or FlowConfig()
    Q0 = np.ascontiguousarray(Q, dtype=float).copy()
    P0 = np.ascontiguousarray(P, dtype=float).copy()
    span = float(t_to) - float(t_from)
    if span == 0.0:
        return Q0, P0
    if config.integrator == "exact":
        out = model.exact_flow(Q0, P0, span)
        if out is None:
            raise ConfigError(f"{model.tag} has no closed-form flow")
        return out

    h0 = model.h_batch(Q0, P0)
    allowed = config.energy_drift_cap * abs(span)
    code = model.kernel_code
    params = model.kernel_params()
    project = model.needs_projection
    base_steps = max(1, round(abs(span) / config.step))
    Qout = Q0.copy()
    Pout = P0.copy()
    pending = np.arange(len(Q0))
    worst = math.inf
    for halving in range(config.max_step_halvings + 1):
        nsteps = base_steps << halving
        h = span / nsteps
        Qw = np.ascontiguousarray(Q0[pending])
        Pw = np.ascontiguousarray(P0[pending])
        if config.integrator == "implicit_midpoint":
            residual = _kernels.integrate_midpoint(
                code, params, Qw, Pw, nsteps, h,
                config.newton_tolerance, _MAX_STAGE_ITERATIONS, project,
            )
            if residual > 0.0:
                # some row's stage iteration failed to contract; redo rows
                # one at a time so only the failing ones wait for a smaller
                # step (a row alone must see the same schedule as in any
                # batch, so failure may not spill over)
                converged = np.empty(len(pending), dtype=bool)
                for k in range(len(pending)):
                    qrow = Q0[pending[k]:pending[k] + 1].copy()
                    prow = P0[pending[k]:pending[k] + 1].copy()
                    res_k = _kernels.integrate_midpoint(
                        code, params, qrow, prow, nsteps, h,
                        config.newton_tolerance, _MAX_STAGE_ITERATIONS,
                        project,
                    )
                    converged[k] = res_k == 0.0
                    Qw[k] = qrow[0]
                    Pw[k] = prow[0]
            else:
                converged = np.ones(len(pending), dtype=bool)
        else:
            _kernels.integrate_rk4(code, params, Qw, Pw, nsteps, h, project)
            converged = np.ones(len(pending), dtype=bool)
        drifts = np.abs(model.h_batch(Qw, Pw) - h0[pending])
        ok = converged & (drifts <= allowed)
        rows = pending[ok]
        Qout[rows] = Qw[ok]
        Pout[rows] = Pw[ok]
        pending = pending[~ok]
        if len(pending) == 0:
            return Qout, Pout
        worst = float(np.max(drifts[~ok]))
    raise EnergyDriftExceeded(
        f"energy drift {worst:.3e} exceeds {allowed:.3e} after "
        f"{config.max_step_halvings} step halvings"
    )


def flow(model, x: PhasePoint, t, config: FlowConfig | None = None) -> PhasePoint:
    """Flow x for time t and return a chart-reduced phase point."""
    _check_point(model, x)
    Q, P = _point_arrays(model, x)
    Q, P = flow_batch(model, Q, P, 0.0, float(t), config)
    if model.needs_projection:
        _project_sphere_rows(Q, P)
    if model.torus_chart:
        Q = _wrap_rows(Q)
    return PhasePoint(tuple(Q[0]), tuple(P[0]))


def dilation(x: PhasePoint, r) -> PhasePoint:
    """Fiber scaling (q, p) -> (q, r p), r > 0."""
    r = float(r)
    if r <= 0:
        raise ValueError("dilation factor must be positive")
    return PhasePoint(x.q, tuple(r * v for v in x.p))


def chart_distance(model, a: PhasePoint, b: PhasePoint) -> float:
    """Euclidean distance in chart coordinates, shortest wrap on tori."""
    dq = np.array(a.q) - np.array(b.q)
    if model.torus_chart:
        dq -= np.round(dq)
    dp = np.array(a.p) - np.array(b.p)
    return float(math.hypot(np.linalg.norm(dq), np.linalg.norm(dp)))


def conjugation_residual(model, x: PhasePoint, t, r, config=None) -> float:
    """Chart distance between flow(x, r t) and the dilation conjugate."""
    r = float(r)
    if r <= 0:
        raise ValueError("dilation factor must be positive")
    lhs = flow(model, x, r * t, config)
    rhs = dilation(flow(model, dilation(x, r), t, config), 1.0 / r)
    return chart_distance(model, lhs, rhs)


def gradient_fd_mismatch(model, x: PhasePoint, fd_step: float = 1e-5) -> float:
    """Max abs difference between analytic and central-difference gradients."""
    Q, P = _check_point(model, x)
    dq, dp = gradient(model, x)
    analytic = np.concatenate([dq, dp])
    n = model.chart_dim
    fd = np.empty(2 * n)
    for i in range(2 * n):
        Qp, Pp = Q.copy(), P.copy()
        Qm, Pm = Q.copy(), P.copy()
        if i < n:
            Qp[0, i] += fd_step
            Qm[0, i] -= fd_step
        else:
            Pp[0, i - n] += fd_step
            Pm[0, i - n] -= fd_step
        fd[i] = (model.h_batch(Qp, Pp)[0] - model.h_batch(Qm, Pm)[0]) / (
            2.0 * fd_step
        )
    return float(np.max(np.abs(fd - analytic)))


def euler_residual(model, x: PhasePoint, fd_step: float = 1e-5) -> float:
    """dH(q,p).(0,p) - 2 H(q,p); zero exactly for degree-2 homogeneity.

    A finite-difference check of the analytic gradient runs alongside and
    raises GradientMismatch on disagreement, guarding the residual against
    a silently wrong gradient implementation.
    """
    Q, P = _check_point(model, x)
    if not np.any(P):
        raise ZeroCovector("Euler residual is undefined at p = 0")
    _, dp = gradient(model, x)
    value = float(P[0] @ np.array(dp) - 2.0 * model.h_batch(Q, P)[0])
    mismatch = gradient_fd_mismatch(model, x, fd_step)
    scale = 1.0 + max(abs(v) for pair in gradient(model, x) for v in pair)
    if mismatch > 1e-3 * scale:
        raise GradientMismatch(
            f"analytic vs finite-difference gradient differ by {mismatch:.3e}"
        )
    return value


# ---------------------------------------------------------------------------
# catalog, parsing, trajectory output


def catalog_models() -> tuple:
    """Representative instances of every model family."""
    return (
        FlatTorus(2),
        FlatTorus(3),
        FlatTorus(2, ((2, 0), (0, 1))),
        RoundSphere2(),
        Nil3(),
        Sol3(),
        RandersTorus2((0.3, 0.0)),
        StarshapedTorus2(1.0, ((1, 0, 0, 0.2, 0.0), (0, 1, 2, 0.15, 0.5))),
    )


_MODEL_RE = re.compile(r"^\s*([A-Za-z][A-Za-z0-9]*)\s*(?:\((.*)\))?\s*$", re.S)


def _parse_entries(text):
    return [v for v in text.replace(",", " ").split() if v]


def parse_model(text: str) -> HamiltonianModel:
    """Build a model from its config-file string.

    Formats (semicolons separate matrix/profile rows):
      FlatTorus(2)                    identity metric
      FlatTorus(2; 2 0; 0 1)          explicit rational metric rows
      RoundSphere2 | Nil3 | Sol3
      RandersTorus2(0.3, 0.0)         drift vector
      StarshapedTorus2(1.0; 1 0 2 0.25 0.0; ...)  base; k1 k2 m amp phase rows
    """
    match = _MODEL_RE.match(text)
    if not match:
        raise ConfigError(f"cannot parse model string {text!r}")
    name, args = match.group(1), match.group(2)
    try:
        if name == "FlatTorus":
            if args is None:
                raise ConfigError("FlatTorus needs a dimension, e.g. FlatTorus(2)")
            parts = [s.strip() for s in args.split(";")]
            d = int(parts[0])
            if len(parts) == 1:
                return FlatTorus(d)
            rows = tuple(
                tuple(Fraction(v) for v in _parse_entries(row)) for row in parts[1:]
            )
            return FlatTorus(d, rows)
        if name in ("RoundSphere2", "Nil3", "Sol3"):
            if args is not None:
                raise ConfigError(f"{name} takes no parameters")
            return {"RoundSphere2": RoundSphere2, "Nil3": Nil3, "Sol3": Sol3}[name]()
        if name == "RandersTorus2":
            drift = [float(v) for v in _parse_entries(args or "")]
            return RandersTorus2(tuple(drift))
        if name == "StarshapedTorus2":
            if args is None:
                return StarshapedTorus2()
            parts = [s.strip() for s in args.split(";")]
            base = float(parts[0])
            terms = tuple(tuple(_parse_entries(row)) for row in parts[1:])
            return StarshapedTorus2(base, terms)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad parameters in model string {text!r}: {exc}") from exc
    raise ConfigError(f"unknown model {name!r}")


def write_trajectory_csv(path, model, x: PhasePoint, times, config=None):
    """Dump the trajectory through x at the given times as CSV.

    Columns: t,q1..qd,p1..pd in chart coordinates (tori wrapped).
    """
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")
    d = model.chart_dim
    header = (
        "t,"
        + ",".join(f"q{i + 1}" for i in range(d))
        + ","
        + ",".join(f"p{i + 1}" for i in range(d))
    )
    Q, P = _check_point(model, x)
    lines = [header]
    prev = 0.0
    for t in times:
        Q, P = flow_batch(model, Q, P, prev, t, config)
        prev = t
        out_q = _wrap_rows(Q) if model.torus_chart else Q
        fields = [str(float(t))]
        fields += [str(float(v)) for v in out_q[0]]
        fields += [str(float(v)) for v in P[0]]
        lines.append(",".join(fields))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
