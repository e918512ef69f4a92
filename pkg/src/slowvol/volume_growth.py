"""Volume growth of fiber spheres and punctured fiber discs under a flow.

The measured object is the image of the unit-level fiber sphere
Sigma_q = {p : H(q, p) = 1} (or the punctured radial disc over it) under
the time-t Hamiltonian flow.  Meshes store, per vertex, the immutable
fiber parameter, the initial phase point it maps to, and the current
image point, so the identity "image = flow_t(initial point)" holds by
construction: refinement inserts parameter midpoints and integrates the
fresh points from t = 0, it never resamples the evolved mesh.

Coordinates are cover coordinates: torus charts are not wrapped, so edge
vectors are plain differences and stay geometrically contiguous however
far the image winds around the torus.  After refinement every surviving
edge is short (the threshold plus a hard 0.4 cap per q-coordinate), and
for short edges the cover difference equals the shortest periodic
representative, so measured lengths agree with the wrapped convention.

Volume is the chart Euclidean measure on (q, p) - polyline length,
triangle area, or tetrahedron volume via Gram determinants.  The fitted
exponent is what matters and is invariant under fixed equivalent metrics;
an optional diagonal reweighting exists to test exactly that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BudgetExceeded,
    ConstraintViolation,
    NonPositiveH,
    SeriesTooShort,
)
from .fitting import cumulative_trapezoid, fit_scaling
from .flow_models import CONSTRAINT_TOLERANCE, FlowConfig, flow_batch

__all__ = [
    "WRAP_GUARD",
    "MeshThresholds",
    "FiberSphereMesh",
    "VolumeSeries",
    "SlowVolFit",
    "initial_fiber_sphere",
    "initial_punctured_disc",
    "evolve_and_measure",
    "slow_vol_fit",
    "reduction_gap",
    "integral_growth_check",
    "write_volume_csv",
    "read_volume_csv",
    "write_mesh_csv",
]

#: Edges whose cover-coordinate q-difference exceeds this in any component
#: are refined regardless of total length (anti-aliasing cap on tori).
WRAP_GUARD = 0.4

#: Refinement passes allowed per time sample before giving up.
_MAX_REFINE_PASSES = 200

DEFAULT_INNER_RADIUS = 0.05


@dataclass(frozen=True)
class MeshThresholds:
    """Mesh-resolution knobs shared by the paired reduction experiments."""

    refine_threshold: float = 0.25
    volume_budget: int = 200_000
    resolution: int = 64  # angular count (d = 2) or icosphere level (d = 3)
    disc_resolution: int = 0  # 0 means: derive from resolution
    inner_radius: float = DEFAULT_INNER_RADIUS
    window_fraction: float = 0.5

    def __post_init__(self):
        if self.refine_threshold <= 0:
            raise ValueError("refine_threshold must be positive")
        if self.volume_budget <= 0:
            raise ValueError("volume_budget must be positive")
        if not 0.0 < self.inner_radius < 1.0:
            raise ValueError("inner_radius must lie in (0, 1)")


@dataclass
class FiberSphereMesh:
    """Adaptive mesh over the fiber sphere or punctured fiber disc at q.

    parameters[i] is the fiber parameter of vertex i and never changes;
    (initial_q, initial_p)[i] is its phase point at t = 0 and
    (images_q, images_p)[i] the flowed point at current_time, in cover
    coordinates.  Exactly one of segments / triangles / tets is non-empty.
    refinement_log records (time, parent_a, parent_b, new_index) per
    inserted midpoint.

    advance_times lists the checkpoints the vertices were integrated
    through.  Vertices inserted later replay the same checkpoint schedule,
    so the parameter-to-image map stays numerically continuous; on
    trajectory-sensitive models an off-schedule integration of the same
    parameter can land order-one away from its neighbours, which would
    leave edges no amount of bisection can shorten.
    """

    base_point: tuple
    kind: str  # "sphere" or "punctured_disc"
    inner_radius: float | None
    fiber_dim: int
    resolution: int
    parameters: list
    initial_q: np.ndarray
    initial_p: np.ndarray
    images_q: np.ndarray
    images_p: np.ndarray
    segments: list = field(default_factory=list)
    triangles: list = field(default_factory=list)
    tets: list = field(default_factory=list)
    refinement_log: list = field(default_factory=list)
    current_time: float = 0.0
    advance_times: list = field(default_factory=list)

    @property
    def vertex_count(self) -> int:
        return len(self.parameters)

    def copy(self) -> "FiberSphereMesh":
        return FiberSphereMesh(
            base_point=self.base_point,
            kind=self.kind,
            inner_radius=self.inner_radius,
            fiber_dim=self.fiber_dim,
            resolution=self.resolution,
            parameters=list(self.parameters),
            initial_q=self.initial_q.copy(),
            initial_p=self.initial_p.copy(),
            images_q=self.images_q.copy(),
            images_p=self.images_p.copy(),
            segments=list(self.segments),
            triangles=list(self.triangles),
            tets=list(self.tets),
            refinement_log=list(self.refinement_log),
            current_time=self.current_time,
            advance_times=list(self.advance_times),
        )


@dataclass(frozen=True)
class VolumeSeries:
    """Measured volumes over time plus the final-resolution certificate.

    resolution_certificate is the relative volume change under one global
    refinement at the final time; None on partial series attached to a
    BudgetExceeded error and on runs where the caller skipped it.
    """

    times: tuple
    volumes: tuple
    vertex_counts: tuple
    mesh_kind: str
    resolution_certificate: float | None

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "volumes", tuple(float(v) for v in self.volumes))
        object.__setattr__(
            self, "vertex_counts", tuple(int(n) for n in self.vertex_counts)
        )
        if len(self.times) != len(self.volumes) or len(self.times) != len(
            self.vertex_counts
        ):
            raise ValueError("times, volumes, vertex_counts must align")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        if any(v <= 0 for v in self.volumes):
            raise ValueError("volumes must be positive")


@dataclass(frozen=True)
class SlowVolFit:
    """Trailing-window fit of log volume against log t."""

    exponent: float
    window: tuple
    residual: float
    classification: str


# ---------------------------------------------------------------------------
# initial meshes


def _check_base_point(model, q):
    q = tuple(float(v) for v in q)
    if len(q) != model.chart_dim:
        raise ValueError(
            f"{model.tag} expects {model.chart_dim} chart coordinates, got {len(q)}"
        )
    if model.needs_projection:
        radial = abs(float(np.linalg.norm(q)) - 1.0)
        if radial > CONSTRAINT_TOLERANCE:
            raise ConstraintViolation(f"base point off the unit sphere by {radial:.3e}")
    return q


def _initial_points(model, q, parameters, kind):
    """Phase points p(u) = r u / sqrt(H(q, u)) for each fiber parameter."""
    frame = model.fiber_frame(np.array(q))
    n = len(parameters)
    # parameter layout: sphere d2 (theta,), disc d2 (theta, r),
    # sphere d3 (ux, uy, uz), disc d3 (ux, uy, uz, r)
    d = frame.shape[0]
    directions = np.empty((n, d))
    radii = np.ones(n)
    for i, param in enumerate(parameters):
        if d == 2:
            theta = param[0]
            directions[i, 0] = math.cos(theta)
            directions[i, 1] = math.sin(theta)
            if kind == "punctured_disc":
                radii[i] = param[1]
        else:
            directions[i] = param[:3]
            if kind == "punctured_disc":
                radii[i] = param[3]
    W = directions @ frame
    Q = np.tile(np.array(q, dtype=float), (n, 1))
    h = model.h_batch(Q, W)
    if np.min(h) <= 0.0:
        bad = int(np.argmin(h))
        raise NonPositiveH(
            f"H(q, u) = {h[bad]:.6g} <= 0 at fiber sample {parameters[bad]}"
        )
    P = W * (radii / np.sqrt(h))[:, None]
    return Q, P


def initial_fiber_sphere(model, q, resolution) -> FiberSphereMesh:
    """Mesh of the unit fiber sphere Sigma_q = {H(q, .) = 1}.

    resolution is the angular sample count for 2-dimensional models
    (at least 16) and the icosphere subdivision level for 3-dimensional
    ones (at least 2).
    """
    q = _check_base_point(model, q)
    d = model.config_dim
    if d == 2:
        n = int(resolution)
        if n < 16:
            raise ValueError("need at least 16 angular samples")
        parameters = [(2.0 * math.pi * i / n,) for i in range(n)]
        segments = [(i, (i + 1) % n) for i in range(n)]
        triangles = []
    elif d == 3:
        level = int(resolution)
        if level < 2:
            raise ValueError("need icosphere subdivision level >= 2")
        verts, faces = _icosphere(level)
        parameters = [tuple(v) for v in verts]
        segments = []
        triangles = faces
    else:
        raise ValueError("fiber spheres are built for models with d in {2, 3}")
    Q, P = _initial_points(model, q, parameters, "sphere")
    return FiberSphereMesh(
        base_point=q,
        kind="sphere",
        inner_radius=None,
        fiber_dim=d,
        resolution=int(resolution),
        parameters=parameters,
        initial_q=Q,
        initial_p=P,
        images_q=Q.copy(),
        images_p=P.copy(),
        segments=segments,
        triangles=triangles,
    )


def initial_punctured_disc(
    model, q, resolution, inner_radius=DEFAULT_INNER_RADIUS
) -> FiberSphereMesh:
    """Mesh of the punctured radial disc {r u : r in [eps, 1], u on Sigma_q}.

    d = 2: triangulated annulus, resolution angular samples (>= 16).
    d = 3: tetrahedralized spherical shell, resolution = icosphere level
    (>= 1); tet meshes are measured at fixed resolution (no adaptive
    refinement), with the certificate taken from a full rebuild at the
    next level.
    """
    q = _check_base_point(model, q)
    eps = float(inner_radius)
    if not 0.0 < eps < 1.0:
        raise ValueError("inner_radius must lie in (0, 1)")
    d = model.config_dim
    if d == 2:
        n = int(resolution)
        if n < 16:
            raise ValueError("need at least 16 angular samples")
        rings = max(2, math.ceil((1.0 - eps) * n / (2.0 * math.pi)))
        parameters = []
        for j in range(rings + 1):
            r = eps + (1.0 - eps) * j / rings
            for i in range(n):
                parameters.append((2.0 * math.pi * i / n, r))
        triangles = []
        for j in range(rings):
            for i in range(n):
                v00 = j * n + i
                v01 = j * n + (i + 1) % n
                v10 = (j + 1) * n + i
                v11 = (j + 1) * n + (i + 1) % n
                triangles.append((v00, v01, v11))
                triangles.append((v00, v11, v10))
        tets = []
    elif d == 3:
        level = int(resolution)
        if level < 1:
            raise ValueError("need icosphere subdivision level >= 1")
        verts, faces = _icosphere(level)
        layers = max(2, 2**level)
        nv = len(verts)
        parameters = []
        for k in range(layers + 1):
            r = eps + (1.0 - eps) * k / layers
            for v in verts:
                parameters.append((v[0], v[1], v[2], r))
        tets = []
        for k in range(layers):
            lo = k * nv
            hi = (k + 1) * nv
            for a, b, c in faces:
                tets.extend(_prism_tets(lo + a, lo + b, lo + c, hi - lo))
        triangles = []
    else:
        raise ValueError("fiber discs are built for models with d in {2, 3}")
    Q, P = _initial_points(model, q, parameters, "punctured_disc")
    return FiberSphereMesh(
        base_point=q,
        kind="punctured_disc",
        inner_radius=eps,
        fiber_dim=d,
        resolution=int(resolution),
        parameters=parameters,
        initial_q=Q,
        initial_p=P,
        images_q=Q.copy(),
        images_p=P.copy(),
        segments=[],
        triangles=triangles,
        tets=tets,
    )


def _prism_tets(a0, b0, c0, up):
    """Split the prism over triangle (a0, b0, c0) into 3 conforming tets.

    The quad face over each triangle edge is cut along the diagonal from
    the bottom copy of its smaller index to the top copy of its larger, a
    rule that depends only on the edge, so adjacent prisms tile without
    cracks.  Sorting the corners makes all three quads of this prism
    follow that rule at once; orientation is irrelevant here because
    volumes are measured as absolute determinants.
    """
    a, b, c = sorted((a0, b0, c0))
    a1, b1, c1 = a + up, b + up, c + up
    return [(a, b, c, c1), (a, b, c1, b1), (a, a1, b1, c1)]


def _icosahedron():
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    raw = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in raw]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    return verts, faces


def _icosphere(level):
    """Icosahedral triangulation of S^2 after `level` 4-to-1 subdivisions."""
    verts, faces = _icosahedron()
    for _ in range(level):
        cache = {}
        new_faces = []

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            idx = cache.get(key)
            if idx is None:
                v = verts[i] + verts[j]
                v /= np.linalg.norm(v)
                verts.append(v)
                idx = len(verts) - 1
                cache[key] = idx
            return idx

        for a, b, c in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            new_faces.extend(
                [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
            )
        faces = new_faces
    return verts, faces


# ---------------------------------------------------------------------------
# refinement and measurement


def _parameter_midpoint(mesh, pa, pb):
    if mesh.fiber_dim == 2:
        ta, tb = pa[0], pb[0]
        # circular midpoint along the shorter arc
        diff = (tb - ta + math.pi) % (2.0 * math.pi) - math.pi
        theta = (ta + 0.5 * diff) % (2.0 * math.pi)
        if mesh.kind == "punctured_disc":
            return (theta, 0.5 * (pa[1] + pb[1]))
        return (theta,)
    u = np.array(pa[:3]) + np.array(pb[:3])
    u /= np.linalg.norm(u)
    if mesh.kind == "punctured_disc":
        return (u[0], u[1], u[2], 0.5 * (pa[3] + pb[3]))
    return (u[0], u[1], u[2])


def _phase_matrix(mesh, weights):
    X = np.hstack([mesh.images_q, mesh.images_p])
    if weights is not None:
        X = X * np.asarray(weights, dtype=float)
    return X


def _edge_keys(mesh):
    if mesh.segments:
        return [(min(a, b), max(a, b)) for a, b in mesh.segments]
    seen = set()
    for tri in mesh.triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            seen.add((min(a, b), max(a, b)))
    return sorted(seen)


def _marked_edges(mesh, model, threshold, weights):
    keys = _edge_keys(mesh)
    if not keys:
        return []
    idx = np.array(keys)
    X = _phase_matrix(mesh, weights)
    diffs = X[idx[:, 1]] - X[idx[:, 0]]
    long = np.linalg.norm(diffs, axis=1) > threshold
    if model.torus_chart:
        dq = mesh.images_q[idx[:, 1]] - mesh.images_q[idx[:, 0]]
        long |= np.any(np.abs(dq) > WRAP_GUARD, axis=1)
    return [keys[i] for i in np.nonzero(long)[0]]


def _parameter_embedding(mesh):
    """Embed vertex parameters in Euclidean space to compare edge extents."""
    pars = np.array([tuple(p) for p in mesh.parameters], dtype=float)
    if mesh.fiber_dim == 2:
        cols = [np.cos(pars[:, 0]), np.sin(pars[:, 0])]
        if mesh.kind == "punctured_disc":
            cols.append(pars[:, 1])
        return np.stack(cols, axis=1)
    return pars  # unit vector, plus the radius column for discs


def _longest_edge_closure(mesh, marked):
    """Grow the marked set until every touched triangle splits its
    parameter-longest edge.

    Bisecting only the image-long edges need not terminate: a triangle
    whose image folds sharply can keep spawning children as long as the
    parent, with the parameter wedge never narrowing.  Forcing the
    parameter-longest edge into every split (Rivara's scheme) makes the
    parameter diameter of each touched triangle shrink geometrically, so
    a Lipschitz bound on the flow map ends the refinement.
    """
    if not mesh.triangles or not marked:
        return marked
    E = _parameter_embedding(mesh)
    tris = np.array(mesh.triangles)
    slots = []
    for i, j in ((0, 1), (1, 2), (2, 0)):
        a, b = tris[:, i], tris[:, j]
        slots.append(np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1))
    all_keys = np.concatenate(slots)
    uniq, inv = np.unique(all_keys, axis=0, return_inverse=True)
    inv = inv.reshape(3, len(tris)).T
    plen = np.linalg.norm(E[uniq[:, 1]] - E[uniq[:, 0]], axis=1)
    longest = inv[np.arange(len(tris)), np.argmax(plen[inv], axis=1)]
    key_id = {tuple(k): i for i, k in enumerate(uniq)}
    flag = np.zeros(len(uniq), dtype=bool)
    flag[[key_id[k] for k in marked]] = True
    while True:
        grown = longest[flag[inv].any(axis=1)]
        before = flag.sum()
        flag[grown] = True
        if flag.sum() == before:
            break
    return [tuple(uniq[i]) for i in np.nonzero(flag)[0]]


def _insert_midpoints(mesh, model, marked, config):
    """Add one midpoint vertex per marked edge, integrated from t = 0."""
    new_params = [
        _parameter_midpoint(mesh, mesh.parameters[a], mesh.parameters[b])
        for a, b in marked
    ]
    Q0, P0 = _initial_points(model, mesh.base_point, new_params, mesh.kind)
    Qt, Pt = Q0.copy(), P0.copy()
    prev = 0.0
    for t in mesh.advance_times:
        Qt, Pt = flow_batch(model, Qt, Pt, prev, t, config)
        prev = t
    if prev != mesh.current_time:
        Qt, Pt = flow_batch(model, Qt, Pt, prev, mesh.current_time, config)
    base = mesh.vertex_count
    midpoint_of = {}
    for offset, ((a, b), param) in enumerate(zip(marked, new_params)):
        midpoint_of[(a, b)] = base + offset
        mesh.parameters.append(param)
        mesh.refinement_log.append((mesh.current_time, a, b, base + offset))
    mesh.initial_q = np.vstack([mesh.initial_q, Q0])
    mesh.initial_p = np.vstack([mesh.initial_p, P0])
    mesh.images_q = np.vstack([mesh.images_q, Qt])
    mesh.images_p = np.vstack([mesh.images_p, Pt])

    if mesh.segments:
        new_segments = []
        for a, b in mesh.segments:
            m = midpoint_of.get((min(a, b), max(a, b)))
            if m is None:
                new_segments.append((a, b))
            else:
                new_segments.extend([(a, m), (m, b)])
        mesh.segments = new_segments
    else:
        E = _parameter_embedding(mesh)
        new_triangles = []
        for tri in mesh.triangles:
            new_triangles.extend(_split_triangle(tri, midpoint_of, E))
        mesh.triangles = new_triangles


def _split_triangle(tri, midpoint_of, embed):
    v0, v1, v2 = tri
    m01 = midpoint_of.get((min(v0, v1), max(v0, v1)))
    m12 = midpoint_of.get((min(v1, v2), max(v1, v2)))
    m20 = midpoint_of.get((min(v2, v0), max(v2, v0)))
    count = (m01 is not None) + (m12 is not None) + (m20 is not None)
    if count == 0:
        return [tri]
    if count == 3:
        return [(v0, m01, m20), (v1, m12, m01), (v2, m20, m12), (m01, m12, m20)]
    # rotate so the first edge (v0, v1) is marked
    while m01 is None:
        v0, v1, v2 = v1, v2, v0
        m01, m12, m20 = m12, m20, m01
    if count == 1:
        return [(v0, m01, v2), (m01, v1, v2)]
    # two marked edges; rotate so they are (v0,v1) and (v1,v2) with
    # (v0,v1) the parameter-longer of the two
    if m20 is not None:
        v0, v1, v2 = v2, v0, v1
        m01, m12, m20 = m20, m01, m12
    if np.linalg.norm(embed[v1] - embed[v0]) < np.linalg.norm(
        embed[v2] - embed[v1]
    ):
        v0, v1, v2 = v2, v1, v0
        m01, m12 = m12, m01
    # bisect the longer edge first, then cut the quad (v0, m01, m12, v2)
    # along the diagonal (m01, v2), matching bisection of the child
    return [(v1, m12, m01), (v0, m01, v2), (m01, m12, v2)]


def _measure_volume(mesh, weights) -> float:
    X = _phase_matrix(mesh, weights)
    if mesh.segments:
        idx = np.array(mesh.segments)
        diffs = X[idx[:, 1]] - X[idx[:, 0]]
        return float(np.sum(np.linalg.norm(diffs, axis=1)))
    if mesh.triangles:
        idx = np.array(mesh.triangles)
        u = X[idx[:, 1]] - X[idx[:, 0]]
        v = X[idx[:, 2]] - X[idx[:, 0]]
        uu = np.einsum("ij,ij->i", u, u)
        vv = np.einsum("ij,ij->i", v, v)
        uv = np.einsum("ij,ij->i", u, v)
        gram = np.maximum(uu * vv - uv * uv, 0.0)
        return float(0.5 * np.sum(np.sqrt(gram)))
    idx = np.array(mesh.tets)
    u = X[idx[:, 1]] - X[idx[:, 0]]
    v = X[idx[:, 2]] - X[idx[:, 0]]
    w = X[idx[:, 3]] - X[idx[:, 0]]
    g11 = np.einsum("ij,ij->i", u, u)
    g12 = np.einsum("ij,ij->i", u, v)
    g13 = np.einsum("ij,ij->i", u, w)
    g22 = np.einsum("ij,ij->i", v, v)
    g23 = np.einsum("ij,ij->i", v, w)
    g33 = np.einsum("ij,ij->i", w, w)
    det = (
        g11 * (g22 * g33 - g23 * g23)
        - g12 * (g12 * g33 - g23 * g13)
        + g13 * (g12 * g23 - g22 * g13)
    )
    return float(np.sum(np.sqrt(np.maximum(det, 0.0))) / 6.0)


def _advance(mesh, model, t_to, config):
    Q, P = flow_batch(
        model, mesh.images_q, mesh.images_p, mesh.current_time, t_to, config
    )
    mesh.images_q = Q
    mesh.images_p = P
    mesh.current_time = float(t_to)


def _refine_to_threshold(mesh, model, threshold, budget, config, weights, partial):
    if not (mesh.segments or mesh.triangles):
        return  # tet meshes are fixed-resolution
    for _ in range(_MAX_REFINE_PASSES):
        marked = _marked_edges(mesh, model, threshold, weights)
        if not marked:
            return
        marked = _longest_edge_closure(mesh, marked)
        if mesh.vertex_count + len(marked) > budget:
            raise BudgetExceeded(
                f"refinement needs {mesh.vertex_count + len(marked)} vertices, "
                f"budget is {budget} (t = {mesh.current_time:g})",
                partial=partial(),
            )
        _insert_midpoints(mesh, model, marked, config)
    raise BudgetExceeded(
        f"refinement did not settle in {_MAX_REFINE_PASSES} passes "
        f"(t = {mesh.current_time:g}); edges this persistent mean the "
        "numeric flow map cannot be resolved at this threshold, which is "
        "typical of exponential stretching or a too-coarse step",
        partial=partial(),
    )


def evolve_and_measure(
    model,
    mesh: FiberSphereMesh,
    times,
    config: FlowConfig | None = None,
    refine_threshold: float = 0.25,
    volume_budget: int = 200_000,
    *,
    metric_weights=None,
    certificate: bool = True,
) -> VolumeSeries:
    """Flow the mesh through the given times, refining and measuring.

    At each time every vertex advances from the previous sample; edges
    longer than refine_threshold (chart phase-space length, optionally
    reweighted by metric_weights) get their parameter midpoint inserted
    and integrated from t = 0 until all edges pass, so the mesh always
    represents the flowed initial submanifold.  Exceeding volume_budget
    raises BudgetExceeded carrying the partial series measured so far.

    The returned series carries a resolution certificate: the relative
    volume change under one further global refinement at the final time
    (computed on a throwaway copy, exempt from the budget).
    """
    config = config or FlowConfig()
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")
    if times and times[0] < mesh.current_time:
        raise ValueError(
            f"mesh already evolved to t = {mesh.current_time:g} > times[0]"
        )
    if refine_threshold <= 0:
        raise ValueError("refine_threshold must be positive")
    if volume_budget <= 0:
        raise ValueError("volume_budget must be positive")

    out_times: list = []
    volumes: list = []
    counts: list = []

    def partial():
        if not out_times:
            return None
        return VolumeSeries(
            tuple(out_times), tuple(volumes), tuple(counts), mesh.kind, None
        )

    if mesh.vertex_count > volume_budget:
        raise BudgetExceeded(
            f"initial mesh has {mesh.vertex_count} vertices, budget is "
            f"{volume_budget}",
            partial=None,
        )

    for t in times:
        if t > mesh.current_time:
            _advance(mesh, model, t, config)
            mesh.advance_times.append(mesh.current_time)
        _refine_to_threshold(
            mesh, model, refine_threshold, volume_budget, config, metric_weights,
            partial,
        )
        out_times.append(mesh.current_time)
        volumes.append(_measure_volume(mesh, metric_weights))
        counts.append(mesh.vertex_count)

    cert = None
    if certificate and out_times:
        cert = _resolution_certificate(
            mesh, model, config, metric_weights, volumes[-1]
        )
    return VolumeSeries(
        tuple(out_times), tuple(volumes), tuple(counts), mesh.kind, cert
    )


def _resolution_certificate(mesh, model, config, weights, last_volume):
    """Relative volume change under one global refinement at the final time."""
    if mesh.tets:
        probe = initial_punctured_disc(
            model, mesh.base_point, mesh.resolution + 1, mesh.inner_radius
        )
        for t in mesh.advance_times:
            _advance(probe, model, t, config)
        if probe.current_time < mesh.current_time:
            _advance(probe, model, mesh.current_time, config)
        refined = _measure_volume(probe, weights)
    else:
        probe = mesh.copy()
        marked = _edge_keys(probe)
        _insert_midpoints(probe, model, marked, config)
        refined = _measure_volume(probe, weights)
    return abs(refined - last_volume) / last_volume


def slow_vol_fit(series: VolumeSeries, window_fraction: float = 0.5) -> SlowVolFit:
    """Trailing-window scaling fit of the volume series.

    Requires at least 8 samples spanning a decade of times; the window
    bounds in the result are in time units.
    """
    if len(series.times) >= 2 and series.times[-1] < 10.0 * series.times[0]:
        raise SeriesTooShort(
            f"times span {series.times[0]:g}..{series.times[-1]:g}, "
            "need at least one decade for a scaling fit"
        )
    fit = fit_scaling(series.times, series.volumes, window_fraction)
    return SlowVolFit(
        exponent=fit.exponent,
        window=fit.window,
        residual=fit.residual,
        classification=fit.classification,
    )


def reduction_series(model, q, times, config, thresholds: MeshThresholds):
    """Run the disc and sphere experiments; returns (disc, sphere) series."""
    sphere = initial_fiber_sphere(model, q, thresholds.resolution)
    sphere_series = evolve_and_measure(
        model, sphere, times, config,
        thresholds.refine_threshold, thresholds.volume_budget,
    )
    disc_res = thresholds.disc_resolution
    if disc_res <= 0:
        d = model.config_dim
        disc_res = thresholds.resolution if d == 2 else max(1, thresholds.resolution - 1)
    disc = initial_punctured_disc(model, q, disc_res, thresholds.inner_radius)
    disc_series = evolve_and_measure(
        model, disc, times, config,
        thresholds.refine_threshold, thresholds.volume_budget,
    )
    return disc_series, sphere_series


def reduction_gap(model, q, times, config, thresholds: MeshThresholds):
    """Fitted (disc_exponent, sphere_exponent) over the same time grid.

    The theorem-side expectation is disc <= sphere + 1: the disc is a
    union of rescaled spheres whose individual growth is bounded by the
    sphere's, and the radial integral contributes at most one degree.
    """
    disc_series, sphere_series = reduction_series(
        model, q, times, config, thresholds
    )
    disc_fit = slow_vol_fit(disc_series, thresholds.window_fraction)
    sphere_fit = slow_vol_fit(sphere_series, thresholds.window_fraction)
    return disc_fit.exponent, sphere_fit.exponent


def integral_growth_check(samples):
    """Exponents of (cumulative integral of f, f) from (r, f(r)) samples.

    The integral over [0, r_0] is not sampled and is estimated as
    r_0 f(r_0); only the trailing window enters the fits, so the head
    estimate is immaterial.  Contract under test: the integral exponent
    exceeds the integrand exponent by at most one.
    """
    rs = np.array([float(r) for r, _ in samples])
    fs = np.array([float(f) for _, f in samples])
    if np.any(rs <= 0) or np.any(fs <= 0):
        raise ValueError("samples must be positive")
    if np.any(np.diff(rs) <= 0):
        raise ValueError("sample grid must be increasing")
    F = rs[0] * fs[0] + cumulative_trapezoid(rs, fs)
    integral_fit = fit_scaling(rs, F)
    integrand_fit = fit_scaling(rs, fs)
    return integral_fit.exponent, integrand_fit.exponent


# ---------------------------------------------------------------------------
# CSV plumbing


def write_volume_csv(path, series: VolumeSeries):
    """Write the series as "t,volume,vertices" rows."""
    lines = ["t,volume,vertices"]
    for t, v, n in zip(series.times, series.volumes, series.vertex_counts):
        lines.append(f"{float(t)!s},{float(v)!s},{n}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_volume_csv(path):
    """Read back (times, volumes, vertex_counts) written by write_volume_csv."""
    with open(path) as fh:
        rows = [line.strip() for line in fh if line.strip()]
    if not rows or rows[0] != "t,volume,vertices":
        raise ValueError(f"{path} is not a volume series file")
    times = []
    volumes = []
    counts = []
    for row in rows[1:]:
        t, v, n = row.split(",")
        times.append(float(t))
        volumes.append(float(v))
        counts.append(int(n))
    return times, volumes, counts


def write_mesh_csv(path_prefix, mesh: FiberSphereMesh):
    """Dump vertices and cells as CSV for external viewers.

    Writes <prefix>_vertices.csv (index, image coordinates) and
    <prefix>_cells.csv (cell kind and vertex indices).
    """
    d = mesh.images_q.shape[1]
    header = (
        "index,"
        + ",".join(f"q{i + 1}" for i in range(d))
        + ","
        + ",".join(f"p{i + 1}" for i in range(d))
    )
    lines = [header]
    for i in range(mesh.vertex_count):
        coords = [str(float(v)) for v in mesh.images_q[i]]
        coords += [str(float(v)) for v in mesh.images_p[i]]
        lines.append(f"{i}," + ",".join(coords))
    with open(f"{path_prefix}_vertices.csv", "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")

    cell_lines = ["kind,v1,v2,v3,v4"]
    for a, b in mesh.segments:
        cell_lines.append(f"segment,{a},{b},,")
    for a, b, c in mesh.triangles:
        cell_lines.append(f"triangle,{a},{b},{c},")
    for a, b, c, dd in mesh.tets:
        cell_lines.append(f"tet,{a},{b},{c},{dd}")
    with open(f"{path_prefix}_cells.csv", "w", newline="") as fh:
        fh.write("\n".join(cell_lines) + "\n")
