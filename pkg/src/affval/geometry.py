"""Polytope algebra in ambient dimensions 1-3.

Polytopes carry an irredundant vertex description; the halfspace description
is derived lazily and cached.  Lower-dimensional ("degenerate") polytopes are
first-class values with volume zero; they expose an affine chart
(origin, orthonormal basis) so that operations can run inside the affine hull.

All values are immutable after construction and all operations are pure.
Coordinates are plain floats; a single geometric tolerance EPS_GEOM governs
identity tests on unit-scale data, FEAS_TOL governs containment slack.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DimMismatch, EmptyInput, SingularMap

EPS_GEOM = 1e-9
FEAS_TOL = 1e-7
MAX_DIM = 3


def _as_point_array(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        # a flat sequence is read as several 1-d points
        pts = pts[:, None]
    return pts


def _dedupe_rows(pts: np.ndarray, tol: float) -> np.ndarray:
    if len(pts) <= 1:
        return pts
    keep: list[int] = []
    for i, p in enumerate(pts):
        if all(np.max(np.abs(p - pts[j])) > tol for j in keep):
            keep.append(i)
    return pts[keep]


def _lex_sorted(pts: np.ndarray) -> np.ndarray:
    order = np.lexsort(pts.T[::-1])
    return pts[order]


def _snap_columns(pts: np.ndarray, tol: float) -> np.ndarray:
    """Merge per-axis coordinate values closer than tol to a common
    representative.  Solve noise can leave a point an ulp outside an
    axis-aligned facet, which breaks the lexicographic ordering that hulling
    relies on; snapping restores exact ties without moving any coordinate by
    more than tol."""
    out = pts.copy()
    for j in range(pts.shape[1]):
        col = out[:, j]
        order = np.argsort(col)
        rep = col[order[0]]
        for idx in order:
            if col[idx] - rep > tol:
                rep = col[idx]
            else:
                col[idx] = rep
    return out


def _affine_chart(pts: np.ndarray, tol: float = EPS_GEOM):
    """Origin, orthonormal basis and rank of the affine hull of `pts`.

    Full-dimensional point sets get the identity chart so that coordinates
    pass through untouched (SVD charts would inject ulp-level rotation noise
    into quantities that are otherwise exact)."""
    n = pts.shape[1]
    origin = pts.mean(axis=0)
    centered = pts - origin
    if len(pts) == 1:
        return origin, np.zeros((n, 0)), 0
    _, s, vt = np.linalg.svd(centered, full_matrices=True)
    scale = max(1.0, s[0] if len(s) else 1.0)
    rank = int(np.sum(s > tol * scale))
    if rank == n:
        return np.zeros(n), np.eye(n), n
    return origin, vt[:rank].T, rank


def _hull_1d(z: np.ndarray) -> np.ndarray:
    flat = z[:, 0]
    return z[[int(np.argmin(flat)), int(np.argmax(flat))]]


def _hull_2d(z: np.ndarray) -> np.ndarray:
    """Monotone chain; strictly convex corners only (collinear points dropped)."""
    scale = max(1.0, float(np.abs(z).max()))
    tol = 1e-10 * scale * scale
    order = np.lexsort((z[:, 1], z[:, 0]))
    pts = z[order]

    def chain(seq):
        out: list[np.ndarray] = []
        for p in seq:
            while len(out) >= 2:
                a, b = out[-2], out[-1]
                cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
                if cross <= tol:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = chain(pts)
    upper = chain(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def _hull_3d(z: np.ndarray) -> np.ndarray:
    try:
        hull = ConvexHull(z)
    except QhullError:
        hull = ConvexHull(z, qhull_options="QJ1e-12")
    verts = z[hull.vertices]
    # solve noise can leave a point an ulp outside a face, which Qhull then
    # reports as a vertex; a real vertex is tight on facets whose normals
    # span the space
    eqs = hull.equations
    scale = max(1.0, float(np.abs(z).max()))
    keep = []
    for i, v in enumerate(verts):
        tight = np.abs(eqs[:, :-1] @ v + eqs[:, -1]) <= 1e-9 * scale
        if np.count_nonzero(tight) >= 3 and np.linalg.matrix_rank(
                eqs[tight, :-1], tol=1e-7) == 3:
            keep.append(i)
    return verts[keep] if keep else verts


def _hull_in_chart(z: np.ndarray, d: int) -> np.ndarray:
    if d == 0:
        return z[:1]
    if d == 1:
        return _hull_1d(z)
    if d == 2:
        return _hull_2d(z)
    return _hull_3d(z)


def _ccw_order(verts: np.ndarray) -> np.ndarray:
    c = verts.mean(axis=0)
    ang = np.arctan2(verts[:, 1] - c[1], verts[:, 0] - c[0])
    return verts[np.argsort(ang)]


def _unit_rows(A: np.ndarray, b: np.ndarray):
    norms = np.linalg.norm(A, axis=1)
    norms[norms == 0] = 1.0
    return A / norms[:, None], b / norms


class Polytope:
    """Bounded convex polytope with synchronized V- and H-descriptions."""

    def __init__(self, vertices: np.ndarray, dim: int | None = None):
        verts = _as_point_array(vertices)
        if verts.size == 0:
            raise EmptyInput("polytope needs at least one vertex")
        n = verts.shape[1] if dim is None else dim
        if n not in (1, 2, 3):
            raise DimMismatch(f"ambient dimension {n} outside supported range 1..{MAX_DIM}")
        if not np.all(np.isfinite(verts)):
            raise ValueError("non-finite vertex coordinates")
        self.dim = n
        self.vertices = _lex_sorted(verts)
        self.vertices.setflags(write=False)

    # -- basic structure ---------------------------------------------------

    @cached_property
    def chart(self):
        """(origin, orthonormal basis (n x d)) of the affine hull."""
        origin, basis, _ = _affine_chart(self.vertices)
        return origin, basis

    @cached_property
    def intrinsic_dim(self) -> int:
        return self.chart[1].shape[1]

    @property
    def is_degenerate(self) -> bool:
        return self.intrinsic_dim < self.dim

    @cached_property
    def chart_vertices(self) -> np.ndarray:
        origin, basis = self.chart
        return (self.vertices - origin) @ basis

    @cached_property
    def bbox(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @cached_property
    def barycenter(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    @cached_property
    def diameter(self) -> float:
        lo, hi = self.bbox
        return float(np.linalg.norm(hi - lo))

    # -- H-description -----------------------------------------------------

    @cached_property
    def chart_halfspaces(self):
        """Facet inequalities of the polytope inside its own chart."""
        z = self.chart_vertices
        d = self.intrinsic_dim
        if d == 0:
            return np.zeros((0, 0)), np.zeros(0)
        if d == 1:
            flat = z[:, 0]
            A = np.array([[1.0], [-1.0]])
            b = np.array([float(flat.max()), -float(flat.min())])
            return A, b
        if d == 2:
            ordered = _ccw_order(z)
            e = np.roll(ordered, -1, axis=0) - ordered
            A = np.stack([e[:, 1], -e[:, 0]], axis=1)
            b = np.einsum("ij,ij->i", A, ordered)
            return _unit_rows(A, b)
        hull = ConvexHull(z)
        eqs = _dedupe_rows(hull.equations, 1e-9)
        return _unit_rows(eqs[:, :-1], -eqs[:, -1])

    @cached_property
    def halfspaces(self):
        """Ambient (A, b) with A x <= b.  Degenerate polytopes get paired
        +/- rows spanning the orthogonal complement of their affine hull."""
        origin, basis = self.chart
        Ac, bc = self.chart_halfspaces
        if Ac.shape[1]:
            A = Ac @ basis.T
            b = bc + Ac @ (basis.T @ origin)
        else:
            A = np.zeros((0, self.dim))
            b = np.zeros(0)
        if self.is_degenerate:
            comp = _null_complement(basis, self.dim)
            off = comp @ origin
            A = np.vstack([A, comp, -comp])
            b = np.concatenate([b, off, -off])
        return A, b

    # -- predicates ----------------------------------------------------------

    def boundary_distance(self, x) -> float:
        """max_i (a_i . x - b_i); <= 0 inside, grows outward."""
        x = np.asarray(x, dtype=float)
        A, b = self.halfspaces
        if len(A) == 0:
            return float(np.max(np.abs(x - self.vertices[0])))
        return float(np.max(A @ x - b))

    def contains(self, x, tol: float = FEAS_TOL) -> bool:
        return self.boundary_distance(x) <= tol

    def contains_many(self, X: np.ndarray, tol: float = FEAS_TOL) -> np.ndarray:
        A, b = self.halfspaces
        if len(A) == 0:
            return np.max(np.abs(X - self.vertices[0]), axis=1) <= tol
        return np.max(X @ A.T - b, axis=1) <= tol

    def normal_cone_generators(self, x, tol: float = FEAS_TOL) -> np.ndarray:
        """Outer normals of facets tight at x (empty at interior points)."""
        x = np.asarray(x, dtype=float)
        A, b = self.halfspaces
        if len(A) == 0:
            return np.eye(self.dim).repeat(2, axis=0) * np.array([1, -1] * self.dim)[:, None]
        tight = np.abs(A @ x - b) <= tol * max(1.0, float(np.abs(b).max(initial=1.0)))
        return A[tight]

    # -- measures ------------------------------------------------------------

    @cached_property
    def volume(self) -> float:
        if self.is_degenerate:
            return 0.0
        v = self.vertices
        if self.dim == 1:
            return float(v.max() - v.min())
        if self.dim == 2:
            o = _ccw_order(v)
            x, y = o[:, 0], o[:, 1]
            return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
        return float(ConvexHull(v).volume)

    # -- constructions -------------------------------------------------------

    def translate(self, y) -> "Polytope":
        return Polytope(self.vertices + np.asarray(y, dtype=float))

    def scale(self, t: float) -> "Polytope":
        return Polytope(self.vertices * float(t))

    def shrink(self, factor: float) -> "Polytope":
        """Contract toward the barycenter; factor in (0, 1]."""
        c = self.barycenter
        return Polytope(c + factor * (self.vertices - c))

    def grid_points(self, per_axis: int, margin: float = 0.0) -> np.ndarray:
        """Axis-aligned grid over the bounding box, clipped to the polytope."""
        lo, hi = self.bbox
        axes = [np.linspace(lo[i], hi[i], per_axis) for i in range(self.dim)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        mask = np.array([self.boundary_distance(p) <= -margin + FEAS_TOL for p in mesh])
        return mesh[mask]

    def __repr__(self):
        return f"Polytope(dim={self.dim}, nverts={len(self.vertices)}, vol={self.volume:.6g})"


def _null_complement(basis: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal rows spanning the complement of the chart basis columns."""
    if basis.shape[1] == 0:
        return np.eye(n)
    full = np.linalg.svd(basis, full_matrices=True)[0]
    return full[:, basis.shape[1]:].T


# -- public constructors ------------------------------------------------------


def hull(points) -> Polytope:
    """Irredundant convex hull; lower-dimensional input yields a degenerate
    polytope (volume 0) rather than an error."""
    pts = _as_point_array(points)
    if pts.size == 0:
        raise EmptyInput("hull of no points")
    scale = max(1.0, float(np.abs(pts).max()))
    pts = _snap_columns(pts, 1e-10 * scale)
    pts = _dedupe_rows(pts, 1e-10 * scale)
    n = pts.shape[1]
    origin, basis, d = _affine_chart(pts)
    if d == n:
        # identity chart: hull the raw coordinates, keeping them exact
        verts = _hull_in_chart(pts, n)
    else:
        z = (pts - origin) @ basis
        extreme = _hull_in_chart(z, d)
        verts = origin + extreme @ basis.T
    return Polytope(verts, dim=n)


def box(lo, hi) -> Polytope:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    corners = np.array(list(itertools.product(*zip(lo, hi))))
    return hull(corners)


def cube(n: int, half_width: float = 1.0) -> Polytope:
    """The centered cube [-w, w]^n."""
    return box(-half_width * np.ones(n), half_width * np.ones(n))


def segment(p, q) -> Polytope:
    return hull(np.vstack([_as_point_array([p]), _as_point_array([q])]))


def point(p) -> Polytope:
    return Polytope(_as_point_array([p]))


# -- operations ----------------------------------------------------------------


def vertices_from_halfspaces(A: np.ndarray, b: np.ndarray, dim: int) -> np.ndarray:
    """All vertices of {x : A x <= b} by basis enumeration.

    Suitable for the small systems arising at n <= 3; returns an empty array
    when the region is infeasible (or unbounded with no basic solutions).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m = len(A)
    if m < dim:
        return np.zeros((0, dim))
    combos = np.array(list(itertools.combinations(range(m), dim)))
    mats = A[combos]
    dets = np.abs(np.linalg.det(mats))
    row_scale = np.maximum(np.linalg.norm(mats, axis=2).prod(axis=1), 1e-30)
    ok = dets > 1e-10 * row_scale
    if not np.any(ok):
        return np.zeros((0, dim))
    sols = np.linalg.solve(mats[ok], b[combos[ok]][..., None])[..., 0]
    scale = np.maximum(1.0, np.abs(sols).max(axis=1))
    feas = np.all(sols @ A.T - b <= (FEAS_TOL * scale)[:, None], axis=1)
    pts = sols[feas]
    if len(pts) == 0:
        return np.zeros((0, dim))
    return _dedupe_rows(_lex_sorted(pts), 1e-7 * max(1.0, float(np.abs(pts).max())))


def minkowski_sum(P: Polytope, Q: Polytope) -> Polytope:
    if P.dim != Q.dim:
        raise DimMismatch(f"{P.dim} vs {Q.dim}")
    sums = (P.vertices[:, None, :] + Q.vertices[None, :, :]).reshape(-1, P.dim)
    return hull(sums)


def intersect(P: Polytope, Q: Polytope) -> Polytope | None:
    """Intersection polytope, or None when empty."""
    if P.dim != Q.dim:
        raise DimMismatch(f"{P.dim} vs {Q.dim}")
    A1, b1 = P.halfspaces
    A2, b2 = Q.halfspaces
    pts = vertices_from_halfspaces(np.vstack([A1, A2]), np.concatenate([b1, b2]), P.dim)
    if len(pts) == 0:
        return None
    return hull(pts)


def affine_image(P: Polytope, m: "AffineMap") -> Polytope:
    if abs(m.det) < 1e-12:
        raise SingularMap(f"|det| = {abs(m.det):.3e}")
    return hull(m.apply(P.vertices))


def polytope_difference(P: Polytope, Q: Polytope) -> list[Polytope]:
    """Partition of the closure of P \\ Q into full-dimensional polytopes."""
    if Q.is_degenerate:
        return [P] if not P.is_degenerate else []
    AQ, bQ = Q.halfspaces
    AP, bP = P.halfspaces
    parts: list[Polytope] = []
    acc_A: list[np.ndarray] = []
    acc_b: list[float] = []
    for a, beta in zip(AQ, bQ):
        A = np.vstack([AP, -a[None, :]] + [r[None, :] for r in acc_A])
        b = np.concatenate([bP, [-beta], np.asarray(acc_b)])
        pts = vertices_from_halfspaces(A, b, P.dim)
        if len(pts):
            piece = hull(pts)
            if not piece.is_degenerate:
                parts.append(piece)
        acc_A.append(a)
        acc_b.append(beta)
    return parts


def halfspace_cut(P: Polytope, a, beta: float) -> Polytope | None:
    """P intersected with {x : <a, x> <= beta}, or None when empty."""
    a = np.asarray(a, dtype=float)
    A, b = P.halfspaces
    pts = vertices_from_halfspaces(
        np.vstack([A, a[None, :]]), np.append(b, float(beta)), P.dim
    )
    if len(pts) == 0:
        return None
    return hull(pts)


def vertex_sets_equal(P: Polytope, Q: Polytope, tol: float = EPS_GEOM) -> bool:
    if P.dim != Q.dim or len(P.vertices) != len(Q.vertices):
        return False
    scale = max(1.0, float(np.abs(P.vertices).max()), float(np.abs(Q.vertices).max()))
    return bool(np.max(np.abs(P.vertices - Q.vertices)) <= tol * scale)


# -- affine maps ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AffineMap:
    """x -> matrix @ x + shift with the determinant cached."""

    matrix: np.ndarray
    shift: np.ndarray
    det: float = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        s = np.asarray(self.shift, dtype=float)
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(s))):
            raise ValueError("non-finite affine map data")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "shift", s)
        object.__setattr__(self, "det", float(np.linalg.det(m)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, pts: np.ndarray) -> np.ndarray:
        pts = _as_point_array(pts)
        return pts @ self.matrix.T + self.shift

    def inverse(self) -> "AffineMap":
        if abs(self.det) < 1e-12:
            raise SingularMap("cannot invert")
        inv = np.linalg.inv(self.matrix)
        return AffineMap(inv, -inv @ self.shift)

    @staticmethod
    def identity(n: int) -> "AffineMap":
        return AffineMap(np.eye(n), np.zeros(n))

    @staticmethod
    def translation(y) -> "AffineMap":
        y = np.asarray(y, dtype=float)
        return AffineMap(np.eye(len(y)), y)

    def is_unimodular(self, tol: float = 1e-9) -> bool:
        return abs(abs(self.det) - 1.0) <= tol
