"""Convex functions with polytopal structure.

Representations:

* ``AffineFn``     -- l(x) = <grad, x> + c (a building block, not a ConvexFn);
* ``PAFn``         -- max of affine pieces plus the indicator of a domain
                      polytope; ``domain=None`` means finite-valued on R^n;
* ``QuadFn``       -- a single convex quadratic, optionally restricted;
* ``PLQFn``        -- quadratic on each cell of a polyhedral subdivision;
* ``CylinderFn``   -- epi-sum of a lower-dimensional function with an affine
                      function on a segment, evaluated by 1-d reduction.

Indicator functions are ``PAFn`` values with a single zero piece, so that
functionals that vanish on indicators can be tested directly.  Lattice
operations construct certified representations: ``meet`` reconstructs the
convexification of the pointwise minimum and accepts it only when a grid
certificate confirms it equals the minimum; ``join`` refines cells.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from . import geometry
from .errors import (
    BadInput,
    BadSegment,
    DegenerateDomain,
    DimMismatch,
    EmptyDomain,
    NotConvex,
    OutsideDomain,
)
from .geometry import EPS_GEOM, FEAS_TOL, Polytope, hull, intersect, minkowski_sum

ACTIVE_TOL = 1e-8  # a piece counts as active when within this of the max


# ---------------------------------------------------------------------------
# building blocks


@dataclass(frozen=True, eq=False)
class AffineFn:
    """l(x) = <grad, x> + c."""

    grad: np.ndarray
    c: float

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.grad, dtype=float))
        if not (np.all(np.isfinite(g)) and np.isfinite(self.c)):
            raise ValueError("non-finite affine data")
        object.__setattr__(self, "grad", g)
        object.__setattr__(self, "c", float(self.c))

    @property
    def dim(self) -> int:
        return len(self.grad)

    def __call__(self, x) -> float:
        return float(self.grad @ np.asarray(x, dtype=float) + self.c)

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        return X @ self.grad + self.c


@dataclass(frozen=True, eq=False)
class QuadraticFn:
    """q(x) = 0.5 <x, A x> + <b, x> + c with symmetric A."""

    A: np.ndarray
    b: np.ndarray
    c: float

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        scale = max(1.0, float(np.abs(A).max(initial=0.0)))
        if np.abs(A - A.T).max(initial=0.0) > EPS_GEOM * scale:
            raise BadInput("quadratic matrix is not symmetric")
        object.__setattr__(self, "A", 0.5 * (A + A.T))
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))

    @property
    def dim(self) -> int:
        return len(self.b)

    @cached_property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.A).min())

    @cached_property
    def det_hessian(self) -> float:
        return float(np.linalg.det(self.A))

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.A @ x + self.b @ x + self.c)

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        return 0.5 * np.einsum("ij,jk,ik->i", X, self.A, X) + X @ self.b + self.c

    def gradient(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=float) + self.b

    def compose_affine(self, M: np.ndarray, s: np.ndarray) -> "QuadraticFn":
        """q(Mx + s) as a quadratic in x."""
        M = np.asarray(M, dtype=float)
        s = np.asarray(s, dtype=float)
        A2 = M.T @ self.A @ M
        b2 = M.T @ (self.A @ s + self.b)
        c2 = 0.5 * s @ self.A @ s + self.b @ s + self.c
        return QuadraticFn(A2, b2, float(c2))

    def plus_affine(self, l: AffineFn) -> "QuadraticFn":
        return QuadraticFn(self.A, self.b + l.grad, self.c + l.c)

    def plus_const(self, t: float) -> "QuadraticFn":
        return QuadraticFn(self.A, self.b, self.c + t)


@dataclass(frozen=True, eq=False)
class SubdiffSet:
    """Subdifferential at a point: bounded part plus normal-cone generators."""

    bounded_part: Polytope
    cone_generators: np.ndarray

    @property
    def is_at_interior_point(self) -> bool:
        return len(self.cone_generators) == 0


# ---------------------------------------------------------------------------
# convex function base


class ConvexFn:
    dim: int
    domain: Polytope | None
    is_cylinder: bool = False

    def evaluate(self, x) -> float:
        raise NotImplementedError

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.evaluate(x) for x in np.asarray(X, dtype=float)])

    def __call__(self, x) -> float:
        return self.evaluate(x)


class PAFn(ConvexFn):
    """max of affine pieces, +inf outside the domain polytope (if any)."""

    def __init__(self, pieces, domain: Polytope | None = None, is_cylinder: bool = False):
        ps = tuple(p if isinstance(p, AffineFn) else AffineFn(*p) for p in pieces)
        if not ps:
            raise BadInput("a piecewise affine function needs at least one piece")
        n = ps[0].dim
        if any(p.dim != n for p in ps):
            raise DimMismatch("pieces of mixed dimension")
        if domain is not None and domain.dim != n:
            raise DimMismatch("domain dimension does not match pieces")
        self.pieces = ps
        self.domain = domain
        self.dim = n
        self.is_cylinder = is_cylinder

    @classmethod
    def indicator(cls, P: Polytope) -> "PAFn":
        return cls([AffineFn(np.zeros(P.dim), 0.0)], P)

    @classmethod
    def affine(cls, l: AffineFn, domain: Polytope | None = None) -> "PAFn":
        return cls([l], domain)

    @cached_property
    def G(self) -> np.ndarray:
        return np.array([p.grad for p in self.pieces])

    @cached_property
    def cvec(self) -> np.ndarray:
        return np.array([p.c for p in self.pieces])

    def max_values(self, X: np.ndarray) -> np.ndarray:
        """max over pieces, ignoring the domain."""
        return (X @ self.G.T + self.cvec).max(axis=1)

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.domain is not None and not self.domain.contains(x):
            return np.inf
        return float(np.max(self.G @ x + self.cvec))

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        vals = self.max_values(X)
        if self.domain is not None:
            vals = np.where(self.domain.contains_many(X), vals, np.inf)
        return vals

    @property
    def is_finite_valued(self) -> bool:
        return self.domain is None

    def active_gradients(self, x, tol: float = ACTIVE_TOL) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        vals = self.G @ x + self.cvec
        top = vals.max()
        scale = max(1.0, abs(top))
        return self.G[vals >= top - tol * scale]

    def subdivision_vertices(self):
        """Vertices of the activity subdivision of the domain, with values.

        Works inside the domain's affine chart so degenerate domains are fine.
        """
        P = self.domain
        if P is None:
            raise BadInput("subdivision vertices need a compact domain")
        if P.intrinsic_dim == 0:
            pts = P.vertices[:1]
            return pts, self.max_values(pts)
        origin, Q = P.chart
        d = P.intrinsic_dim
        Ad, bd = P.chart_halfspaces
        Gz = self.G @ Q
        cz = self.cvec + self.G @ origin
        k = len(Gz)
        found: list[np.ndarray] = []
        for i in range(k):
            rows = [Ad]
            rhs = [bd]
            if k > 1:
                others = [j for j in range(k) if j != i]
                rows.append(Gz[others] - Gz[i])
                rhs.append(cz[i] - cz[others])
            pts = geometry.vertices_from_halfspaces(
                np.vstack(rows), np.concatenate(rhs), d
            )
            if len(pts):
                found.append(pts)
        z = geometry._dedupe_rows(
            geometry._lex_sorted(np.vstack(found)), 1e-9 * max(1.0, P.diameter)
        )
        x = origin + z @ Q.T
        return x, self.max_values(x)

    @cached_property
    def cells(self):
        """Activity cells: list of (Polytope, AffineFn); full-dimensional
        relative to the domain, empty or thin cells are dropped."""
        P = self.domain
        if P is None:
            raise BadInput("cells need a compact domain")
        Ad, bd = P.halfspaces
        out = []
        k = len(self.pieces)
        for i in range(k):
            rows = [Ad]
            rhs = [bd]
            if k > 1:
                others = [j for j in range(k) if j != i]
                rows.append(self.G[others] - self.G[i])
                rhs.append(self.cvec[i] - self.cvec[others])
            pts = geometry.vertices_from_halfspaces(
                np.vstack(rows), np.concatenate(rhs), self.dim
            )
            if not len(pts):
                continue
            cell = hull(pts)
            if cell.intrinsic_dim == P.intrinsic_dim:
                out.append((cell, self.pieces[i]))
        return out

    def lipschitz(self) -> float:
        return float(np.linalg.norm(self.G, axis=1).max())

    # -- structural transforms ------------------------------------------------

    def compose_affine(self, M: np.ndarray, s) -> "PAFn":
        """x -> u(Mx + s); domain is mapped by the inverse."""
        M = np.asarray(M, dtype=float)
        s = np.asarray(s, dtype=float)
        pieces = [AffineFn(M.T @ p.grad, p.c + p.grad @ s) for p in self.pieces]
        dom = None
        if self.domain is not None:
            inv = np.linalg.inv(M)
            dom = hull((self.domain.vertices - s) @ inv.T)
        return PAFn(pieces, dom, self.is_cylinder)

    def translate(self, y) -> "PAFn":
        """u composed with translation by -y: x -> u(x - y)."""
        y = np.asarray(y, dtype=float)
        return self.compose_affine(np.eye(self.dim), -y)

    def plus_affine(self, l: AffineFn) -> "PAFn":
        pieces = [AffineFn(p.grad + l.grad, p.c + l.c) for p in self.pieces]
        return PAFn(pieces, self.domain, self.is_cylinder)

    def plus_const(self, t: float) -> "PAFn":
        return PAFn([AffineFn(p.grad, p.c + t) for p in self.pieces], self.domain, self.is_cylinder)

    def restrict(self, P: Polytope) -> "PAFn":
        dom = P if self.domain is None else intersect(self.domain, P)
        if dom is None:
            raise EmptyDomain("restriction is empty")
        return PAFn(self.pieces, dom, self.is_cylinder)

    def pruned(self) -> "PAFn":
        if len(self.pieces) == 1:
            return self
        G, c = _dedupe_pieces(self.G, self.cvec)
        if self.domain is None:
            mask = essential_mask_global(G, c)
        else:
            mask = essential_mask_on_domain(G, c, self.domain)
        if not mask.any():
            mask[0] = True
        pieces = [AffineFn(g, ci) for g, ci in zip(G[mask], c[mask])]
        return PAFn(pieces, self.domain, self.is_cylinder)

    def __repr__(self):
        dom = "R^n" if self.domain is None else "poly"
        return f"PAFn(k={len(self.pieces)}, dim={self.dim}, dom={dom})"


class QuadFn(ConvexFn):
    """A convex quadratic, optionally restricted to a polytope."""

    def __init__(self, q: QuadraticFn, domain: Polytope | None = None, is_cylinder: bool = False):
        scale = max(1.0, float(np.abs(q.A).max(initial=0.0)))
        if q.min_eigenvalue < -EPS_GEOM * scale:
            raise NotConvex(f"quadratic part has eigenvalue {q.min_eigenvalue:.3e}")
        if domain is not None and domain.dim != q.dim:
            raise DimMismatch("domain dimension mismatch")
        self.q = q
        self.domain = domain
        self.dim = q.dim
        self.is_cylinder = is_cylinder

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.domain is not None and not self.domain.contains(x):
            return np.inf
        return self.q(x)

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        vals = self.q.eval_many(X)
        if self.domain is not None:
            vals = np.where(self.domain.contains_many(X), vals, np.inf)
        return vals

    def as_plq(self) -> "PLQFn":
        if self.domain is None:
            raise BadInput("cannot convert an unrestricted quadratic to cells")
        return PLQFn([(self.domain, self.q)], self.domain, certificate="single-cell")

    def lipschitz(self) -> float:
        if self.domain is None:
            raise BadInput("unbounded quadratic has no Lipschitz constant")
        g = self.domain.vertices @ self.q.A.T + self.q.b
        return float(np.linalg.norm(g, axis=1).max())


class PLQFn(ConvexFn):
    """Quadratic on each cell of a polyhedral subdivision of the domain."""

    def __init__(self, cells, domain: Polytope | None = None, certificate=None,
                 is_cylinder: bool = False):
        cs = tuple((P, q) for P, q in cells)
        if not cs:
            raise BadInput("a PLQ function needs at least one cell")
        n = cs[0][0].dim
        self.cells = cs
        self.dim = n
        self.domain = domain if domain is not None else hull(
            np.vstack([P.vertices for P, _ in cs])
        )
        self.certificate = certificate
        self.is_cylinder = is_cylinder

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        best = np.inf
        for P, q in self.cells:
            if P.contains(x):
                best = min(best, q(x))
        return float(best)

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        vals = np.full(len(X), np.inf)
        for P, q in self.cells:
            mask = P.contains_many(X)
            if mask.any():
                vals[mask] = np.minimum(vals[mask], q.eval_many(X[mask]))
        return vals

    def active_gradients(self, x, tol: float = ACTIVE_TOL) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        val = self.evaluate(x)
        scale = max(1.0, abs(val))
        out = [q.gradient(x) for P, q in self.cells
               if P.contains(x) and abs(q(x) - val) <= tol * scale]
        return np.array(out)

    def lipschitz(self) -> float:
        worst = 0.0
        for P, q in self.cells:
            g = P.vertices @ q.A.T + q.b
            worst = max(worst, float(np.linalg.norm(g, axis=1).max()))
        return worst

    def compose_affine(self, M: np.ndarray, s) -> "PLQFn":
        M = np.asarray(M, dtype=float)
        s = np.asarray(s, dtype=float)
        inv = np.linalg.inv(M)
        cells = [(hull((P.vertices - s) @ inv.T), q.compose_affine(M, s))
                 for P, q in self.cells]
        return PLQFn(cells, certificate=self.certificate, is_cylinder=self.is_cylinder)

    def translate(self, y) -> "PLQFn":
        return self.compose_affine(np.eye(self.dim), -np.asarray(y, dtype=float))

    def plus_affine(self, l: AffineFn) -> "PLQFn":
        return PLQFn([(P, q.plus_affine(l)) for P, q in self.cells],
                     self.domain, self.certificate, self.is_cylinder)

    def plus_const(self, t: float) -> "PLQFn":
        return PLQFn([(P, q.plus_const(t)) for P, q in self.cells],
                     self.domain, self.certificate, self.is_cylinder)

    def restrict(self, P: Polytope) -> "PLQFn":
        cells = []
        for C, q in self.cells:
            R = intersect(C, P)
            if R is not None and not R.is_degenerate:
                cells.append((R, q))
        if not cells:
            raise EmptyDomain("restriction has no full-dimensional cells")
        return PLQFn(cells, certificate="restriction", is_cylinder=self.is_cylinder)


class CylinderFn(ConvexFn):
    """w epi-summed with (v + indicator of a segment J); evaluated by reducing
    the infimum to one variable along J."""

    def __init__(self, w: ConvexFn, v: AffineFn, J: Polytope):
        self.w = w
        self.v = v
        self.J = J
        self.dim = v.dim
        self.is_cylinder = True
        self.p0 = J.vertices[0]
        self.p1 = J.vertices[-1]
        self.direction = self.p1 - self.p0
        self.domain = minkowski_sum(w.domain, J)

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        A, b = self.w.domain.halfspaces
        z = x - self.p0
        a = -(A @ self.direction)
        r = b - A @ z
        t_lo, t_hi = 0.0, 1.0
        for ai, ri in zip(a, r):
            if abs(ai) < 1e-13:
                if ri < -FEAS_TOL:
                    return np.inf
                continue
            bound = ri / ai
            if ai > 0:
                t_hi = min(t_hi, bound)
            else:
                t_lo = max(t_lo, bound)
        if t_lo > t_hi + FEAS_TOL:
            return np.inf
        t_lo, t_hi = min(t_lo, t_hi), max(t_lo, t_hi)
        e = self.direction
        if isinstance(self.w, QuadFn):
            q = self.w.q
            alpha = 0.5 * float(e @ q.A @ e)
            beta = -float(z @ q.A @ e + q.b @ e) + float(self.v.grad @ e)
            const = q(z) + self.v(self.p0)
            if alpha > 1e-13:
                t = float(np.clip(-beta / (2 * alpha), t_lo, t_hi))
            else:
                t = t_lo if beta >= 0 else t_hi
            return alpha * t * t + beta * t + const
        # piecewise affine w: convex piecewise linear in t, minimize over kinks
        assert isinstance(self.w, PAFn)
        slopes = -(self.w.G @ e) + self.v.grad @ e
        offs = self.w.G @ z + self.w.cvec + self.v(self.p0)
        cand = {t_lo, t_hi}
        for i, j in itertools.combinations(range(len(slopes)), 2):
            ds = slopes[i] - slopes[j]
            if abs(ds) > 1e-13:
                t = (offs[j] - offs[i]) / ds
                if t_lo < t < t_hi:
                    cand.add(float(t))
        best = np.inf
        for t in cand:
            val = float(np.max(slopes * t + offs))
            best = min(best, val)
        return best


# ---------------------------------------------------------------------------
# evaluation / subdifferential / Lipschitz


def eval_fn(u: ConvexFn, x) -> float:
    """Extended-real evaluation (+inf outside the domain)."""
    return u.evaluate(x)


def subdifferential(u: ConvexFn, x) -> SubdiffSet:
    """Convex hull of active gradients plus normal-cone generators at the
    domain boundary.  Raises OutsideDomain when u(x) = +inf."""
    x = np.asarray(x, dtype=float)
    if u.domain is not None and not u.domain.contains(x):
        raise OutsideDomain(f"{x.tolist()} is outside the domain")
    if isinstance(u, PAFn):
        grads = u.active_gradients(x)
    elif isinstance(u, PLQFn):
        grads = u.active_gradients(x)
    elif isinstance(u, QuadFn):
        grads = u.q.gradient(x)[None, :]
    elif hasattr(u, "gradient"):
        grads = np.asarray(u.gradient(x), dtype=float)[None, :]
    else:
        raise BadInput(f"no subdifferential rule for {type(u).__name__}")
    bounded = hull(grads)
    if u.domain is None or u.domain.boundary_distance(x) < -FEAS_TOL:
        cone = np.zeros((0, u.dim))
    else:
        cone = u.domain.normal_cone_generators(x)
    return SubdiffSet(bounded, cone)


def lipschitz_constant(u: ConvexFn) -> float:
    """Exact Lipschitz constant for PA / PLQ / restricted quadratics."""
    if u.domain is not None and u.domain.is_degenerate:
        raise DegenerateDomain("Lipschitz constant needs a full-dimensional domain")
    if isinstance(u, (PAFn, PLQFn, QuadFn)):
        return u.lipschitz()
    if hasattr(u, "lipschitz_estimate"):
        return float(u.lipschitz_estimate())
    raise BadInput(f"no Lipschitz rule for {type(u).__name__}")


# ---------------------------------------------------------------------------
# pruning helpers


def _dedupe_pieces(G: np.ndarray, c: np.ndarray):
    """Merge pieces with equal gradients, keeping the largest intercept."""
    scale = max(1.0, float(np.abs(G).max(initial=0.0)))
    keep: list[int] = []
    for i in range(len(G)):
        dup = None
        for j in keep:
            if np.max(np.abs(G[i] - G[j])) <= 1e-12 * scale:
                dup = j
                break
        if dup is None:
            keep.append(i)
        elif c[i] > c[dup]:
            keep[keep.index(dup)] = i
    keep.sort()
    return G[keep], c[keep]


def essential_mask_global(G: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Mask of pieces attaining the strict max of max_i(<g_i,y> + c_i)
    somewhere; gradients assumed deduplicated."""
    k = len(G)
    if k == 1:
        return np.ones(1, dtype=bool)
    origin, Q, d = geometry._affine_chart(G)
    if d == 0:
        mask = np.zeros(k, dtype=bool)
        mask[int(np.argmax(c))] = True
        return mask
    Z = (G - origin) @ Q
    lifted = np.column_stack([Z, c])
    _, _, lr = geometry._affine_chart(lifted)
    if lr <= d:
        # intercepts affine in the gradients: essential = extreme gradients
        ext = hull(Z).vertices
        mask = np.zeros(k, dtype=bool)
        for i in range(k):
            if np.min(np.max(np.abs(ext - Z[i]), axis=1)) <= 1e-9 * max(1.0, np.abs(Z).max()):
                mask[i] = True
        return mask
    if k >= d + 3:
        try:
            return _essential_mask_qhull(lifted)
        except QhullError:
            pass
    return _essential_mask_lp(Z, c)


def _essential_mask_qhull(lifted: np.ndarray) -> np.ndarray:
    ch = ConvexHull(lifted)
    eqs = ch.equations
    upper = eqs[:, -2] > 1e-12
    scale = max(1.0, float(np.abs(lifted).max()))
    mask = np.zeros(len(lifted), dtype=bool)
    for v in ch.vertices:
        dists = eqs[:, :-1] @ lifted[v] + eqs[:, -1]
        inc = np.abs(dists) <= 1e-9 * scale
        if np.any(inc & upper):
            mask[v] = True
    return mask


def _essential_mask_lp(Z: np.ndarray, c: np.ndarray, bound: float = 1e4) -> np.ndarray:
    k, d = Z.shape
    mask = np.zeros(k, dtype=bool)
    for i in range(k):
        others = [j for j in range(k) if j != i]
        A = np.column_stack([Z[others] - Z[i], np.ones(len(others))])
        b = c[i] - c[others]
        res = linprog(
            np.append(np.zeros(d), -1.0),
            A_ub=A,
            b_ub=b,
            bounds=[(-bound, bound)] * d + [(-1.0, 1.0)],
            method="highs",
        )
        mask[i] = res.status == 0 and -res.fun > 1e-11
    return mask


def essential_mask_on_domain(G: np.ndarray, c: np.ndarray, P: Polytope) -> np.ndarray:
    """Mask of pieces active on a relatively open subset of P."""
    k = len(G)
    if k == 1:
        return np.ones(1, dtype=bool)
    origin, Q = P.chart
    d = P.intrinsic_dim
    if d == 0:
        vals = G @ P.vertices[0] + c
        mask = np.zeros(k, dtype=bool)
        mask[int(np.argmax(vals))] = True
        return mask
    Ad, bd = P.chart_halfspaces
    Gz = G @ Q
    cz = c + G @ origin
    mask = np.zeros(k, dtype=bool)
    for i in range(k):
        others = [j for j in range(k) if j != i]
        A = np.vstack([
            np.column_stack([Gz[others] - Gz[i], np.ones(len(others))]),
            np.column_stack([Ad, np.zeros(len(Ad))]),
        ])
        b = np.concatenate([cz[i] - cz[others], bd])
        res = linprog(
            np.append(np.zeros(d), -1.0),
            A_ub=A,
            b_ub=b,
            bounds=[(None, None)] * d + [(-1.0, 1.0)],
            method="highs",
        )
        mask[i] = res.status == 0 and -res.fun > 1e-11
    return mask


# ---------------------------------------------------------------------------
# lower convex hull of lifted points -> max-of-affines


def lower_hull_pieces(points: np.ndarray, values: np.ndarray):
    """Largest convex function below the given graph points, as
    (pieces, domain).  The function equals the lower convex hull of the
    lifted point set over the hull of the points."""
    pts = np.asarray(points, dtype=float)
    vals = np.asarray(values, dtype=float)
    origin, Q, d = geometry._affine_chart(pts)
    z = (pts - origin) @ Q
    # merge coincident base points, keeping the lowest value
    scale = max(1.0, float(np.abs(z).max(initial=0.0)))
    keep: dict[int, int] = {}
    order: list[int] = []
    for i in range(len(z)):
        match = None
        for j in order:
            if np.max(np.abs(z[i] - z[j])) <= 1e-10 * scale:
                match = j
                break
        if match is None:
            order.append(i)
        elif vals[i] < vals[match]:
            order[order.index(match)] = i
    z, vals = z[order], vals[order]
    domain = hull(pts)

    def back(gz, cz):
        g = Q @ gz
        return AffineFn(g, float(cz - g @ origin))

    if d == 0:
        return [AffineFn(np.zeros(pts.shape[1]), float(vals.min()))], domain
    lifted = np.column_stack([z, vals])
    _, _, lr = geometry._affine_chart(lifted)
    if lr <= d or len(z) == d + 1:
        coef, *_ = np.linalg.lstsq(np.column_stack([z, np.ones(len(z))]), vals, rcond=None)
        return [back(coef[:d], coef[d])], domain
    try:
        ch = ConvexHull(lifted)
    except QhullError:
        ch = ConvexHull(lifted, qhull_options="QJ1e-12")
    pieces = []
    for eq in ch.equations:
        a, off = eq[:-1], eq[-1]
        if a[-1] < -1e-10:
            gz = -a[:d] / a[-1]
            cz = -off / a[-1]
            pieces.append(back(gz, cz))
    if not pieces:
        coef, *_ = np.linalg.lstsq(np.column_stack([z, np.ones(len(z))]), vals, rcond=None)
        return [back(coef[:d], coef[d])], domain
    G = np.array([p.grad for p in pieces])
    c = np.array([p.c for p in pieces])
    G, c = _dedupe_pieces(G, c)
    return [AffineFn(g, ci) for g, ci in zip(G, c)], domain


# ---------------------------------------------------------------------------
# lattice operations


def _as_plq(u: ConvexFn) -> PLQFn:
    if isinstance(u, PLQFn):
        return u
    if isinstance(u, QuadFn):
        return u.as_plq()
    if isinstance(u, PAFn):
        if u.domain is None:
            raise BadInput("cell form needs a compact domain")
        cells = [(P, QuadraticFn(np.zeros((u.dim, u.dim)), l.grad, l.c))
                 for P, l in u.cells]
        return PLQFn(cells, u.domain, certificate="from-pa")
    raise BadInput(f"cannot view {type(u).__name__} as PLQ")


def _check_pair(u: ConvexFn, v: ConvexFn):
    if u.dim != v.dim:
        raise DimMismatch(f"{u.dim} vs {v.dim}")
    if u.domain is None or v.domain is None:
        raise BadInput("lattice operations need compact domains")


def _grid_over(D: Polytope, per_axis: int) -> np.ndarray:
    if D.is_degenerate:
        origin, Q = D.chart
        d = D.intrinsic_dim
        zc = D.chart_vertices
        lo, hi = zc.min(axis=0), zc.max(axis=0)
        axes = [np.linspace(lo[i], hi[i], per_axis) for i in range(d)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        return origin + mesh @ Q.T
    return D.grid_points(per_axis)


def _certificate_points(u: ConvexFn, v: ConvexFn, D: Polytope, target: int = 1000):
    """Sample D plus both input domains, so a reconstruction that misses part
    of the union cannot slip past the certificate."""
    per_axis = max(3, int(round(target ** (1.0 / D.dim))))
    parts = [_grid_over(D, per_axis), D.vertices]
    for P in (u.domain, v.domain):
        parts.append(_grid_over(P, max(3, per_axis // 2)))
        parts.append(P.vertices)
    return np.vstack(parts)


def meet(u: ConvexFn, v: ConvexFn) -> ConvexFn:
    """Pointwise minimum, accepted only when convex.

    For PA inputs the convexification of the min is rebuilt from lifted
    subdivision vertices and certified against the pointwise min on a grid;
    for PLQ inputs the cells are refined.  Raises NotConvex otherwise.
    """
    _check_pair(u, v)
    if isinstance(u, PAFn) and isinstance(v, PAFn):
        return _meet_pa(u, v)
    return _meet_plq(_as_plq(u), _as_plq(v))


def _min_certificate(w: ConvexFn, u: ConvexFn, v: ConvexFn, D: Polytope):
    pts = _certificate_points(u, v, D)
    wv = w.eval_many(pts)
    mv = np.minimum(u.eval_many(pts), v.eval_many(pts))
    finite_w = np.isfinite(wv)
    finite_m = np.isfinite(mv)
    if np.any(finite_w & ~finite_m):
        raise NotConvex("union of domains is not convex")
    both = finite_w & finite_m
    if np.any(finite_m & ~finite_w):
        raise NotConvex("reconstructed function misses part of the union")
    scale = 1.0 + float(np.abs(mv[both]).max(initial=0.0))
    gap = float(np.abs(wv[both] - mv[both]).max(initial=0.0))
    if gap > 1e-7 * scale:
        raise NotConvex(f"pointwise min differs from its convexification by {gap:.3e}")


def _meet_pa(u: PAFn, v: PAFn) -> PAFn:
    pu, valu = u.subdivision_vertices()
    pv, valv = v.subdivision_vertices()
    pieces, dom = lower_hull_pieces(np.vstack([pu, pv]), np.concatenate([valu, valv]))
    w = PAFn(pieces, dom)
    _min_certificate(w, u, v, dom)
    return w


def _min_cells(R: Polytope, qi: QuadraticFn, qj: QuadraticFn, take_max: bool = False):
    n = R.dim
    dA = qi.A - qj.A
    scale = max(1.0, float(np.abs(qi.A).max(initial=0.0)), float(np.abs(qj.A).max(initial=0.0)))
    if np.abs(dA).max(initial=0.0) <= EPS_GEOM * scale:
        g = qi.b - qj.b
        c0 = qi.c - qj.c
        if np.abs(g).max(initial=0.0) <= 1e-12:
            pick = qi if (c0 <= 0) != take_max else qj
            return [(R, pick)]
        # difference is affine: split along its zero hyperplane
        A, b = R.halfspaces
        lo = geometry.vertices_from_halfspaces(
            np.vstack([A, g[None, :]]), np.append(b, -c0), n)
        hi = geometry.vertices_from_halfspaces(
            np.vstack([A, -g[None, :]]), np.append(b, c0), n)
        out = []
        first, second = (qi, qj) if not take_max else (qj, qi)
        if len(lo):
            part = hull(lo)
            if not part.is_degenerate:
                out.append((part, first))
        if len(hi):
            part = hull(hi)
            if not part.is_degenerate:
                out.append((part, second))
        return out if out else [(R, qi)]
    # different Hessians: only accept when one dominates throughout the cell
    samples = _cell_samples(R)
    d = qi.eval_many(samples) - qj.eval_many(samples)
    tol = 1e-9 * (1.0 + float(np.abs(d).max(initial=0.0)))
    if np.all(d <= tol):
        return [(R, qi if not take_max else qj)]
    if np.all(d >= -tol):
        return [(R, qj if not take_max else qi)]
    raise NotConvex("quadratic pieces cross inside a shared cell")


def _cell_samples(R: Polytope) -> np.ndarray:
    v = R.vertices
    mids = np.array([(a + b) / 2 for a, b in itertools.combinations(v, 2)]) \
        if len(v) > 1 else np.zeros((0, R.dim))
    grid = R.grid_points(5) if not R.is_degenerate else np.zeros((0, R.dim))
    parts = [v, R.barycenter[None, :]]
    if len(mids):
        parts.append(mids)
    if len(grid):
        parts.append(grid)
    return np.vstack(parts)


def _refined_cells(u: PLQFn, v: PLQFn, take_max: bool):
    Du, Dv = u.domain, v.domain
    cells = []
    if not take_max:
        for P, q in u.cells:
            for part in geometry.polytope_difference(P, Dv):
                cells.append((part, q))
        for P, q in v.cells:
            for part in geometry.polytope_difference(P, Du):
                cells.append((part, q))
    for Pi, qi in u.cells:
        for Qj, qj in v.cells:
            R = intersect(Pi, Qj)
            if R is None or R.is_degenerate:
                continue
            cells.extend(_min_cells(R, qi, qj, take_max=take_max))
    return cells


def _meet_plq(u: PLQFn, v: PLQFn) -> PLQFn:
    cells = _refined_cells(u, v, take_max=False)
    if not cells:
        raise NotConvex("no full-dimensional cells in the union")
    w = certify_plq(cells)
    _min_certificate(w, u, v, w.domain)
    return w


def join(u: ConvexFn, v: ConvexFn) -> ConvexFn:
    """Pointwise maximum on the intersection of domains."""
    _check_pair(u, v)
    if isinstance(u, PAFn) and isinstance(v, PAFn):
        dom = intersect(u.domain, v.domain)
        if dom is None:
            raise EmptyDomain("domains do not intersect")
        w = PAFn(list(u.pieces) + list(v.pieces), dom)
        return w.pruned()
    up, vp = _as_plq(u), _as_plq(v)
    overlap = intersect(up.domain, vp.domain)
    if overlap is None:
        raise EmptyDomain("domains do not intersect")
    if overlap.is_degenerate:
        raise NotConvex("join over a lower-dimensional overlap is not representable")
    cells = _refined_cells(up, vp, take_max=True)
    if not cells:
        raise EmptyDomain("intersection has no full-dimensional cells")
    return certify_plq(cells)


# ---------------------------------------------------------------------------
# PLQ certification


def certify_plq(cells, domain: Polytope | None = None) -> PLQFn:
    """Validate a cell list as a convex PLQ function.

    Checks per-cell positive semidefiniteness, pairwise disjoint interiors,
    volume cover of the domain, continuity across shared facets (sampled at
    vertices, edge midpoints and the barycenter), and monotonicity of the
    gradient jump along each facet normal.  Raises NotConvex with the
    offending cell or facet.
    """
    cs = [(P, q) for P, q in cells if not P.is_degenerate]
    if not cs:
        raise NotConvex("no full-dimensional cells")
    n = cs[0][0].dim
    for idx, (P, q) in enumerate(cs):
        scale = max(1.0, float(np.abs(q.A).max(initial=0.0)))
        if q.min_eigenvalue < -EPS_GEOM * scale:
            raise NotConvex(f"cell {idx}: quadratic not PSD (min eig {q.min_eigenvalue:.3e})")
    dom = domain if domain is not None else hull(np.vstack([P.vertices for P, _ in cs]))
    total = sum(P.volume for P, _ in cs)
    if abs(total - dom.volume) > 1e-7 * (1.0 + dom.volume):
        raise NotConvex(
            f"cells cover {total:.12g} of domain volume {dom.volume:.12g}")
    facet_checks = []
    for (i, (Pi, qi)), (j, (Pj, qj)) in itertools.combinations(enumerate(cs), 2):
        R = intersect(Pi, Pj)
        if R is None:
            continue
        if R.intrinsic_dim == n:
            if R.volume > 1e-9 * (1.0 + min(Pi.volume, Pj.volume)):
                raise NotConvex(f"cells {i} and {j} have overlapping interiors")
            continue
        if R.intrinsic_dim != n - 1:
            continue
        samples = _facet_samples(R)
        vi = qi.eval_many(samples)
        vj = qj.eval_many(samples)
        vscale = 1.0 + float(max(np.abs(vi).max(), np.abs(vj).max()))
        cont = float(np.abs(vi - vj).max())
        if cont > 1e-7 * vscale:
            raise NotConvex(f"value jump {cont:.3e} across facet of cells {i},{j}")
        nu = _facet_normal(R, n)
        if nu @ (Pj.barycenter - Pi.barycenter) < 0:
            nu = -nu
        jump = (samples @ (qj.A - qi.A).T + (qj.b - qi.b)) @ nu
        mono = float(jump.min())
        if mono < -1e-7 * (1.0 + float(np.abs(jump).max())):
            raise NotConvex(
                f"gradient jump {mono:.3e} against the facet normal of cells {i},{j}")
        facet_checks.append((i, j, cont, mono))
    return PLQFn(cs, dom, certificate=tuple(facet_checks))


def _facet_samples(R: Polytope) -> np.ndarray:
    v = R.vertices
    parts = [v, R.barycenter[None, :]]
    if len(v) > 1:
        parts.append(np.array([(a + b) / 2 for a, b in itertools.combinations(v, 2)]))
    return np.vstack(parts)


def _facet_normal(R: Polytope, n: int) -> np.ndarray:
    comp = geometry._null_complement(R.chart[1], n)
    return comp[0]


# ---------------------------------------------------------------------------
# cylinder construction


def make_cylinder(w: ConvexFn, v: AffineFn, J: Polytope) -> ConvexFn:
    """Epi-sum of w with (v + indicator of segment J), flagged as a cylinder.

    Requires dom w to be lower-dimensional, so the result is affine along the
    direction of J and simple valuations vanish on it.
    """
    if J.intrinsic_dim != 1:
        raise BadSegment(f"J has intrinsic dimension {J.intrinsic_dim}, expected 1")
    if w.domain is None or not w.domain.is_degenerate:
        raise BadInput("a strict cylinder needs a lower-dimensional base domain")
    if isinstance(w, PAFn):
        from .transforms import inf_conv_pa

        res = inf_conv_pa(w, PAFn([v], J))
        return PAFn(res.pieces, res.domain, is_cylinder=True)
    if isinstance(w, QuadFn):
        return CylinderFn(w, v, J)
    raise BadInput(f"unsupported base type {type(w).__name__}")
