"""Convex bodies with gauge, membership, normal and surface-measure oracles.

All bodies are immutable. Point arguments may be a single vector of shape
``(n,)`` or a batch of shape ``(m, n)``; results follow the same convention.
"""
from dataclasses import dataclass, field
from enum import IntEnum
from math import gamma, pi

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog
from scipy.spatial import Delaunay, HalfspaceIntersection

from . import _rng
from .errors import InputError, InvalidBodyError, PreconditionError, UnsupportedBodyError

CLASSIFY_TOL = 1e-9


class Region(IntEnum):
    INTERIOR = 0
    BOUNDARY = 1
    EXTERIOR = 2


def unit_ball_volume(n):
    return pi ** (n / 2) / gamma(n / 2 + 1)


def sphere_area(n):
    """(n-1)-dimensional area of the unit sphere in R^n."""
    return n * unit_ball_volume(n)


def _points(x, dim):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise InputError(f"expected points of dimension {dim}, got shape {x.shape}")
    return pts, single


def _out(values, single):
    return values[0] if single else values


def _frozen_array(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _norms(v):
    return np.sqrt(np.einsum("ij,ij->i", v, v))


def _matvec(mat, pts):
    """Rows of ``pts`` mapped through ``mat`` (x -> mat @ x)."""
    return np.einsum("ij,mj->mi", mat, pts)


def _check_matrix(T, dim=None, what="matrix"):
    T = np.array(T, dtype=float)
    if T.ndim == 0 and dim == 1:
        T = T.reshape(1, 1)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise InputError(f"{what} must be square, got shape {T.shape}")
    if dim is not None and T.shape[0] != dim:
        raise InputError(f"{what} has dimension {T.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(T)):
        raise InputError(f"{what} has non-finite entries")
    det = np.linalg.det(T)
    cond = np.linalg.cond(T)
    if det == 0 or not np.isfinite(cond) or cond > 1e13:
        raise InputError(f"{what} is singular")
    return T


@dataclass(frozen=True)
class SurfaceSample:
    """Weighted points on a boundary; ``sum(w * h(x))`` estimates the surface integral of h."""

    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)

    def total(self):
        return float(np.sum(self.weights))

    def integrate(self, values):
        """Estimate and standard error of the surface integral of sampled ``values``."""
        y = self.weights * np.asarray(values, dtype=float) * len(self.weights)
        n = len(y)
        est = float(np.mean(y))
        se = float(np.std(y, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return est, se


class ConvexBody:
    """Base class. Subclasses implement ``_level``, ``_normal`` and the samplers."""

    dim: int
    bounded = True

    # -- exact oracles --------------------------------------------------------
    def level(self, x):
        """Smallest t >= 0 with x in t*(body - shift) + shift; the gauge when unshifted."""
        pts, single = _points(x, self.dim)
        return _out(self._level(pts), single)

    def gauge(self, x):
        return self.level(x)

    def classify(self, x, tol=CLASSIFY_TOL):
        if tol <= 0:
            raise InputError("classification tolerance must be positive")
        pts, single = _points(x, self.dim)
        lev = self._level(pts)
        labels = np.full(len(pts), int(Region.EXTERIOR))
        labels[np.abs(lev - 1.0) <= tol] = Region.BOUNDARY
        labels[lev < 1.0 - tol] = Region.INTERIOR
        if single:
            return Region(labels[0])
        return labels

    def contains(self, x, tol=CLASSIFY_TOL):
        """Membership in the closed body (Interior or Boundary)."""
        pts, single = _points(x, self.dim)
        return _out(self._level(pts) <= 1.0 + tol, single)

    def outward_normal(self, x, tol=CLASSIFY_TOL):
        pts, single = _points(x, self.dim)
        lev = self._level(pts)
        if np.any(np.abs(lev - 1.0) > tol):
            raise PreconditionError("outward_normal requires boundary points")
        return _out(self._normal(pts), single)

    # -- sampling -------------------------------------------------------------
    def surface_sample(self, count, seed, stream=_rng.SURFACE, workers=1):
        """Unbiased weighted sample of the surface measure, drawn in fixed-size blocks."""
        if not self.bounded:
            raise UnsupportedBodyError("surface sampling needs a bounded body")
        count = int(count)
        if count < 1:
            raise InputError("count must be at least 1")

        def block(b, size):
            return self._surface_draw(_rng.generator(seed, stream, b), size)

        parts = _rng.map_blocks(block, _rng.block_sizes(count), workers)
        pts = np.concatenate([p[0] for p in parts])
        nrm = np.concatenate([p[1] for p in parts])
        area = np.concatenate([p[2] for p in parts])
        return SurfaceSample(pts, nrm, area / count)

    def uniform_sample(self, count, seed, stream=_rng.UNIFORM):
        if not self.bounded:
            raise UnsupportedBodyError("uniform sampling needs a bounded body")
        parts = [self._uniform_draw(_rng.generator(seed, stream, b), s)
                 for b, s in enumerate(_rng.block_sizes(count))]
        return np.concatenate(parts)

    # -- defaults -------------------------------------------------------------
    @property
    def symmetric(self):
        return False

    @property
    def centered(self):
        """True when the body is described relative to an interior origin (no shift)."""
        return True

    def radius_bound(self):
        raise UnsupportedBodyError("unbounded body")

    def gauge_gradient(self, x):
        """Gradient of the gauge and a mask of points where it does not exist."""
        raise UnsupportedBodyError(f"{type(self).__name__} has no gauge gradient")


@dataclass(frozen=True, eq=False)
class Ball(ConvexBody):
    radius: float = 1.0
    dim: int = 2

    def __post_init__(self):
        if not (self.radius > 0 and np.isfinite(self.radius)):
            raise InvalidBodyError("ball radius must be positive")
        if int(self.dim) < 1:
            raise InvalidBodyError("dimension must be positive")
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "dim", int(self.dim))

    def _level(self, pts):
        return _norms(pts) / self.radius

    def _normal(self, pts):
        return pts / _norms(pts)[:, None]

    def gauge_gradient(self, x):
        pts, _ = _points(x, self.dim)
        r = _norms(pts)
        sing = r == 0
        safe = np.where(sing, 1.0, r)
        return pts / (self.radius * safe[:, None]), sing

    def volume(self):
        return unit_ball_volume(self.dim) * self.radius ** self.dim

    def surface_area(self):
        return sphere_area(self.dim) * self.radius ** (self.dim - 1)

    def _surface_draw(self, rng, size):
        u = rng.standard_normal((size, self.dim))
        u /= _norms(u)[:, None]
        return self.radius * u, u, np.full(size, self.surface_area())

    def _uniform_draw(self, rng, size):
        u = rng.standard_normal((size, self.dim))
        u /= _norms(u)[:, None]
        rad = self.radius * rng.random(size) ** (1.0 / self.dim)
        return u * rad[:, None]

    @property
    def symmetric(self):
        return True

    def radius_bound(self):
        return float(self.radius)

    def inradius(self):
        return float(self.radius)


@dataclass(frozen=True, eq=False)
class Ellipsoid(ConvexBody):
    """Image A(B) of the closed unit ball under an invertible matrix A."""

    matrix: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        try:
            A = _check_matrix(self.matrix, what="ellipsoid shape matrix")
        except InputError as exc:
            raise InvalidBodyError(str(exc)) from None
        object.__setattr__(self, "matrix", _frozen_array(A))
        object.__setattr__(self, "dim", A.shape[0])
        object.__setattr__(self, "_inv", np.linalg.inv(A))
        object.__setattr__(self, "_absdet", abs(np.linalg.det(A)))

    def _level(self, pts):
        return _norms(_matvec(self._inv, pts))

    def _normal(self, pts):
        v = _matvec(self._inv.T @ self._inv, pts)
        return v / _norms(v)[:, None]

    def gauge_gradient(self, x):
        pts, _ = _points(x, self.dim)
        u = _matvec(self._inv, pts)
        r = _norms(u)
        sing = r == 0
        safe = np.where(sing, 1.0, r)
        return _matvec(self._inv.T, u) / safe[:, None], sing

    def volume(self):
        return self._absdet * unit_ball_volume(self.dim)

    def _surface_draw(self, rng, size):
        u = rng.standard_normal((size, self.dim))
        u /= _norms(u)[:, None]
        nv = _matvec(self._inv.T, u)
        s = _norms(nv)
        area = self._absdet * s * sphere_area(self.dim)
        return _matvec(self.matrix, u), nv / s[:, None], area

    def _uniform_draw(self, rng, size):
        return _matvec(self.matrix, Ball(1.0, self.dim)._uniform_draw(rng, size))

    @property
    def symmetric(self):
        return True

    def radius_bound(self):
        return float(np.linalg.norm(self.matrix, 2))

    def inradius(self):
        return float(np.linalg.svd(self.matrix, compute_uv=False)[-1])


@dataclass(frozen=True, eq=False)
class HPolytope(ConvexBody):
    """Bounded polytope {x : <a_i, x> <= b_i} with every b_i > 0."""

    rows: np.ndarray
    offsets: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        A = np.array(self.rows, dtype=float)
        b = np.array(self.offsets, dtype=float).ravel()
        if A.ndim == 1:
            A = A[:, None]
        if A.ndim != 2 or A.shape[0] != b.shape[0]:
            raise InvalidBodyError("rows and offsets have inconsistent shapes")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidBodyError("non-finite polytope data")
        if np.any(b <= 0):
            raise InvalidBodyError("all offsets must be positive (origin interior)")
        if np.any(np.linalg.norm(A, axis=1) == 0):
            raise InvalidBodyError("zero row in polytope description")
        object.__setattr__(self, "rows", _frozen_array(A))
        object.__setattr__(self, "offsets", _frozen_array(b))
        object.__setattr__(self, "dim", A.shape[1])
        self._check_bounded()
        object.__setattr__(self, "_geom", self._build_geometry())

    def _check_bounded(self):
        n = self.dim
        for k in range(n):
            for sgn in (1.0, -1.0):
                c = np.zeros(n)
                c[k] = -sgn
                res = linprog(c, A_ub=self.rows, b_ub=self.offsets,
                              bounds=[(None, None)] * n, method="highs")
                if res.status == 3:
                    raise InvalidBodyError("polytope is unbounded")

    def _build_geometry(self):
        A, b, n = self.rows, self.offsets, self.dim
        unit = A / np.linalg.norm(A, axis=1)[:, None]
        if n == 1:
            a = A[:, 0]
            hi = np.min(b[a > 0] / a[a > 0])
            lo = np.max(b[a < 0] / a[a < 0])
            # lowest-index active row at each end
            i_hi = int(np.flatnonzero((a > 0) & np.isclose(b / np.where(a == 0, 1, a), hi))[0])
            i_lo = int(np.flatnonzero((a < 0) & np.isclose(b / np.where(a == 0, 1, a), lo))[0])
            simplices = np.array([[[hi]], [[lo]]])
            return dict(vertices=np.array([[lo], [hi]]), facet_simplices=simplices,
                        facet_weights=np.array([1.0, 1.0]), facet_index=np.array([i_hi, i_lo]),
                        area=2.0, body_simplices=np.array([[[lo], [hi]]]),
                        body_weights=np.array([hi - lo]), volume=hi - lo, unit=unit)
        hs = HalfspaceIntersection(np.hstack([A, -b[:, None]]), np.zeros(n))
        verts = hs.intersections
        # merge numerically repeated vertices
        keep = []
        for v in verts:
            if not any(np.linalg.norm(v - w) <= 1e-10 * (1 + np.linalg.norm(w)) for w in keep):
                keep.append(v)
        verts = np.array(keep)
        fs, fw, fi = [], [], []
        for i in range(len(b)):
            on = np.abs(verts @ A[i] - b[i]) <= 1e-9 * b[i]
            if on.sum() < n:
                continue
            V = verts[on]
            basis = null_space(unit[i][None, :])
            coords = (V - V.mean(axis=0)) @ basis
            if n == 2:
                t = coords[:, 0]
                seg = np.array([[V[np.argmin(t)], V[np.argmax(t)]]])
                vol = np.array([t.max() - t.min()])
            else:
                try:
                    tri = Delaunay(coords)
                except Exception:
                    continue  # facet of zero area
                seg = V[tri.simplices]
                P = coords[tri.simplices]
                vol = np.abs(np.linalg.det(P[:, 1:] - P[:, :1])) / gamma(n)
            good = vol > 0
            if not np.any(good):
                continue
            fs.append(seg[good])
            fw.append(vol[good])
            fi.append(np.full(int(good.sum()), i))
        tri = Delaunay(verts)
        bs = verts[tri.simplices]
        bw = np.abs(np.linalg.det(bs[:, 1:] - bs[:, :1])) / gamma(n + 1)
        fw = np.concatenate(fw)
        return dict(vertices=verts, facet_simplices=np.concatenate(fs), facet_weights=fw,
                    facet_index=np.concatenate(fi), area=float(fw.sum()),
                    body_simplices=bs, body_weights=bw, volume=float(bw.sum()), unit=unit)

    def _ratios(self, pts):
        return _matvec(self.rows, pts) / self.offsets

    def _level(self, pts):
        return np.maximum(self._ratios(pts).max(axis=1), 0.0)

    def _active(self, pts, rel=1e-12):
        r = self._ratios(pts)
        top = r.max(axis=1)
        act = r >= top[:, None] - rel * np.maximum(np.abs(top), 1.0)[:, None]
        return r, act

    def _normal(self, pts):
        r = self._ratios(pts)
        top = r.max(axis=1)
        act = r >= top[:, None] - CLASSIFY_TOL * np.maximum(top, 1e-300)[:, None]
        idx = np.argmax(act, axis=1)  # lowest-index active facet
        return self._geom["unit"][idx]

    def gauge_gradient(self, x):
        pts, _ = _points(x, self.dim)
        _, act = self._active(pts)
        idx = np.argmax(act, axis=1)
        sing = act.sum(axis=1) > 1
        return self.rows[idx] / self.offsets[idx][:, None], sing

    def volume(self):
        return self._geom["volume"]

    def surface_area(self):
        return self._geom["area"]

    @property
    def vertices(self):
        return self._geom["vertices"]

    def _surface_draw(self, rng, size):
        g = self._geom
        w = g["facet_weights"]
        k = rng.choice(len(w), size=size, p=w / w.sum())
        simp = g["facet_simplices"][k]
        lam = rng.dirichlet(np.ones(simp.shape[1]), size=size)
        pts = np.einsum("mk,mkj->mj", lam, simp)
        return pts, g["unit"][g["facet_index"][k]], np.full(size, g["area"])

    def _uniform_draw(self, rng, size):
        g = self._geom
        w = g["body_weights"]
        k = rng.choice(len(w), size=size, p=w / w.sum())
        simp = g["body_simplices"][k]
        lam = rng.dirichlet(np.ones(simp.shape[1]), size=size)
        return np.einsum("mk,mkj->mj", lam, simp)

    @property
    def symmetric(self):
        cached = getattr(self, "_sym", None)
        if cached is None:
            rows = self.rows / self.offsets[:, None]
            cached = all(np.any(np.all(np.abs(rows + r) <= 1e-12 * (1 + np.abs(r)), axis=1))
                         for r in rows)
            object.__setattr__(self, "_sym", cached)
        return cached

    def radius_bound(self):
        return float(np.max(_norms(self.vertices)))

    def inradius(self):
        """Radius of the largest origin-centred ball inside the polytope."""
        return float(np.min(self.offsets / np.linalg.norm(self.rows, axis=1)))


def cube(half_width=1.0, dim=2):
    if half_width <= 0:
        raise InvalidBodyError("half width must be positive")
    eye = np.eye(dim)
    return HPolytope(np.vstack([eye, -eye]), np.full(2 * dim, float(half_width)))


def box(half_widths):
    h = np.asarray(half_widths, dtype=float)
    eye = np.eye(len(h))
    return HPolytope(np.vstack([eye, -eye]), np.concatenate([h, h]))


def regular_polygon(sides, inradius=1.0, phase=0.0):
    """Regular polygon whose edges are tangent to the circle of the given radius."""
    ang = phase + 2 * pi * np.arange(sides) / sides
    return HPolytope(np.column_stack([np.cos(ang), np.sin(ang)]), np.full(sides, float(inradius)))


@dataclass(frozen=True, eq=False)
class AffineImage(ConvexBody):
    """T(base) + z for an invertible T."""

    base: ConvexBody
    T: np.ndarray
    z: np.ndarray = None
    dim: int = field(init=False)

    def __post_init__(self):
        if isinstance(self.base, AllSpace):
            raise InputError("use AllSpace directly; affine images of all space are all space")
        T = _check_matrix(self.T, self.base.dim, "affine map")
        z = np.zeros(self.base.dim) if self.z is None else np.asarray(self.z, dtype=float).ravel()
        if z.shape != (self.base.dim,):
            raise InputError("shift has the wrong dimension")
        object.__setattr__(self, "T", _frozen_array(T))
        object.__setattr__(self, "z", _frozen_array(z))
        object.__setattr__(self, "dim", self.base.dim)
        object.__setattr__(self, "_inv", np.linalg.inv(T))
        object.__setattr__(self, "_absdet", abs(np.linalg.det(T)))

    def _pull(self, pts):
        return _matvec(self._inv, pts - self.z)

    def _level(self, pts):
        return self.base._level(self._pull(pts))

    def gauge(self, x):
        if np.any(self.z != 0):
            raise PreconditionError("gauge of a shifted body is not formed; use level or classify")
        return self.level(x)

    def _normal(self, pts):
        v = _matvec(self._inv.T, self.base._normal(self._pull(pts)))
        return v / _norms(v)[:, None]

    def gauge_gradient(self, x):
        if np.any(self.z != 0):
            raise PreconditionError("gauge of a shifted body is not formed")
        pts, _ = _points(x, self.dim)
        g, sing = self.base.gauge_gradient(self._pull(pts))
        return _matvec(self._inv.T, g), sing

    @property
    def bounded(self):
        return self.base.bounded

    @property
    def centered(self):
        return not np.any(self.z != 0)

    def volume(self):
        return self._absdet * self.base.volume()

    def _surface_draw(self, rng, size):
        p, nb, area = self.base._surface_draw(rng, size)
        nv = _matvec(self._inv.T, nb)
        s = _norms(nv)
        return _matvec(self.T, p) + self.z, nv / s[:, None], area * self._absdet * s

    def _uniform_draw(self, rng, size):
        return _matvec(self.T, self.base._uniform_draw(rng, size)) + self.z

    @property
    def symmetric(self):
        return self.base.symmetric and not np.any(self.z != 0)

    def radius_bound(self):
        return float(np.linalg.norm(self.T, 2) * self.base.radius_bound() + np.linalg.norm(self.z))


@dataclass(frozen=True, eq=False)
class AllSpace(ConvexBody):
    dim: int = 2
    bounded = False

    def _level(self, pts):
        return np.zeros(len(pts))

    def classify(self, x, tol=CLASSIFY_TOL):
        pts, single = _points(x, self.dim)
        if single:
            return Region.INTERIOR
        return np.full(len(pts), int(Region.INTERIOR))

    def _normal(self, pts):
        raise PreconditionError("all space has no boundary")

    def outward_normal(self, x, tol=CLASSIFY_TOL):
        raise PreconditionError("all space has no boundary")

    def gauge_gradient(self, x):
        pts, _ = _points(x, self.dim)
        return np.zeros_like(pts), np.zeros(len(pts), dtype=bool)

    def volume(self):
        return float("inf")

    @property
    def symmetric(self):
        return True


def affine_image(body, T, z=None):
    """T(body) + z, simplified to a plain Ball/Ellipsoid/AllSpace when possible."""
    n = body.dim
    T = _check_matrix(T, n, "affine map")
    zz = np.zeros(n) if z is None else np.asarray(z, dtype=float).ravel()
    if zz.shape != (n,):
        raise InputError("shift has the wrong dimension")
    if isinstance(body, AllSpace):
        return body
    if not np.any(zz != 0):
        if isinstance(body, Ball):
            c = T[0, 0]
            if c > 0 and np.array_equal(T, c * np.eye(n)):
                return Ball(body.radius * c, n)
            return Ellipsoid(body.radius * T)
        if isinstance(body, Ellipsoid):
            return Ellipsoid(T @ body.matrix)
    if isinstance(body, AffineImage):
        return AffineImage(body.base, T @ body.T, T @ body.z + zz)
    return AffineImage(body, T, zz)


# Module-level forms of the oracles.

def gauge(body, x):
    return body.gauge(x)


def classify(body, x, tol=CLASSIFY_TOL):
    return body.classify(x, tol)


def outward_normal(body, x, tol=CLASSIFY_TOL):
    return body.outward_normal(x, tol)


def surface_sample(body, count, seed, workers=1):
    return body.surface_sample(count, seed, workers=workers)
