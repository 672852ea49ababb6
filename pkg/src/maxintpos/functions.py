"""Log-concave functions f = exp(-phi) restricted to a convex support.

The potential families (zero, quadratic, gauge power, max of affine forms)
come with exact gradients. Pullbacks by a position compose the potential
with x -> T^{-1}(x - z) and move the support to T(K) + z.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .bodies import CLASSIFY_TOL, AffineImage, AllSpace, ConvexBody, Region, _matvec, _points
from .errors import InputError, PreconditionError, SingularPointError, UnsupportedError

TIE_TOL = 1e-12


def _compose_body(body, T, z):
    if isinstance(body, AllSpace):
        return body
    if isinstance(body, AffineImage):
        return AffineImage(body.base, T @ body.T, T @ body.z + z)
    return AffineImage(body, T, z)


class Potential:
    dim: int

    def value(self, pts):
        raise NotImplementedError

    def gradient(self, pts):
        """Return (gradients, singular mask)."""
        raise NotImplementedError

    @property
    def quadratic_hessian(self):
        """Constant Hessian if the potential is quadratic, else None."""
        return None

    @property
    def even(self):
        return False

    def minorant(self):
        """(c, d) with phi(x) >= c|x| + d on all of R^n (c may be 0)."""
        return 0.0, -np.inf

    def lower_bound(self, radius):
        """Lower bound of phi over the ball of the given radius."""
        c, d = self.minorant()
        return d


@dataclass(frozen=True, eq=False)
class Zero(Potential):
    dim: int

    def value(self, pts):
        return np.zeros(len(pts))

    def gradient(self, pts):
        return np.zeros_like(pts), np.zeros(len(pts), dtype=bool)

    @property
    def quadratic_hessian(self):
        return np.zeros((self.dim, self.dim))

    @property
    def even(self):
        return True

    def minorant(self):
        return 0.0, 0.0


@dataclass(frozen=True, eq=False)
class Quadratic(Potential):
    """phi(x) = 1/2 <x - m, S (x - m)> + c with S symmetric positive definite."""

    sigma_inv: np.ndarray
    mean: np.ndarray = None
    offset: float = 0.0

    def __post_init__(self):
        S = np.array(self.sigma_inv, dtype=float)
        if S.ndim == 0:
            S = S.reshape(1, 1)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise InputError("sigma_inv must be a square matrix")
        if not np.allclose(S, S.T, rtol=1e-12, atol=1e-14):
            raise InputError("sigma_inv must be symmetric")
        S = 0.5 * (S + S.T)
        eig = np.linalg.eigvalsh(S)
        if eig[0] <= 0:
            raise InputError("sigma_inv must be positive definite")
        n = S.shape[0]
        m = np.zeros(n) if self.mean is None else np.array(self.mean, dtype=float).ravel()
        if m.shape != (n,):
            raise InputError("mean has the wrong dimension")
        object.__setattr__(self, "sigma_inv", S)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "_min_eig", float(eig[0]))

    @property
    def dim(self):
        return self.sigma_inv.shape[0]

    def value(self, pts):
        d = pts - self.mean
        return 0.5 * np.einsum("mi,ij,mj->m", d, self.sigma_inv, d) + self.offset

    def gradient(self, pts):
        return _matvec(self.sigma_inv, pts - self.mean), np.zeros(len(pts), dtype=bool)

    @property
    def quadratic_hessian(self):
        return self.sigma_inv

    @property
    def even(self):
        return not np.any(self.mean != 0)

    def minorant(self):
        # 1/2 mu t^2 >= sqrt(mu) t - 1/2
        c = np.sqrt(self._min_eig)
        return c, self.offset - c * np.linalg.norm(self.mean) - 0.5

    def lower_bound(self, radius):
        return self.offset


@dataclass(frozen=True, eq=False)
class GaugePower(Potential):
    """phi(x) = ||x||_B^p for an origin-centred bounded body B and p >= 1."""

    body: ConvexBody
    power: float = 1.0

    def __post_init__(self):
        if not self.power >= 1:
            raise InputError("gauge exponent must be at least 1")
        if not (self.body.bounded and self.body.centered):
            raise InputError("gauge body must be bounded and centred at the origin")
        object.__setattr__(self, "power", float(self.power))

    @property
    def dim(self):
        return self.body.dim

    def value(self, pts):
        return self.body._level(pts) ** self.power

    def gradient(self, pts):
        g, sing = self.body.gauge_gradient(pts)
        if self.power == 1.0:
            return g, sing
        t = self.body._level(pts)
        scale = self.power * t ** (self.power - 1)
        sing = sing & (t > 0)
        return g * scale[:, None], sing

    @property
    def even(self):
        return self.body.symmetric

    def minorant(self):
        R = self.body.radius_bound()
        p = self.power
        # t^p >= p t - (p - 1) and ||x||_B >= |x| / R
        return p / R, -(p - 1.0)

    def lower_bound(self, radius):
        return 0.0


@dataclass(frozen=True, eq=False)
class LinearMax(Potential):
    """phi(x) = max_k <c_k, x> + d_k."""

    slopes: np.ndarray
    intercepts: np.ndarray

    def __post_init__(self):
        C = np.array(self.slopes, dtype=float)
        if C.ndim == 1:
            C = C[:, None]
        d = np.array(self.intercepts, dtype=float).ravel()
        if C.shape[0] != d.shape[0] or C.shape[0] == 0:
            raise InputError("slopes and intercepts must have the same number of rows")
        object.__setattr__(self, "slopes", C)
        object.__setattr__(self, "intercepts", d)

    @property
    def dim(self):
        return self.slopes.shape[1]

    def _affine(self, pts):
        return _matvec(self.slopes, pts) + self.intercepts

    def value(self, pts):
        return self._affine(pts).max(axis=1)

    def gradient(self, pts):
        v = self._affine(pts)
        top = v.max(axis=1)
        act = v >= top[:, None] - TIE_TOL * np.maximum(np.abs(top), 1.0)[:, None]
        return self.slopes[np.argmax(act, axis=1)], act.sum(axis=1) > 1

    @property
    def even(self):
        rows = np.column_stack([self.slopes, self.intercepts])
        flip = np.column_stack([-self.slopes, self.intercepts])
        return all(np.any(np.all(np.abs(rows - f) <= 1e-14, axis=1)) for f in flip)

    def _inradius(self):
        C = self.slopes
        n = self.dim
        if n == 1:
            return max(0.0, min(C.max(), -C.min()))
        if len(C) <= n:
            return 0.0
        try:
            hull = ConvexHull(C)
        except Exception:
            return 0.0
        off = hull.equations[:, -1]
        return max(0.0, float(np.min(-off)))

    def minorant(self):
        return self._inradius(), float(np.min(self.intercepts))

    def lower_bound(self, radius):
        return float(np.max(self.intercepts - np.linalg.norm(self.slopes, axis=1) * radius))


@dataclass(frozen=True, eq=False)
class Pullback(Potential):
    """x -> base(T^{-1}(x - z))."""

    base: Potential
    T: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_inv", np.linalg.inv(self.T))

    @classmethod
    def of(cls, base, T, z):
        if isinstance(base, Zero):
            return base
        if isinstance(base, Pullback):
            return cls(base.base, T @ base.T, T @ base.z + z)
        return cls(base, np.array(T, dtype=float), np.array(z, dtype=float))

    @property
    def dim(self):
        return self.base.dim

    def _pull(self, pts):
        return _matvec(self._inv, pts - self.z)

    def value(self, pts):
        return self.base.value(self._pull(pts))

    def gradient(self, pts):
        g, sing = self.base.gradient(self._pull(pts))
        return _matvec(self._inv.T, g), sing

    @property
    def quadratic_hessian(self):
        H = self.base.quadratic_hessian
        return None if H is None else self._inv.T @ H @ self._inv

    @property
    def even(self):
        return self.base.even and not np.any(self.z != 0)

    def minorant(self):
        c, d = self.base.minorant()
        k = c / np.linalg.norm(self.T, 2)
        return k, d - k * np.linalg.norm(self.z)

    def lower_bound(self, radius):
        rad = np.linalg.norm(self._inv, 2) * (radius + np.linalg.norm(self.z))
        return self.base.lower_bound(rad)


@dataclass(frozen=True, eq=False)
class LogConcaveFunc:
    """f(x) = exp(log_scale - phi(x)) on the closed support, 0 outside."""

    potential: Potential
    support: ConvexBody
    log_scale: float = 0.0

    def __post_init__(self):
        if self.potential.dim != self.support.dim:
            raise InputError("potential and support have different dimensions")
        if not np.isfinite(self.log_scale):
            raise InputError("log_scale must be finite")
        if not self.support.bounded and self.potential.minorant()[0] <= 0:
            raise InputError("potential is not coercive on an unbounded support")
        object.__setattr__(self, "log_scale", float(self.log_scale))

    @property
    def dim(self):
        return self.support.dim

    @property
    def bounded(self):
        return self.support.bounded

    @property
    def even(self):
        return self.potential.even and self.support.symmetric

    @property
    def second_moment_ok(self):
        # every provided family has a gradient of at most polynomial growth, so
        # |grad g|^2 = g^2 |grad phi|^2 is integrable whenever g is coercive
        return True

    @property
    def quadratic_hessian(self):
        return self.potential.quadratic_hessian

    # -- evaluation -----------------------------------------------------------
    def log_value(self, pts, tol=CLASSIFY_TOL):
        inside = self.support._level(pts) <= 1.0 + tol
        out = np.full(len(pts), -np.inf)
        out[inside] = self.log_scale - self.potential.value(pts[inside])
        return out

    def _closure_log_value(self, pts):
        """log f ignoring the support test (points known to lie on the boundary)."""
        return self.log_scale - self.potential.value(pts)

    def evaluate(self, x):
        pts, single = _points(x, self.dim)
        v = np.exp(self.log_value(pts))
        return v[0] if single else v

    __call__ = evaluate

    def potential_value(self, x):
        pts, single = _points(x, self.dim)
        v = self.potential.value(pts)
        return v[0] if single else v

    def potential_gradient(self, x):
        pts, single = _points(x, self.dim)
        lab = np.atleast_1d(self.support.classify(pts))
        if np.any(lab != Region.INTERIOR):
            raise PreconditionError("potential_gradient needs points interior to the support")
        g, sing = self.potential.gradient(pts)
        if np.any(sing):
            raise SingularPointError("potential is not differentiable here", pts[sing])
        return g[0] if single else g

    # -- transformations ------------------------------------------------------
    def pullback(self, pos):
        """x -> f(T^{-1}(x - z)) as a LogConcaveFunc on T(K) + z."""
        T = np.asarray(pos.T, dtype=float)
        z = np.asarray(pos.z, dtype=float)
        if T.shape != (self.dim, self.dim) or z.shape != (self.dim,):
            raise InputError("position has the wrong dimension")
        if abs(np.linalg.det(T)) == 0:
            raise InputError("position matrix is singular")
        return LogConcaveFunc(Pullback.of(self.potential, T, z),
                              _compose_body(self.support, T, z), self.log_scale)

    def scaled(self, c):
        if not c > 0:
            raise InputError("scale factor must be positive")
        return LogConcaveFunc(self.potential, self.support, self.log_scale + np.log(c))

    def restricted(self, body):
        """Same potential restricted to ``body``; the current support must be all space."""
        if not isinstance(self.support, AllSpace):
            raise UnsupportedError("restriction is only formed from full-support functions")
        return LogConcaveFunc(self.potential, body, self.log_scale)

    def describe(self):
        return {"potential": type(self.potential).__name__,
                "support": type(self.support).__name__,
                "log_scale": self.log_scale}


# -- constructors -------------------------------------------------------------

def indicator(body):
    return LogConcaveFunc(Zero(body.dim), body)


def gaussian(sigma_inv, mean=None, offset=0.0, support=None, normalized=False):
    """exp(-1/2 <x-m, S(x-m)> - offset), optionally scaled to a probability density."""
    q = Quadratic(sigma_inv, mean, offset)
    n = q.dim
    log_scale = 0.0
    if normalized:
        log_scale = 0.5 * np.linalg.slogdet(q.sigma_inv)[1] - 0.5 * n * np.log(2 * np.pi) + q.offset
    return LogConcaveFunc(q, support if support is not None else AllSpace(n), log_scale)


def standard_gaussian(dim, normalized=False):
    return gaussian(np.eye(dim), normalized=normalized)


def exp_gauge(body, power=1.0, support=None):
    return LogConcaveFunc(GaugePower(body, power), support if support is not None else AllSpace(body.dim))


def restricted_gaussian(body, sigma_inv=None, mean=None, normalized=False):
    sigma_inv = np.eye(body.dim) if sigma_inv is None else sigma_inv
    return gaussian(sigma_inv, mean, support=body, normalized=normalized)


def linear_max(slopes, intercepts, support=None):
    p = LinearMax(slopes, intercepts)
    return LogConcaveFunc(p, support if support is not None else AllSpace(p.dim))
