"""Objective values, first variations and the closed forms behind the existence bound.

Sign convention. With p = grad phi_g (g = exp(-phi_g)) and the moment bundle
M = G_int + G_bd, b = v_int + v_bd, moving g along the normalized path
T_eps = (I + eps D) / det(I + eps D)^{1/n} changes the objective at rate
<Pi_0(D), M>_F, and translating g by eps*y changes it at rate <b, y>.
Both are checked against central differences in the test suite.
"""
from dataclasses import dataclass, field
import numpy as np

from . import _rng
from .bodies import AllSpace, Ball, Region, _norms
from .errors import DecayFitError, InputError, UnsupportedScenarioError
from .position import DetMode, FixedDet, Free, Position, UnitDet, as_mode, sl_path, traceless
from .quadrature import (IntegralEstimate, MomentBundle, _Plan, default_domain, fit_plan,
                         integrate_product, moment_bundle, paired_difference, resolve_plan)

__all__ = [
    "DetMode", "FixedDet", "Free", "UnitDet", "Position", "VariationReport", "Gradient", "FDCheck",
    "objective", "sl_directional_derivative", "shift_directional_derivative", "gradient",
    "fd_check", "closed_form_I", "objective_upper_bound", "fit_linear_decay", "traceless",
    "sl_path", "check_regularity",
]

NEAR_ONE = 1e-12
SERIES_ZONE = 1e-6


@dataclass(frozen=True)
class VariationReport:
    direction: np.ndarray
    interior_term: float
    boundary_term: float
    total: float
    interior_stderr: float
    boundary_stderr: float
    total_stderr: float

    def to_dict(self):
        return {"direction": np.asarray(self.direction).tolist(), "interior_term": self.interior_term,
                "boundary_term": self.boundary_term, "total": self.total,
                "interior_stderr": self.interior_stderr, "boundary_stderr": self.boundary_stderr,
                "total_stderr": self.total_stderr}


@dataclass(frozen=True)
class Gradient:
    """Ascent direction of the objective in (matrix, shift) coordinates."""

    G: np.ndarray
    v: np.ndarray
    G_stderr: np.ndarray
    v_stderr: np.ndarray
    bundle: MomentBundle = field(repr=False, default=None)

    @property
    def norm(self):
        return float(np.sqrt(np.sum(self.G ** 2) + np.sum(self.v ** 2)))

    @property
    def norm_stderr(self):
        """Frobenius norm of the entrywise standard errors."""
        return float(np.sqrt(np.sum(self.G_stderr ** 2) + np.sum(self.v_stderr ** 2)))


@dataclass(frozen=True)
class FDCheck:
    analytic: float
    numeric: float
    gap: float
    analytic_stderr: float
    numeric_stderr: float

    @property
    def combined_stderr(self):
        return float(np.hypot(self.analytic_stderr, self.numeric_stderr))

    def bound(self, rel=2e-3, floor=1e-6, k=3.0):
        return max(k * self.combined_stderr, rel * abs(self.numeric) + floor)

    def passed(self, factor=1.0):
        return self.gap <= factor * self.bound()

    def to_dict(self):
        return {"analytic": self.analytic, "numeric": self.numeric, "gap": self.gap,
                "analytic_stderr": self.analytic_stderr, "numeric_stderr": self.numeric_stderr,
                "bound": self.bound()}


# -- objective ----------------------------------------------------------------

def objective(f, g, pos, budget=200_000, seed=0, domain=None, workers=1):
    """P(T, z) = int f(x) g(T^{-1}(x - z)) dx at a validated position."""
    if not isinstance(pos, Position):
        raise InputError("objective needs a Position")
    return integrate_product(f, g, pos, budget, seed, domain, workers)


def check_regularity(f, g, count=4096, seed=0, max_fraction=1e-3):
    """Reject pairs whose boundaries overlap on a set of positive surface measure.

    Samples the boundary of K_g and counts points that also lie on the
    boundary of K_f; also requires the bounded-second-moment flag of g.
    """
    if not g.second_moment_ok:
        raise UnsupportedScenarioError("g lacks a bounded second moment of its gradient")
    if isinstance(f.support, AllSpace) or isinstance(g.support, AllSpace):
        return True
    s = g.support.surface_sample(count, seed, stream=_rng.AUX)
    lab = np.asarray(f.support.classify(s.points, 1e-9))
    frac = float(np.mean(lab == Region.BOUNDARY))
    if frac > max_fraction:
        raise UnsupportedScenarioError(
            f"supports share boundary ({frac:.1%} of sampled boundary points); support regularity fails")
    return True


def _pairing_stderr(cov, weights):
    return float(np.sqrt(max(weights @ cov @ weights, 0.0)))


def sl_directional_derivative(f, g, T_dir, budget=200_000, seed=0, bundle=None, workers=1,
                              check=True):
    """d/d eps of the objective along g -> g(T_eps^{-1} x), T_eps the normalized path of T_dir."""
    T_dir = np.asarray(T_dir, dtype=float)
    n = f.dim
    if T_dir.shape != (n, n):
        raise InputError("direction has the wrong shape")
    if bundle is None:
        if check:
            check_regularity(f, g)
        bundle = moment_bundle(f, g, budget, seed, workers=workers)
    D = traceless(T_dir)
    if not np.any(D):
        return VariationReport(T_dir, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    w = D.ravel()
    k = n * n
    interior = float(np.sum(D * bundle.G_int))
    boundary = float(np.sum(D * bundle.G_bd))
    se_i = _pairing_stderr(bundle.cov_int[:k, :k], w)
    se_b = _pairing_stderr(bundle.cov_bd[:k, :k], w)
    return VariationReport(T_dir, interior, boundary, interior + boundary, se_i, se_b, float(np.hypot(se_i, se_b)))


def shift_directional_derivative(f, g, y, budget=200_000, seed=0, bundle=None, workers=1, check=True):
    """d/d eps of int f(x) g(x - eps y) dx at eps = 0."""
    y = np.asarray(y, dtype=float).ravel()
    n = f.dim
    if y.shape != (n,):
        raise InputError("direction has the wrong dimension")
    if bundle is None:
        if check:
            check_regularity(f, g)
        bundle = moment_bundle(f, g, budget, seed, workers=workers)
    sl = slice(n * n, n * n + n)
    interior = float(bundle.v_int @ y)
    boundary = float(bundle.v_bd @ y)
    se_i = _pairing_stderr(bundle.cov_int[sl, sl], y)
    se_b = _pairing_stderr(bundle.cov_bd[sl, sl], y)
    return VariationReport(y, interior, boundary, interior + boundary, se_i, se_b, float(np.hypot(se_i, se_b)))


def gradient(f, g, budget=200_000, seed=0, mode=UnitDet, workers=1, bundle=None, check=True):
    """Gradient (G, v) with directional derivative <G, D> + <v, y> along (D, y).

    G is the traceless part of M when the determinant is constrained and M
    itself in free mode.
    """
    mode = as_mode(mode)
    if bundle is None:
        if check:
            check_regularity(f, g)
        bundle = moment_bundle(f, g, budget, seed, workers=workers)
    n = f.dim
    cov_M = bundle.cov_M()
    if mode.kind == "free":
        G, cov_G = bundle.M.copy(), cov_M
    else:
        G = traceless(bundle.M)
        P = np.eye(n * n) - np.outer(np.eye(n).ravel(), np.eye(n).ravel()) / n
        cov_G = P @ cov_M @ P.T
    G_se = np.sqrt(np.clip(np.diag(cov_G), 0, None)).reshape(n, n)
    v_se = np.sqrt(np.clip(np.diag(bundle.cov_b()), 0, None))
    return Gradient(G, bundle.b.copy(), G_se, v_se, bundle)


def _fd_domain(f, g):
    dom = default_domain(f, g)
    if dom == "gauss":
        return fit_plan([f, g], f.even and g.even)
    return dom


def fd_check(f, g, direction, h=1e-3, budget=200_000, seed=0, workers=1, fd_budget=None):
    """Compare the analytic derivative with a central difference under common random numbers.

    ``direction`` is an n x n matrix (path T_eps) or a vector (translation).
    """
    if not 1e-4 <= h <= 1e-1:
        raise InputError("h must lie in [1e-4, 1e-1]")
    direction = np.asarray(direction, dtype=float)
    n = f.dim
    fd_budget = budget if fd_budget is None else fd_budget
    if direction.ndim == 2:
        rep = sl_directional_derivative(f, g, direction, budget, seed, workers=workers)
        lo = Position(sl_path(direction, -h), None, Free)
        hi = Position(sl_path(direction, h), None, Free)
    else:
        rep = shift_directional_derivative(f, g, direction, budget, seed, workers=workers)
        lo = Position(np.eye(n), -h * direction, Free)
        hi = Position(np.eye(n), h * direction, Free)
    dom = _fd_domain(f, g)
    pd = paired_difference(f, g, lo, hi, fd_budget, seed + 1, dom, workers)
    numeric = pd.difference / (2 * h)
    return FDCheck(rep.total, numeric, abs(rep.total - numeric), rep.total_stderr,
                   pd.difference_stderr / (2 * h))


# -- closed forms and existence bound -----------------------------------------

def closed_form_I(lam, s):
    """int over R of exp(-(|t| + |lam t + s|)) dt."""
    lam = float(lam)
    if not lam > 0:
        raise InputError("lambda must be positive")
    a = abs(float(s))
    if abs(lam - 1.0) <= NEAR_ONE:
        return (a + 1.0) * np.exp(-a)
    if abs(lam - 1.0) <= SERIES_ZONE:
        # the two exponential terms nearly cancel; expand (1 - e^{-x}) / x stably
        x = (1.0 - lam) * a / lam
        ratio = 1.0 if x == 0 else -np.expm1(-x) / x
        return (np.exp(-a / lam) + np.exp(-a)) / (1.0 + lam) + np.exp(-a) * (a / lam) * ratio
    return 2.0 * (np.exp(-a) - lam * np.exp(-a / lam)) / (1.0 - lam * lam)


@dataclass(frozen=True)
class Decay:
    """Linear decay of both factors: -log f >= c|x| + d and -log g >= a|x| + b."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (self.a > 0 and self.c > 0):
            raise InputError("decay rates a and c must be positive")
        if not all(np.isfinite(v) for v in (self.a, self.b, self.c, self.d)):
            raise InputError("decay parameters must be finite")

    @classmethod
    def of(cls, f, g, **kw):
        c, d = fit_linear_decay(f, **kw)
        a, b = fit_linear_decay(g, **kw)
        return cls(a, b, c, d)

    def constant(self, n):
        m = min(self.a, self.c)
        return float(np.exp(-(self.b + self.d)) * m ** (-n) * n ** (n / 2))


def objective_upper_bound(decay, T, z=None):
    """Upper bound for P(T, z) from the linear decay of both factors.

    |det T| * C(a, b, c, d, n) * prod_i I(lambda_i, s_i) with lambda_i the singular
    values of T; without z the shift-free maximum I(lambda, 0) = 2/(1 + lambda) is used.
    """
    if not isinstance(decay, Decay):
        decay = Decay(*decay)
    T = np.atleast_2d(np.asarray(T, dtype=float))
    n = T.shape[0]
    U, lam, _ = np.linalg.svd(T)
    if z is None:
        s = np.zeros(n)
    else:
        s = U.T @ (min(decay.a, decay.c) * np.asarray(z, dtype=float)) / np.sqrt(n)
    prod = np.prod([closed_form_I(l, si) for l, si in zip(lam, s)])
    return float(abs(np.linalg.det(T)) * decay.constant(n) * prod)


def fit_linear_decay(f, samples=10_000, seed=0, radius=None):
    """Constants (c, d) with -log f(x) >= c|x| + d, certified on sampled points.

    The constants come from the potential family (strong convexity of a
    quadratic, the inradius of the slope set of a max of affine forms, the
    outer radius of a gauge body, or the radius of a bounded support) and are
    then tested at ``samples`` points; any violation raises DecayFitError.
    """
    pot = f.potential
    if f.bounded:
        R = f.support.radius_bound()
        c0, d0 = pot.minorant()
        low = pot.lower_bound(R)
        c = 1.0 / R
        # on the support c|x| <= 1; keep the potential's own minorant if it decays faster
        d = low - 1.0
        if c0 > c and np.isfinite(d0):
            c, d = c0, d0
    else:
        c, d = pot.minorant()
        if not (c > 0 and np.isfinite(d)):
            raise DecayFitError("potential is not coercive on the full support")
    d = d - f.log_scale
    # sampled certification
    rng = _rng.generator(seed, _rng.AUX, 0)
    n = f.dim
    if f.bounded:
        pts = f.support._uniform_draw(rng, samples)
    else:
        rad = radius if radius is not None else max(10.0, 10.0 / c)
        pts = Ball(rad, n)._uniform_draw(rng, samples)
    lv = f.log_value(pts)
    keep = np.isfinite(lv)
    slack = -lv[keep] - (c * _norms(pts[keep]) + d)
    if np.any(slack < -1e-12 * (1 + np.abs(lv[keep]))):
        i = int(np.argmin(slack))
        raise DecayFitError("linear decay bound violated", point=pts[keep][i])
    return float(c), float(d)
