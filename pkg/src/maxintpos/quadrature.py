"""Monte Carlo integration of products f(x) g(x) and of their moment integrals.

Sampling plans
--------------
* at least one bounded support: uniform points in the smaller bounded support,
  weight vol * f * g (the other factor acts as the rejection test);
* both supports all of R^n: Gaussian proposal centred at the mode of
  phi_f + phi_g with covariance from the quadratic parts, truncated where the
  proposal tail mass drops below ``TAIL_MASS``;
* full supports without any quadratic part: radial proposal with
  Gamma(n)-distributed radius matched to the linear decay rate.

When both functions are even, points are drawn in antithetic pairs (x, -x)
and each pair is averaged, so odd moments vanish exactly.
"""
from dataclasses import dataclass, field
from math import lgamma

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize
from scipy.special import gammaln
from scipy.stats import chi2

from . import _rng
from .bodies import AllSpace, ConvexBody, _matvec, _norms, sphere_area
from .errors import InputError, SingularPointError, UnsupportedBodyError, UnsupportedScenarioError

TAIL_MASS = 1e-12
MIN_BUDGET = 1000
INTERIOR_SHARE = 0.7
HEAVY_TAIL_RATIO = 2.0
_MAX_RESAMPLE = 20


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    stderr: float
    samples: int
    seed: int
    empty: bool = False

    def to_dict(self):
        return {"value": self.value, "stderr": self.stderr, "samples": self.samples,
                "seed": self.seed, "empty": self.empty}


# -- sampling plans -----------------------------------------------------------

class _Plan:
    antithetic = False

    def controls(self, pts):
        """Functions of the proposal point with known mean zero, or None."""
        return None

    def draw_base(self, rng, size):
        """Points and log(1/q) for ``size`` independent proposals."""
        raise NotImplementedError

    def draw(self, rng, size):
        if not self.antithetic:
            return self.draw_base(rng, size)
        h = max(size // 2, 1)
        p, lw = self.draw_base(rng, h)
        return np.concatenate([p, -p]), np.concatenate([lw, lw])

    def pairs(self, size):
        return max(size // 2, 1) if self.antithetic else size


class UniformPlan(_Plan):
    def __init__(self, body, antithetic=False):
        if not body.bounded:
            raise UnsupportedBodyError("uniform plan needs a bounded body")
        self.body = body
        self.antithetic = bool(antithetic and body.symmetric)
        self._logvol = float(np.log(body.volume()))

    def draw_base(self, rng, size):
        return self.body._uniform_draw(rng, size), np.full(size, self._logvol)

    def describe(self):
        return {"plan": "uniform", "body": type(self.body).__name__}


class GaussianPlan(_Plan):
    def __init__(self, mean, cov, antithetic=False, tail_mass=TAIL_MASS):
        self.mean = np.asarray(mean, dtype=float)
        self.chol = np.linalg.cholesky(cov)
        n = len(self.mean)
        self.radius2 = float(chi2.isf(tail_mass, n))
        self.antithetic = bool(antithetic and not np.any(self.mean != 0))
        self._lognorm = float(np.sum(np.log(np.diag(self.chol))) + 0.5 * n * np.log(2 * np.pi))

    def controls(self, pts):
        xi = solve_triangular(self.chol, (pts - self.mean).T, lower=True).T
        n = xi.shape[1]
        iu = np.triu_indices(n)
        quad = np.einsum("mi,mj->mij", xi, xi)[:, iu[0], iu[1]] - np.eye(n)[iu]
        return np.column_stack([xi, quad])

    def draw_base(self, rng, size):
        xi = rng.standard_normal((size, len(self.mean)))
        r2 = np.einsum("ij,ij->i", xi, xi)
        lw = 0.5 * r2 + self._lognorm
        lw[r2 > self.radius2] = -np.inf
        return self.mean + _matvec(self.chol, xi), lw

    def describe(self):
        return {"plan": "gaussian", "mean": self.mean.tolist(),
                "cov": (self.chol @ self.chol.T).tolist(), "truncation_radius": self.radius2 ** 0.5}


class RadialPlan(_Plan):
    def __init__(self, center, theta, antithetic=False):
        self.center = np.asarray(center, dtype=float)
        self.theta = float(theta)
        n = len(self.center)
        self.antithetic = bool(antithetic and not np.any(self.center != 0))
        self._lognorm = lgamma(n) + n * np.log(self.theta) + np.log(sphere_area(n))

    def draw_base(self, rng, size):
        n = len(self.center)
        u = rng.standard_normal((size, n))
        u /= _norms(u)[:, None]
        rho = rng.gamma(n, self.theta, size)
        return self.center + u * rho[:, None], rho / self.theta + self._lognorm

    def describe(self):
        return {"plan": "radial", "center": self.center.tolist(), "theta": self.theta}


def _potential_sum(funcs, pts):
    return sum(fn.potential.value(pts) for fn in funcs)


def _gradient_sum(funcs, pts):
    return sum(fn.potential.gradient(pts)[0] for fn in funcs)


def fit_plan(funcs, antithetic=False, tail_mass=TAIL_MASS):
    """Proposal for the product of ``funcs`` (all with full support)."""
    n = funcs[0].dim
    hs = [fn.quadratic_hessian for fn in funcs]
    hs = [h for h in hs if h is not None]
    H = sum(hs) if hs else None
    if H is not None and np.linalg.eigvalsh(H)[0] > 1e-12:
        x = np.zeros(n)
        if not antithetic:
            Hinv = np.linalg.inv(H)
            phi = lambda p: float(_potential_sum(funcs, p[None, :])[0])
            for _ in range(20):
                step = -Hinv @ _gradient_sum(funcs, x[None, :])[0]
                if np.linalg.norm(step) <= 1e-12 * (1 + np.linalg.norm(x)):
                    break
                t, f0 = 1.0, phi(x)
                while t > 1e-8 and phi(x + t * step) > f0:
                    t *= 0.5
                x = x + t * step
        return GaussianPlan(x, np.linalg.inv(H), antithetic, tail_mass)
    rate = sum(fn.potential.minorant()[0] for fn in funcs)
    if rate <= 0:
        raise UnsupportedScenarioError("product is not integrable: no linear decay")
    center = np.zeros(n)
    if not antithetic:
        res = minimize(lambda p: float(_potential_sum(funcs, p[None, :])[0]), center,
                       method="Nelder-Mead", options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000})
        center = res.x
    return RadialPlan(center, 1.0 / rate, antithetic)


def default_domain(f, g):
    """'f', 'g' (uniform in that support) or 'gauss' (both supports unbounded)."""
    cands = [(fn.support.volume(), i, name) for i, (fn, name) in enumerate(((f, "f"), (g, "g")))
             if fn.bounded]
    if not cands:
        return "gauss"
    return min(cands)[2]


def resolve_plan(f, g, domain=None, antithetic=None):
    if antithetic is None:
        antithetic = f.even and g.even
    if isinstance(domain, _Plan):
        return domain
    if domain is None:
        domain = default_domain(f, g)
    if domain == "f":
        return UniformPlan(f.support, antithetic)
    if domain == "g":
        return UniformPlan(g.support, antithetic)
    if domain == "gauss":
        if f.bounded or g.bounded:
            raise InputError("a proposal over all space needs two full-support functions")
        return fit_plan([f, g], antithetic)
    raise InputError(f"unknown sampling domain {domain!r}")


def _check_budget(budget):
    budget = int(budget)
    if budget < MIN_BUDGET:
        raise InputError(f"budget must be at least {MIN_BUDGET}")
    return budget


def _product_log_weight(f, g, pts, lw):
    return f.log_value(pts) + g.log_value(pts) + lw


def _pair_mean(y, plan):
    if not plan.antithetic:
        return y
    h = len(y) // 2
    return 0.5 * (y[:h] + y[h:])


def _with_controls(y, plan, pts):
    """Append the plan's control variates (pair-averaged like ``y``) as extra columns."""
    c = plan.controls(pts)
    if c is None:
        return y
    return np.column_stack([y, _pair_mean(c, plan)])


def _reduce(mom, d):
    """Mean and covariance of the mean of the first ``d`` features.

    Any further columns are control variates with known mean zero; the
    estimate is regression-adjusted on them and the covariance is the
    residual one.
    """
    if len(mom.mean) == d or mom.n < 3:
        cov = mom.covariance_of_mean()
        return mom.mean[:d].copy(), cov[:d, :d].copy()
    S = mom.m2 / (mom.n - 1)
    Syy, Syc, Scc = S[:d, :d], S[:d, d:], S[d:, d:]
    var = np.diag(Scc)
    keep = var > 1e-14 * max(float(var.max()), 1e-300)
    if not np.any(keep):
        return mom.mean[:d].copy(), Syy / mom.n
    Syc, Scc = Syc[:, keep], Scc[np.ix_(keep, keep)]
    beta = np.linalg.lstsq(Scc, Syc.T, rcond=1e-12)[0]
    mean = mom.mean[:d] - beta.T @ mom.mean[d:][keep]
    cov = Syy - Syc @ beta
    cov = 0.5 * (cov + cov.T)
    return mean, cov / mom.n


def spread_ratio(blocks, d):
    """Largest ratio, over the first d features, of pooled variance to the median block variance.

    Close to 1 when the integrand has finite variance. When it does not, the
    pooled variance is carried by a few extreme samples and keeps growing with
    the budget while a typical block does not see them.
    """
    blocks = [b for b in blocks if b.n > 1]
    if len(blocks) < 4:
        return float("nan")
    pooled = _rng.Moments.combine(blocks)
    v_all = np.diag(pooled.m2)[:d] / (pooled.n - 1)
    v_blk = np.median([np.diag(b.m2)[:d] / (b.n - 1) for b in blocks], axis=0)
    live = v_blk > 1e-300
    if not np.any(live):
        return 1.0
    return float(np.max(v_all[live] / v_blk[live]))


# -- products -----------------------------------------------------------------

def integrate_product(f, g, pos=None, budget=200_000, seed=0, domain=None, workers=1):
    """Estimate P(T, z) = int f(x) g(T^{-1}(x - z)) dx."""
    budget = _check_budget(budget)
    gp = g.pullback(pos) if pos is not None else g
    if gp.dim != f.dim:
        raise InputError("f and g have different dimensions")
    plan = resolve_plan(f, gp, domain)

    def block(b, size):
        rng = _rng.generator(seed, _rng.INTERIOR, b)
        pts, lw = plan.draw(rng, size)
        w = np.exp(_product_log_weight(f, gp, pts, lw))
        return _rng.Moments.of(_with_controls(_pair_mean(w, plan), plan, pts))

    mom = _rng.Moments.combine(_rng.map_blocks(block, _rng.block_sizes(budget), workers))
    if mom.mean[0] == 0.0 and mom.m2[0, 0] == 0.0:
        return IntegralEstimate(0.0, 0.0, mom.n, seed, empty=True)
    mean, cov = _reduce(mom, 1)
    return IntegralEstimate(float(mean[0]), float(np.sqrt(max(cov[0, 0], 0.0))), mom.n, seed)


@dataclass(frozen=True)
class PairedEstimate:
    """Two objective values under common random numbers and their difference."""

    first: IntegralEstimate
    second: IntegralEstimate
    difference: float
    difference_stderr: float


def paired_difference(f, g, pos_a, pos_b, budget=200_000, seed=0, domain=None, workers=1):
    """P(pos_b) - P(pos_a) with both evaluations driven by the same random stream."""
    budget = _check_budget(budget)
    ga, gb = g.pullback(pos_a), g.pullback(pos_b)
    anti = f.even and ga.even and gb.even
    if domain is None:
        domain = default_domain(f, ga)
    plan_a = resolve_plan(f, ga, domain, anti)
    # a uniform plan on g's support follows g; every other plan is shared
    plan_b = resolve_plan(f, gb, "g", anti) if domain == "g" else plan_a

    def block(b, size):
        pa, la = plan_a.draw(_rng.generator(seed, _rng.INTERIOR, b), size)
        pb, lb = plan_b.draw(_rng.generator(seed, _rng.INTERIOR, b), size)
        wa = _pair_mean(np.exp(_product_log_weight(f, ga, pa, la)), plan_a)
        wb = _pair_mean(np.exp(_product_log_weight(f, gb, pb, lb)), plan_b)
        y = np.column_stack([wa, wb, wb - wa])
        return _rng.Moments.of(_with_controls(y, plan_a, pa) if plan_b is plan_a else y)

    mom = _rng.Moments.combine(_rng.map_blocks(block, _rng.block_sizes(budget), workers))
    mean, cov = _reduce(mom, 3)
    se = np.sqrt(np.clip(np.diag(cov), 0, None))
    est = [IntegralEstimate(float(mean[k]), float(se[k]), mom.n, seed,
                            empty=bool(mom.mean[k] == 0 and mom.m2[k, k] == 0)) for k in (0, 1)]
    return PairedEstimate(est[0], est[1], float(mean[2]), float(se[2]))


# -- moment bundle ------------------------------------------------------------

@dataclass
class MomentBundle:
    """Interior and boundary moment integrals of f g against g's potential gradient.

    Interior (over K_f and the interior of K_g), with p = grad phi_g:
        G_int = int f g p (x) x^T,  v_int = int f g p,  s_int = int f g <p, x>
    Boundary (over K_f and the boundary of K_g), with outer normal nu:
        G_bd = surface int f g nu x^T,  v_bd = surface int f g nu,  s_bd = surface int f g <nu, x>
    """

    dim: int
    G_int: np.ndarray
    v_int: np.ndarray
    s_int: float
    G_bd: np.ndarray
    v_bd: np.ndarray
    s_bd: float
    abs_int: float
    mass_bd: float
    cov_int: np.ndarray = field(repr=False)
    cov_bd: np.ndarray = field(repr=False)
    samples_int: int = 0
    samples_bd: int = 0
    seed: int = 0
    boundary_free: bool = False
    spread_ratio: float = float("nan")

    @property
    def heavy_tail_suspect(self):
        """Interior variance dominated by a few blocks: its stderr is not to be trusted."""
        return bool(self.spread_ratio > HEAVY_TAIL_RATIO)

    def _se(self, cov, sl):
        return np.sqrt(np.clip(np.diag(cov)[sl], 0, None))

    @property
    def _slices(self):
        n = self.dim
        return slice(0, n * n), slice(n * n, n * n + n), n * n + n, n * n + n + 1

    @property
    def G_int_stderr(self):
        return self._se(self.cov_int, self._slices[0]).reshape(self.dim, self.dim)

    @property
    def v_int_stderr(self):
        return self._se(self.cov_int, self._slices[1])

    @property
    def s_int_stderr(self):
        k = self._slices[2]
        return float(np.sqrt(max(self.cov_int[k, k], 0.0)))

    @property
    def G_bd_stderr(self):
        return self._se(self.cov_bd, self._slices[0]).reshape(self.dim, self.dim)

    @property
    def v_bd_stderr(self):
        return self._se(self.cov_bd, self._slices[1])

    @property
    def s_bd_stderr(self):
        k = self._slices[2]
        return float(np.sqrt(max(self.cov_bd[k, k], 0.0)))

    @property
    def M(self):
        return self.G_int + self.G_bd

    @property
    def b(self):
        return self.v_int + self.v_bd

    @property
    def C(self):
        return float(np.trace(self.M)) / self.dim

    @property
    def scale(self):
        """Natural size of the centering vector: int f g |grad phi| + surface int f g."""
        return self.abs_int + self.mass_bd

    def cov_M(self):
        s = self._slices[0]
        return self.cov_int[s, s] + self.cov_bd[s, s]

    def cov_b(self):
        s = self._slices[1]
        return self.cov_int[s, s] + self.cov_bd[s, s]

    def to_dict(self):
        return {"G_int": self.G_int.tolist(), "v_int": self.v_int.tolist(), "s_int": self.s_int,
                "G_bd": self.G_bd.tolist(), "v_bd": self.v_bd.tolist(), "s_bd": self.s_bd,
                "G_int_stderr": self.G_int_stderr.tolist(), "v_int_stderr": self.v_int_stderr.tolist(),
                "s_int_stderr": self.s_int_stderr, "G_bd_stderr": self.G_bd_stderr.tolist(),
                "v_bd_stderr": self.v_bd_stderr.tolist(), "s_bd_stderr": self.s_bd_stderr,
                "samples_int": self.samples_int, "samples_bd": self.samples_bd,
                "boundary_free": self.boundary_free, "spread_ratio": self.spread_ratio,
                "heavy_tail_suspect": self.heavy_tail_suspect}


def _draw_regular(plan, rng, size, g):
    """Draw from ``plan`` and redraw any proposal where g's potential has no gradient."""
    pts, lw = plan.draw(rng, size)
    grad, sing = g.potential.gradient(pts)
    for _ in range(_MAX_RESAMPLE):
        if plan.antithetic:
            h = len(pts) // 2
            bad = np.flatnonzero(sing[:h] | sing[h:])
        else:
            h = len(pts)
            bad = np.flatnonzero(sing)
        if len(bad) == 0:
            return pts, lw, grad
        p, l = plan.draw_base(rng, len(bad))
        idx = bad
        pts[idx], lw[idx] = p, l
        if plan.antithetic:
            pts[idx + h], lw[idx + h] = -p, l
            idx = np.concatenate([idx, idx + h])
        grad[idx], sing[idx] = g.potential.gradient(pts[idx])
    raise SingularPointError("could not avoid non-differentiable points", pts[sing])


def _interior_features(pts, grad, w):
    m, n = pts.shape
    outer = np.einsum("mi,mj->mij", grad, pts).reshape(m, n * n)
    dot = np.einsum("mi,mi->m", grad, pts)
    ab = _norms(grad)
    return np.column_stack([outer, grad, dot, ab]) * w[:, None]


def _boundary_features(pts, nrm, w):
    m, n = pts.shape
    outer = np.einsum("mi,mj->mij", nrm, pts).reshape(m, n * n)
    dot = np.einsum("mi,mi->m", nrm, pts)
    return np.column_stack([outer, nrm, dot, np.ones(m)]) * w[:, None]


def boundary_draw(f, g, rng, size, antithetic):
    """Surface points of K_g with weights area * f * g (zero outside K_f)."""
    if antithetic:
        p, nv, a = g.support._surface_draw(rng, max(size // 2, 1))
        p, nv, a = np.concatenate([p, -p]), np.concatenate([nv, -nv]), np.concatenate([a, a])
    else:
        p, nv, a = g.support._surface_draw(rng, size)
    lw = f.log_value(p) + g._closure_log_value(p)
    return p, nv, a * np.exp(lw)


def moment_bundle(f, g, budget=200_000, seed=0, domain=None, workers=1, antithetic=None):
    """All interior and boundary moment integrals for (f, g) at the reference position."""
    budget = _check_budget(budget)
    if f.dim != g.dim:
        raise InputError("f and g have different dimensions")
    if not g.second_moment_ok:
        raise UnsupportedScenarioError("g lacks a bounded second moment of its gradient")
    full = isinstance(g.support, AllSpace)
    if not full and not g.bounded:
        raise UnsupportedBodyError("unbounded supports other than all space are not handled")
    if antithetic is None:
        antithetic = f.even and g.even
    n = f.dim
    d = n * n + n + 2
    plan = resolve_plan(f, g, domain, antithetic)
    n_int = budget if full else int(round(INTERIOR_SHARE * budget))
    n_bd = 0 if full else budget - n_int

    def interior(b, size):
        rng = _rng.generator(seed, _rng.INTERIOR, b)
        pts, lw, grad = _draw_regular(plan, rng, size, g)
        w = np.exp(_product_log_weight(f, g, pts, lw))
        y = _pair_mean(_interior_features(pts, grad, w), plan)
        return _rng.Moments.of(_with_controls(y, plan, pts))

    blocks_int = _rng.map_blocks(interior, _rng.block_sizes(n_int), workers)
    m_int = _rng.Moments.combine(blocks_int)

    if full:
        m_bd = _rng.Moments(0, np.zeros(d), np.zeros((d, d)))
    else:
        pair = bool(antithetic and g.support.symmetric)

        def boundary(b, size):
            rng = _rng.generator(seed, _rng.BOUNDARY, b)
            p, nv, w = boundary_draw(f, g, rng, size, pair)
            y = _boundary_features(p, nv, w)
            if pair:
                h = len(y) // 2
                y = 0.5 * (y[:h] + y[h:])
            return _rng.Moments.of(y)

        m_bd = _rng.Moments.combine(_rng.map_blocks(boundary, _rng.block_sizes(n_bd), workers))

    a, cov_int = _reduce(m_int, d)
    c, cov_bd = m_bd.mean, m_bd.covariance_of_mean()
    return MomentBundle(
        dim=n,
        G_int=a[:n * n].reshape(n, n).copy(), v_int=a[n * n:n * n + n].copy(), s_int=float(a[-2]),
        G_bd=c[:n * n].reshape(n, n).copy(), v_bd=c[n * n:n * n + n].copy(), s_bd=float(c[-2]),
        abs_int=float(a[-1]), mass_bd=float(c[-1]),
        cov_int=cov_int, cov_bd=cov_bd,
        samples_int=m_int.n, samples_bd=m_bd.n, seed=seed, boundary_free=full,
        spread_ratio=spread_ratio(blocks_int, d))


# -- auxiliary integrals ------------------------------------------------------

def barycenter(f, budget=100_000, seed=0, workers=1):
    """Centre of mass of f."""
    budget = _check_budget(budget)
    if f.bounded:
        plan = UniformPlan(f.support, f.even)
    else:
        plan = fit_plan([f], f.even)

    def block(b, size):
        pts, lw = plan.draw(_rng.generator(seed, _rng.AUX, b), size)
        w = np.exp(f.log_value(pts) + lw)
        return _rng.Moments.of(_pair_mean(np.column_stack([w, pts * w[:, None]]), plan))

    mom = _rng.Moments.combine(_rng.map_blocks(block, _rng.block_sizes(budget), workers))
    if mom.mean[0] <= 0:
        return np.zeros(f.dim)
    return mom.mean[1:] / mom.mean[0]


@dataclass(frozen=True)
class PolarCheck:
    lhs: float
    rhs: float
    lhs_stderr: float
    rhs_stderr: float

    @property
    def gap(self):
        return abs(self.lhs - self.rhs)

    @property
    def combined_stderr(self):
        return float(np.hypot(self.lhs_stderr, self.rhs_stderr))

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "lhs_stderr": self.lhs_stderr,
                "rhs_stderr": self.rhs_stderr}


def polar_identity_check(phi, M, A, T, budget=200_000, seed=0, workers=1):
    """Two independent estimates of the polar surface identity for the body TM.

    lhs = Gamma(n) * surface integral over the boundary of TM of phi(x) <nu(x), A x>,
    rhs = int over R^n of |grad exp(-||x||)| phi(x') <nu(x'), A x'> dx with x' = x / ||x||,
    where ||.|| is the gauge of TM and nu its outer normal.
    """
    budget = _check_budget(budget)
    if not (isinstance(M, ConvexBody) and M.bounded and M.centered):
        raise InputError("M must be a bounded body with the origin inside")
    n = M.dim
    A = np.asarray(A, dtype=float).reshape(n, n)
    T = np.asarray(T, dtype=float).reshape(n, n)
    if abs(np.linalg.det(T) - 1.0) > 1e-10:
        raise InputError("T must have determinant 1")
    from .bodies import affine_image
    body = affine_image(M, T)
    lg = gammaln(n)
    half = budget // 2

    def lhs_block(b, size):
        p, nv, area = body._surface_draw(_rng.generator(seed, _rng.SURFACE, b), size)
        y = np.exp(lg) * area * np.asarray(phi(p), dtype=float) * np.einsum("mi,mi->m", nv, _matvec(A, p))
        return _rng.Moments.of(y)

    log_sphere = np.log(sphere_area(n))

    def rhs_block(b, size):
        # polar coordinates: uniform direction u, radius ~ Gamma(n, rho(u)) with rho(u) the
        # radial function of TM, so the density is exp(-||x||) / (|S| Gamma(n) rho(u)^n)
        rng = _rng.generator(seed, _rng.AUX, b)
        u = rng.standard_normal((size, n))
        u /= _norms(u)[:, None]
        rho = 1.0 / body._level(u)
        x = u * rng.gamma(n, rho)[:, None]
        t = body._level(x)
        xh = x / t[:, None]
        nv = body._normal(xh)
        h = np.einsum("mi,mi->m", nv, xh)
        val = np.asarray(phi(xh), dtype=float) * np.einsum("mi,mi->m", nv, _matvec(A, xh))
        return _rng.Moments.of(np.exp(log_sphere + lg + n * np.log(rho)) / h * val)

    lm = _rng.Moments.combine(_rng.map_blocks(lhs_block, _rng.block_sizes(half), workers))
    rm = _rng.Moments.combine(_rng.map_blocks(rhs_block, _rng.block_sizes(budget - half), workers))
    return PolarCheck(float(lm.mean[0]), float(rm.mean[0]),
                      float(np.sqrt(lm.covariance_of_mean()[0, 0])),
                      float(np.sqrt(rm.covariance_of_mean()[0, 0])))
