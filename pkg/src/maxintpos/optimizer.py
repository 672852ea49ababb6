"""Gradient ascent over positions (T, z) and brute-force oracles.

One iteration: estimate the gradient (G, v) of the objective at the current
pullback of g, normalize by the objective value, and try
    T <- S T,  z <- S z + eta * v / P,   S = (I + eta G / P) / det(...)^{1/n}
with a backtracking line search on the common-random-numbers objective.

For indicator pairs the common-random-numbers objective is piecewise constant,
so value differences stop resolving gains well before the gradient does. When
the line search fails but the gradient still stands above its noise, a secant
step on fresh directional derivatives is taken instead; it may lower the
sampled objective by at most noise_k standard errors. Convergence is declared
when the gradient is below grad_tol * P or when neither its matrix block nor
its shift block is resolved above noise_k standard errors.
"""
from dataclasses import dataclass, field, replace
import itertools

import numpy as np

from . import _rng
from .bodies import AllSpace, Ball, Ellipsoid, HPolytope, _matvec
from .errors import DecayFitError, InputError, PreconditionError, UnsupportedError
from .functions import indicator
from .position import Free, Position, as_mode
from .quadrature import barycenter, default_domain, fit_plan, integrate_product, moment_bundle, paired_difference
from .variation import Decay, check_regularity, gradient, objective_upper_bound


@dataclass(frozen=True)
class OptimizeConfig:
    budget_per_eval: int = 200_000
    max_iters: int = 100
    step_init: float = 0.5
    armijo_c: float = 1e-4
    grad_tol: float = 1e-3
    restarts: int = 8
    seed: int = 0
    workers: int = 1
    grad_budget: int = None
    min_step: float = 1e-6
    max_step: float = 8.0
    noise_k: float = 3.0

    def __post_init__(self):
        for name in ("budget_per_eval", "max_iters", "step_init", "grad_tol", "min_step", "max_step"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if not 0 < self.armijo_c < 1:
            raise InputError("armijo_c must lie in (0, 1)")
        if self.restarts < 1:
            raise InputError("restarts must be at least 1")

    @property
    def gradient_budget(self):
        return self.grad_budget or self.budget_per_eval


@dataclass
class OptimizeResult:
    position: Position
    value: object  # IntegralEstimate
    grad_norm: float
    converged: bool
    trajectory: list = field(default_factory=list)
    restarts_used: int = 0
    grad_stderr: float = float("nan")
    steps: list = field(default_factory=list)
    secant_steps: list = field(default_factory=list)

    def to_dict(self):
        return {"position": self.position.to_dict(), "value": self.value.to_dict(),
                "grad_norm": self.grad_norm, "grad_stderr": self.grad_stderr,
                "converged": self.converged, "restarts_used": self.restarts_used,
                "line_search_steps": len(self.steps), "secant_steps": len(self.secant_steps),
                "trajectory": [list(t) for t in self.trajectory]}


def _retract(pos, eta, G, v, mode):
    n = pos.dim
    S = np.eye(n) + eta * G
    det = np.linalg.det(S)
    if det <= 0:
        return None
    if mode.kind != "free":
        S = S / det ** (1.0 / n)
    try:
        return Position.normalized(S @ pos.T, S @ pos.z + eta * v, mode)
    except InputError:
        return None


def _random_rotation(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def _derive(seed, *ints):
    ss = np.random.SeedSequence([int(seed) & ((1 << 63) - 1)] + [int(i) for i in ints])
    return int(ss.generate_state(1, np.uint64)[0] >> 1)


def _resolved(gr, k):
    """True if the matrix or the shift block of the gradient stands above k standard errors."""
    blocks = ((gr.G, gr.G_stderr), (gr.v, gr.v_stderr))
    return any(np.linalg.norm(x) > k * np.sqrt(np.sum(se ** 2)) for x, se in blocks)


class _Run:
    """State shared by the restarts of one ``maximize`` call."""

    def __init__(self, f, g, mode, cfg, domain):
        self.f, self.g, self.mode, self.cfg = f, g, mode, cfg
        self.domain = domain
        try:
            self.decay = Decay.of(f, g)
        except (DecayFitError, InputError):
            self.decay = None
        self.best = -np.inf

    def value(self, pos):
        c = self.cfg
        return integrate_product(self.f, self.g, pos, c.budget_per_eval, c.seed, self.domain, c.workers)

    def _domain_for(self, gp):
        if self.domain is not None:
            return self.domain
        return default_domain(self.f, gp)

    def ascend(self, start, restart):
        f, g, cfg, mode = self.f, self.g, self.cfg, self.mode
        pos = start
        F = self.value(pos)
        if F.empty:
            pos = self.recenter(pos)
            F = self.value(pos)
            if F.empty:
                return OptimizeResult(pos, F, float("nan"), False, [(0, 0.0, float("nan"))], restart)
        self.best = max(self.best, F.value)
        traj, steps, secant = [], [], []
        eta = cfg.step_init
        gn = gse = float("nan")
        converged = False
        for it in range(cfg.max_iters + 1):
            gp = g.pullback(pos)
            gr = gradient(f, gp, cfg.gradient_budget, _derive(cfg.seed, restart, it), mode,
                          cfg.workers, check=False)
            P = max(F.value, 1e-300)
            gn, gse = gr.norm, gr.norm_stderr
            resolved = _resolved(gr, cfg.noise_k)
            traj.append((it, F.value, gn))
            # stop early only on a gradient that is small and resolved above its noise
            if gn <= cfg.grad_tol * P and cfg.noise_k * gse <= cfg.grad_tol * P:
                converged = True
                break
            if it == cfg.max_iters:
                break
            Gh, vh = gr.G / P, gr.v / P
            slope = gn * gn / P
            accepted = None
            t = min(eta, cfg.max_step)
            while t >= cfg.min_step:
                cand = _retract(pos, t, Gh, vh, mode)
                if cand is None:
                    t *= 0.5
                    continue
                if self.decay is not None and objective_upper_bound(self.decay, cand.T, cand.z) < self.best:
                    t *= 0.5
                    continue
                pd = paired_difference(f, g, pos, cand, cfg.budget_per_eval, cfg.seed,
                                       self._domain_for(gp), cfg.workers)
                gain = pd.difference
                if gain > 0 and (gain >= cfg.armijo_c * t * slope or abs(gain) <= cfg.noise_k * pd.difference_stderr):
                    accepted = cand
                    if gain < 0.5 * t * slope:
                        # past the maximum along the line: try the maximizer of the quadratic fit
                        tq = 0.5 * t * t * slope / (t * slope - gain)
                        cq = _retract(pos, tq, Gh, vh, mode) if 0.1 * t < tq < 0.9 * t else None
                        if cq is not None:
                            pq = paired_difference(f, g, pos, cq, cfg.budget_per_eval, cfg.seed,
                                                   self._domain_for(gp), cfg.workers)
                            if pq.difference > gain:
                                accepted, t = cq, tq
                    break
                t *= 0.5
            if accepted is None and resolved:
                # value differences are below the sampling noise but the gradient is still resolved
                accepted, t = self.secant_step(pos, gp, Gh, vh, gn * gn / P, min(eta, cfg.max_step), restart, it)
                if accepted is not None:
                    newF = self.value(accepted)
                    secant.append((it, t, F.value, newF.value))
                    pos, F = accepted, newF
                    self.best = max(self.best, F.value)
                    continue
            if accepted is None:
                break
            newF = self.value(accepted)
            steps.append((it, t, F.value, newF.value))
            pos, F = accepted, newF
            self.best = max(self.best, F.value)
            eta = min(2.0 * t, cfg.max_step)
        if not converged:
            converged = bool(gn <= cfg.grad_tol * max(F.value, 1e-300) or not resolved)
        return OptimizeResult(pos, F, gn, converged, traj, restart, gse, steps, secant)

    def directional(self, pos, cand, t, Gh, vh, seed):
        """Derivative of the objective along the retraction path, evaluated at ``cand``."""
        h = 1e-6 * max(t, 1e-3)
        lo, hi = _retract(pos, t - h, Gh, vh, self.mode), _retract(pos, t + h, Gh, vh, self.mode)
        if lo is None or hi is None:
            return None
        A = (hi.T - lo.T) / (2 * h) @ np.linalg.inv(cand.T)
        y = (hi.z - lo.z) / (2 * h) - A @ cand.z
        cfg = self.cfg
        gr = gradient(self.f, self.g.pullback(cand), cfg.gradient_budget, seed, self.mode, cfg.workers,
                      check=False)
        return float(np.sum(gr.G * A) + gr.v @ y)

    def secant_step(self, pos, gp, Gh, vh, d0, t, restart, it):
        """Step along the ascent direction chosen from fresh directional derivatives.

        Accept t if the derivative there is still positive, otherwise move to the
        secant root of the derivative. The step must not lower the common random
        numbers objective by more than noise_k standard errors.
        """
        cfg = self.cfg
        for k in range(4):
            cand = _retract(pos, t, Gh, vh, self.mode)
            d = None if cand is None else self.directional(pos, cand, t, Gh, vh, _derive(cfg.seed, restart, it, 7, k))
            if d is None:
                t *= 0.5
                continue
            if d < 0:
                t = t * d0 / (d0 - d)
                cand = _retract(pos, t, Gh, vh, self.mode)
                if cand is None:
                    return None, t
            if self.decay is not None and objective_upper_bound(self.decay, cand.T, cand.z) < self.best:
                t *= 0.5
                continue
            pd = paired_difference(self.f, self.g, pos, cand, cfg.budget_per_eval, cfg.seed,
                                   self._domain_for(gp), cfg.workers)
            if pd.difference >= -cfg.noise_k * pd.difference_stderr:
                return cand, t
            t *= 0.5
        return None, t

    def recenter(self, pos):
        bf = barycenter(self.f, 20_000, self.cfg.seed)
        bg = barycenter(self.g, 20_000, self.cfg.seed)
        return Position(pos.T, bf - pos.T @ bg, pos.mode)


def maximize(f, g, mode="unit", cfg=None, start=None, domain=None, check=True):
    """Best position found for g against f under the determinant constraint ``mode``."""
    cfg = cfg or OptimizeConfig()
    mode = as_mode(mode)
    n = f.dim
    if g.dim != n:
        raise InputError("f and g have different dimensions")
    if check:
        check_regularity(f, g)
    if start is None:
        start = Position.identity(n, mode)
    elif start.mode != mode:
        start = start.with_mode(mode)
    run = _Run(f, g, mode, cfg, domain)
    symmetric = f.even and g.even
    bf = bg = None
    results = []
    initial = run.value(start)
    for k in range(cfg.restarts):
        if k == 0:
            s = start
        else:
            Q = _random_rotation(_rng.generator(cfg.seed, _rng.RESTART, k), n)
            T = Q @ start.T
            if symmetric:
                z = np.zeros(n)
            else:
                if bf is None:
                    bf = barycenter(f, 50_000, cfg.seed)
                    bg = barycenter(g, 50_000, cfg.seed)
                z = bf - T @ bg
            s = Position.normalized(T, z, mode)
        results.append(run.ascend(s, k))
    best = max(enumerate(results), key=lambda kr: (kr[1].value.value, -kr[0]))[1]
    best.restarts_used = cfg.restarts
    if not any(r.converged for r in results) and best.value.value <= initial.value:
        return OptimizeResult(start, initial, best.grad_norm, False, best.trajectory, cfg.restarts,
                              best.grad_stderr)
    return best


# -- brute force --------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    angles: tuple = (0.0,)
    log_aniso: tuple = (0.0,)
    shears: tuple = (0.0,)
    offsets: tuple = ((0.0,),)   # one tuple of values per coordinate
    budget: int = 50_000
    seed: int = 0

    def size(self):
        return (len(self.angles) * len(self.log_aniso) * len(self.shears)
                * int(np.prod([len(o) for o in self.offsets])))


def grid_matrix(angle, log_aniso, shear, n=2):
    if n == 1:
        return np.eye(1)
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s], [s, c]])
    D = np.diag([np.exp(log_aniso), np.exp(-log_aniso)])
    return R @ D @ np.array([[1.0, shear], [0.0, 1.0]])


def brute_force(f, g, mode, grid):
    """Exhaustive search over a product grid of positions (n <= 2); first best wins ties."""
    n = f.dim
    if n > 2:
        raise UnsupportedError("brute force search is limited to n <= 2")
    if grid.size() > 10 ** 7:
        raise InputError("grid has more than 1e7 points")
    mode = as_mode(mode)
    offsets = list(grid.offsets)
    if len(offsets) == 1 and n == 2:
        offsets = offsets * 2
    if len(offsets) != n:
        raise InputError("one offset list per coordinate is needed")
    best = None
    dom = None
    for ang, la, sh in itertools.product(grid.angles, grid.log_aniso, grid.shears):
        T = grid_matrix(ang, la, sh, n)
        for z in itertools.product(*offsets):
            pos = Position.normalized(T, np.array(z, dtype=float), mode)
            if dom is None:
                dom = default_domain(f, g.pullback(pos))
                if dom == "gauss":
                    dom = None
            val = integrate_product(f, g, pos, grid.budget, grid.seed, dom)
            if best is None or val.value > best.value.value:
                best = OptimizeResult(pos, val, float("nan"), True, [], 0)
    return best


# -- measure mode -------------------------------------------------------------

@dataclass
class ScanPoint:
    r: float
    value: object
    position: Position
    result: OptimizeResult
    flagged: bool = False
    reason: str = ""

    def to_dict(self):
        return {"r": self.r, "value": self.value.to_dict(), "position": self.position.to_dict(),
                "converged": self.result.converged, "flagged": self.flagged, "reason": self.reason}


def _check_symmetric_measure(mu, K):
    if not K.symmetric:
        raise PreconditionError("K must be origin-symmetric")
    if not mu.potential.even:
        raise PreconditionError("the measure density must be even")


def sandwich_violations(points, k=3.0):
    """Pairs (i, i+1) breaking m(r) <= m(s) <= (s/r) m(r) beyond k standard errors."""
    bad = []
    for i in range(len(points) - 1):
        a, b = points[i], points[i + 1]
        se = k * float(np.hypot(a.value.stderr, b.value.stderr))
        if a.value.value > b.value.value + se:
            bad.append((i, "decrease"))
        elif b.value.value > (b.r / a.r) * a.value.value + se:
            bad.append((i, "growth above s/r"))
    return bad


def scan_radius(mu, K, L, radii, cfg=None):
    """Optimal measure mu(K intersected with T L + z) over |det T| = r for each radius."""
    cfg = cfg or OptimizeConfig()
    radii = [float(r) for r in radii]
    if any(r < 1 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise PreconditionError("radii must be ascending and at least 1")
    _check_symmetric_measure(mu, K)
    n = K.dim
    f = mu.restricted(K) if isinstance(mu.support, AllSpace) else mu
    g = indicator(L)
    out = []
    prev = None
    for r in radii:
        mode = as_mode(("fixed", r))
        if prev is None:
            start = Position.identity(n, mode)
        else:
            start = Position.normalized(prev.position.T * (r / prev.r) ** (1.0 / n), prev.position.z, mode)
        # coincident boundaries (e.g. K = L at r = 1) are allowed here: the
        # line search only accepts steps that raise the objective itself
        res = maximize(f, g, mode, cfg, start, check=False)
        pt = ScanPoint(r, res.value, res.position, res)
        out.append(pt)
        prev = pt
    for i, why in sandwich_violations(out):
        out[i + 1].flagged = True
        out[i + 1].reason = why
    return out


def _excess(A, K):
    """max over constraints of support(A B)/offset; <= 1 means A B lies in K."""
    if isinstance(K, Ball):
        return np.linalg.norm(A, 2) / K.radius
    return float(np.max(np.linalg.norm(A @ K.rows.T, axis=0) / K.offsets))


def _sym_sqrt(M):
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    return (V * np.sqrt(np.clip(w, 0, None))) @ V.T


def _project_inside(A, K):
    """Shrink A B along violated constraint normals until it fits in K."""
    if isinstance(K, Ball):
        return A * min(1.0, 1.0 / _excess(A, K))
    for _ in range(200):
        h = np.linalg.norm(A @ K.rows.T, axis=0) / K.offsets
        i = int(np.argmax(h))
        if h[i] <= 1.0 + 1e-13:
            break
        u = K.rows[i] / np.linalg.norm(K.rows[i])
        S = np.eye(len(u)) - (1.0 - 1.0 / h[i]) * np.outer(u, u)
        A = _sym_sqrt(S @ A @ A.T @ S)
    ex = _excess(A, K)
    if ex > 1.0:
        A = A / ex
    return A


def max_inscribed_ellipsoid(mu, K, cfg=None, tol=1e-6):
    """SPD A maximizing mu(A B) subject to A B inside K, with the value mu(A B).

    The gradient in A is the boundary flux of the density through the
    boundary of A B, symmetrized; infeasible trial points are pulled back by
    shrinking along the violated constraint normals.
    """
    cfg = cfg or OptimizeConfig()
    if not isinstance(K, (HPolytope, Ball)):
        raise InputError("K must be an H-polytope or a ball")
    _check_symmetric_measure(mu, K)
    n = K.dim
    dens = mu if isinstance(mu.support, AllSpace) else mu
    ball = indicator(Ball(1.0, n))
    rho = K.radius if isinstance(K, Ball) else K.inradius()
    A = rho * np.eye(n)

    def value(A):
        return integrate_product(dens, ball, Position(A, None, Free), cfg.budget_per_eval, cfg.seed, "g",
                                 cfg.workers)

    V = value(A)
    eta = cfg.step_init
    for it in range(cfg.max_iters):
        mb = moment_bundle(dens, indicator(Ellipsoid(A)), cfg.gradient_budget, _derive(cfg.seed, it),
                           workers=cfg.workers)
        H = mb.G_bd @ np.linalg.inv(A)
        H = 0.5 * (H + H.T) / max(V.value, 1e-300)
        if np.linalg.norm(H) == 0:
            break
        improved = False
        t = eta
        while t >= cfg.min_step:
            cand = _project_inside(A + t * H, K)
            if np.min(np.linalg.eigvalsh(cand)) <= 0:
                t *= 0.5
                continue
            Vc = value(cand)
            if Vc.value > V.value:
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        rel = (Vc.value - V.value) / V.value
        A, V = cand, Vc
        eta = min(2 * t, cfg.max_step)
        if rel < tol and np.linalg.norm(t * H) < tol:
            break
    return A, V
