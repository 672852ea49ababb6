"""Isotropy and centering certificates at candidate optima.

At a maximal intersection position the moment matrix M = G_int + G_bd is a
multiple C of the identity and the centering vector b = v_int + v_bd
vanishes. The certificate reports how far an estimate is from both, in
scale-free form, with Monte Carlo error bars.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .bodies import AffineImage, Ball, Region, _norms
from .errors import EmptyRegionError, InputError, PreconditionError
from .functions import indicator
from .optimizer import OptimizeConfig, max_inscribed_ellipsoid, maximize
from .position import FixedDet, Position
from .quadrature import moment_bundle
from .variation import check_regularity

EPS_FLOOR = 1e-30
DEFAULT_TOL = 5e-3


def _traceless_projector(n):
    e = np.eye(n).ravel()
    return np.eye(n * n) - np.outer(e, e) / n


@dataclass
class IsotropyCertificate:
    M: np.ndarray
    C: float
    b: np.ndarray
    iso_residual: float
    center_residual: float
    M_stderr: np.ndarray
    b_stderr: np.ndarray
    C_stderr: float
    iso_stderr: float
    center_stderr: float
    tol: float
    passed: bool
    degenerate: bool
    theta_residual: float = 0.0
    offdiag_residual: float = 0.0
    notes: dict = field(default_factory=dict)
    bundle: object = field(default=None, repr=False)

    def to_dict(self):
        return {"M": self.M.tolist(), "C": self.C, "b": self.b.tolist(),
                "iso_residual": self.iso_residual, "center_residual": self.center_residual,
                "M_stderr": self.M_stderr.tolist(), "b_stderr": self.b_stderr.tolist(),
                "C_stderr": self.C_stderr, "iso_stderr": self.iso_stderr,
                "center_stderr": self.center_stderr, "tol": self.tol, "pass": self.passed,
                "degenerate_constant": self.degenerate, "theta_residual": self.theta_residual,
                "offdiag_residual": self.offdiag_residual, "notes": self.notes}


def _assemble(M, cov_M, b, cov_b, scale, tol, eps_floor, notes=None, bundle=None):
    n = M.shape[0]
    C = float(np.trace(M)) / n
    e = np.eye(n).ravel() / n
    C_se = float(np.sqrt(max(e @ cov_M @ e, 0.0)))
    P = _traceless_projector(n)
    denom = max(abs(C) * np.sqrt(n), float(np.linalg.norm(M)), eps_floor)
    R = M - C * np.eye(n)
    iso = float(np.linalg.norm(R)) / denom
    iso_se = float(np.sqrt(max(np.trace(P @ cov_M @ P.T), 0.0))) / denom
    if scale > 0:
        center = float(np.linalg.norm(b)) / scale
        center_se = float(np.sqrt(max(np.trace(cov_b), 0.0))) / scale
    else:
        center, center_se = 0.0, 0.0
    degenerate = bool(abs(C) <= eps_floor or abs(C) <= 3.0 * C_se)
    passed = (not degenerate) and iso <= tol + 3 * iso_se and center <= tol + 3 * center_se
    off = R - np.diag(np.diag(R))
    return IsotropyCertificate(
        M=M, C=C, b=b, iso_residual=iso, center_residual=center,
        M_stderr=np.sqrt(np.clip(np.diag(cov_M), 0, None)).reshape(n, n),
        b_stderr=np.sqrt(np.clip(np.diag(cov_b), 0, None)), C_stderr=C_se,
        iso_stderr=iso_se, center_stderr=center_se, tol=tol, passed=bool(passed),
        degenerate=degenerate, theta_residual=float(np.max(np.abs(np.diag(R)))) / denom,
        offdiag_residual=float(np.max(np.abs(off))) / denom, notes=notes or {}, bundle=bundle)


def certificate_from_bundle(bundle, tol=DEFAULT_TOL, eps_floor=EPS_FLOOR):
    return _assemble(bundle.M, bundle.cov_M(), bundle.b, bundle.cov_b(), bundle.scale, tol, eps_floor,
                     {"boundary_free": bundle.boundary_free, "heavy_tail_suspect": bundle.heavy_tail_suspect},
                     bundle)


def isotropy_certificate(f, g, tol=DEFAULT_TOL, budget=1_000_000, seed=0, workers=1,
                         eps_floor=EPS_FLOOR, check=True):
    """Certificate for (f, g) at the reference position (pull g back first to test another)."""
    if check:
        check_regularity(f, g)
    bundle = moment_bundle(f, g, budget, seed, workers=workers)
    return certificate_from_bundle(bundle, tol, eps_floor)


def geometric_certificate(K, L, tol=DEFAULT_TOL, budget=1_000_000, seed=0, workers=1, check=True):
    """Certificate for the pair of indicators of K and L."""
    return isotropy_certificate(indicator(K), indicator(L), tol, budget, seed, workers, check=check)


def residual_form_i(bundle):
    """Matrix of <e_i e_j^T, M> - delta_ij C over the standard basis."""
    n = bundle.dim
    R = np.empty((n, n))
    C = bundle.C
    for i in range(n):
        for j in range(n):
            E = np.zeros((n, n))
            E[i, j] = 1.0
            R[i, j] = np.sum(E * bundle.G_int) + np.sum(E * bundle.G_bd) - (C if i == j else 0.0)
    return R


def residual_form_ii(bundle):
    """Same residuals from the quadratic-form statement: theta^T M theta - C and theta^T M omega."""
    n = bundle.dim
    R = np.empty((n, n))
    C = bundle.C
    eye = np.eye(n)
    for i in range(n):
        for j in range(n):
            th, om = eye[i], eye[j]
            R[i, j] = th @ bundle.G_int @ om + th @ bundle.G_bd @ om - (C if i == j else 0.0)
    return R


def _weighted_ratio(y, w):
    """Ratio estimate sum(y)/sum(w) per column and its delta-method covariance."""
    m = len(w)
    W = w.sum()
    R = y.sum(axis=0) / W
    resid = (y - np.outer(w, R)) * (m / W)
    cov = np.cov(resid, rowvar=False, ddof=1).reshape(y.shape[1], y.shape[1]) / m
    return R, cov


def sphere_restricted_certificate(mu, K, r, tol=DEFAULT_TOL, budget=200_000, seed=0, workers=1,
                                  eps_floor=EPS_FLOOR):
    """Second moments of the density restricted to K and the sphere of radius r.

    M = int y y^T rho(y) d sigma / (r^2 * mass) over K intersected with rS;
    isotropy means M = (tr M / n) I.
    """
    if not K.symmetric:
        raise PreconditionError("K must be origin-symmetric")
    if not mu.potential.even:
        raise PreconditionError("the density must be even")
    n = K.dim
    s = Ball(float(r), n).surface_sample(budget, seed, workers=workers)
    inside = np.asarray(K.contains(s.points), dtype=bool)
    rho = np.exp(mu._closure_log_value(s.points)) * inside
    w = s.weights * rho
    if not np.any(w > 0):
        raise EmptyRegionError("K does not meet the sphere")
    y = np.column_stack([np.einsum("mi,mj->mij", s.points, s.points).reshape(-1, n * n) / r ** 2,
                         s.points / r])
    R, cov = _weighted_ratio(y * w[:, None], w)
    M = R[:n * n].reshape(n, n)
    b = R[n * n:]
    k = n * n
    notes = {"radius": float(r), "mass": float(w.sum())}
    return _assemble(M, cov[:k, :k], b, cov[k:, k:], 1.0, tol, eps_floor, notes)


@dataclass
class BoundaryMeasureSample:
    """Weighted boundary points: weight = density * surface weight, restricted to a region."""

    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    region: str = ""

    @property
    def total(self):
        return float(np.sum(self.weights))

    def probabilities(self):
        t = self.total
        return self.weights / t if t > 0 else self.weights


@dataclass
class JohnLimitStep:
    r: float
    sample: BoundaryMeasureSample = field(repr=False)
    iso_residual: float
    iso_stderr: float
    shape_residual: float
    support_distance: float
    moment: np.ndarray
    position: Position
    converged: bool

    def to_dict(self):
        return {"r": self.r, "iso_residual": self.iso_residual, "iso_stderr": self.iso_stderr,
                "shape_residual": self.shape_residual, "support_distance": self.support_distance,
                "moment": self.moment.tolist(), "position": self.position.to_dict(),
                "converged": self.converged, "mass": self.sample.total,
                "points_in_region": int(np.count_nonzero(self.sample.weights))}


def boundary_measure(mu, K, T, z, count, seed, workers=1):
    """Density-weighted surface measure of the part of the boundary of K inside T B + z."""
    n = K.dim
    s = K.surface_sample(count, seed, workers=workers)
    ell = AffineImage(Ball(1.0, n), T, z)
    inside = np.asarray(ell.contains(s.points), dtype=bool)
    w = s.weights * np.exp(mu._closure_log_value(s.points)) * inside
    return BoundaryMeasureSample(s.points, s.normals, w, "boundary of K inside T_r B")


def _moment_of_measure(sample):
    w = sample.weights
    keep = w > 0
    if not np.any(keep):
        raise EmptyRegionError("boundary region carries no mass")
    x, w = sample.points[keep], w[keep]
    n = x.shape[1]
    y = np.einsum("mi,mj->mij", x, x).reshape(-1, n * n) * w[:, None]
    R, cov = _weighted_ratio(y, w)
    return R.reshape(n, n), cov, x


def john_limit_measure(mu, K, radii, tol=DEFAULT_TOL, budget=400_000, seed=0, cfg=None,
                       john_tol=2e-2, workers=1):
    """Second-moment matrices of the boundary measures nu_r for radii decreasing to 1.

    For each r the optimal ellipsoid T_r B + z_r of determinant r is found,
    the density-weighted surface measure of the part of the boundary of K it
    covers is normalized to a probability, and its second-moment matrix is
    compared with I/n.
    """
    radii = [float(r) for r in radii]
    if any(r <= 1 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
        raise PreconditionError("radii must decrease strictly towards 1 and exceed 1")
    cfg = cfg or OptimizeConfig(restarts=1, seed=seed, workers=workers)
    n = K.dim
    A, _ = max_inscribed_ellipsoid(mu, K, cfg)
    if np.linalg.norm(A - np.eye(n)) > john_tol:
        raise PreconditionError("K is not in John position for this measure (the unit ball is not the "
                                f"optimal inscribed ellipsoid; found {A.tolist()})")
    f = mu.restricted(K)
    g = indicator(Ball(1.0, n))
    target = np.eye(n) / n
    P = _traceless_projector(n)
    out = []
    for r in radii:
        mode = FixedDet(r)
        res = maximize(f, g, mode, cfg, Position.identity(n, mode), check=False)
        T, z = res.position.T, res.position.z
        sample = boundary_measure(mu, K, T, z, budget, seed, workers)
        M, cov, x = _moment_of_measure(sample)
        iso = float(np.linalg.norm(M - target) / np.linalg.norm(target))
        iso_se = float(np.sqrt(max(np.trace(cov), 0.0)) / np.linalg.norm(target))
        C = np.trace(M) / n
        shape = float(np.linalg.norm(M - C * np.eye(n)) / max(abs(C) * np.sqrt(n), 1e-300))
        dist = float(np.max(np.abs(_norms(x) - 1.0)))
        out.append(JohnLimitStep(r, sample, iso, iso_se, shape, dist, M, res.position, res.converged))
    return out
