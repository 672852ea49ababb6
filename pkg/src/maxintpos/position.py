"""Positions (T, z) with a determinant constraint."""
from dataclasses import dataclass

import numpy as np

from .errors import InputError

UNIT_DET_TOL = 1e-10
FIXED_DET_TOL = 1e-10


@dataclass(frozen=True)
class DetMode:
    """Determinant constraint: ``unit`` (det T = 1), ``fixed`` (|det T| = r) or ``free``."""

    kind: str = "unit"
    r: float = 1.0

    def __post_init__(self):
        if self.kind not in ("unit", "fixed", "free"):
            raise InputError(f"unknown determinant mode '{self.kind}'")
        if not self.r > 0:
            raise InputError("determinant target must be positive")
        if self.kind == "unit" and self.r != 1.0:
            raise InputError("unit determinant mode has target 1")

    @property
    def target(self):
        return None if self.kind == "free" else float(self.r)

    def to_dict(self):
        return {"kind": self.kind, "r": self.r} if self.kind == "fixed" else {"kind": self.kind}


UnitDet = DetMode("unit")
Free = DetMode("free")


def FixedDet(r):
    return DetMode("fixed", float(r))


def as_mode(mode):
    if isinstance(mode, DetMode):
        return mode
    if mode in ("unit", None):
        return UnitDet
    if mode == "free":
        return Free
    if isinstance(mode, tuple) and mode[0] == "fixed":
        return FixedDet(mode[1])
    raise InputError(f"cannot interpret determinant mode {mode!r}")


@dataclass(frozen=True, eq=False)
class Position:
    """Affine position x -> T x + z; g is placed as g(T^{-1}(x - z))."""

    T: np.ndarray
    z: np.ndarray = None
    mode: DetMode = UnitDet

    def __post_init__(self):
        T = np.array(self.T, dtype=float)
        if T.ndim == 0:
            T = T.reshape(1, 1)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise InputError("T must be a square matrix")
        n = T.shape[0]
        z = np.zeros(n) if self.z is None else np.array(self.z, dtype=float).ravel()
        if z.shape != (n,):
            raise InputError("z has the wrong dimension")
        if not (np.all(np.isfinite(T)) and np.all(np.isfinite(z))):
            raise InputError("position has non-finite entries")
        mode = as_mode(self.mode)
        det = np.linalg.det(T)
        if det == 0 or np.linalg.cond(T) > 1e13:
            raise InputError("T is singular")
        if mode.kind == "unit" and abs(det - 1.0) > UNIT_DET_TOL:
            raise InputError(f"det T = {det!r} violates the unit determinant constraint")
        if mode.kind == "fixed" and abs(abs(det) - mode.r) > FIXED_DET_TOL * mode.r:
            raise InputError(f"|det T| = {abs(det)!r} violates the fixed determinant {mode.r}")
        T.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "mode", mode)

    @property
    def dim(self):
        return self.T.shape[0]

    @property
    def det(self):
        return float(np.linalg.det(self.T))

    @classmethod
    def identity(cls, dim, mode=UnitDet):
        mode = as_mode(mode)
        scale = 1.0 if mode.target is None else mode.target ** (1.0 / dim)
        return cls(scale * np.eye(dim), np.zeros(dim), mode)

    @classmethod
    def normalized(cls, T, z=None, mode=UnitDet):
        """Rescale T to satisfy the determinant constraint of ``mode``."""
        mode = as_mode(mode)
        T = np.array(T, dtype=float)
        if T.ndim == 0:
            T = T.reshape(1, 1)
        if mode.target is not None:
            det = np.linalg.det(T)
            if mode.kind == "unit" and det <= 0:
                raise InputError("cannot normalize a matrix with non-positive determinant to det 1")
            T = T * (mode.target / abs(det)) ** (1.0 / T.shape[0])
        return cls(T, z, mode)

    def with_mode(self, mode):
        return Position.normalized(self.T, self.z, mode)

    def to_dict(self):
        return {"T": self.T.tolist(), "z": self.z.tolist(), "mode": self.mode.to_dict()}


def traceless(D):
    D = np.asarray(D, dtype=float)
    return D - np.trace(D) / D.shape[0] * np.eye(D.shape[0])


def sl_path(D, eps):
    """Point of the normalized path (I + eps D) / det(I + eps D)^{1/n}."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    S = np.eye(n) + eps * D
    det = np.linalg.det(S)
    if det <= 0:
        raise InputError("step leaves the identity component (det <= 0)")
    return S / det ** (1.0 / n)
