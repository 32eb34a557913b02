"""Cone types and Euclidean projections onto them.

Supported cones: zero cone {0}^d, nonnegative orthant, and the second-order
(Lorentz) cone {(t, z) : t >= ||z||_2}.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ZERO = "zero"
NONNEG = "nonneg"
SOC = "soc"

_KINDS = (ZERO, NONNEG, SOC)


@dataclass(frozen=True)
class Cone:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("cone dimension must be >= 1")
        if self.kind == SOC and self.dim < 2:
            raise ValueError("second-order cone needs dimension >= 2")

    @staticmethod
    def zero(dim: int) -> "Cone":
        return Cone(ZERO, dim)

    @staticmethod
    def nonneg(dim: int) -> "Cone":
        return Cone(NONNEG, dim)

    @staticmethod
    def soc(dim: int) -> "Cone":
        return Cone(SOC, dim)


def project_cone(v: np.ndarray, cone: Cone) -> np.ndarray:
    """Euclidean projection of v onto the cone."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size != cone.dim:
        raise ValueError(f"expected vector of length {cone.dim}, got shape {v.shape}")
    if cone.kind == ZERO:
        return np.zeros_like(v)
    if cone.kind == NONNEG:
        return np.maximum(v, 0.0)
    # second-order cone, closed form
    t, z = v[0], v[1:]
    nz = np.linalg.norm(z)
    if nz <= t:
        return v.copy()
    if nz <= -t:
        # includes the kink t = -||z||: the origin is the unique projection
        return np.zeros_like(v)
    a = 0.5 * (t + nz)
    out = np.empty_like(v)
    out[0] = a
    out[1:] = (a / nz) * z
    return out


def project_dual_cone(v: np.ndarray, cone: Cone) -> np.ndarray:
    """Projection onto the dual cone (zero cone's dual is all of R^d)."""
    if cone.kind == ZERO:
        v = np.asarray(v, dtype=float)
        if v.size != cone.dim:
            raise ValueError(f"expected vector of length {cone.dim}, got {v.size}")
        return v.copy()
    return project_cone(v, cone)  # nonneg orthant and SOC are self-dual


def _blockwise(v: np.ndarray, cones, proj) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    total = sum(c.dim for c in cones)
    if v.size != total:
        raise ValueError(f"vector length {v.size} != total cone dimension {total}")
    out = np.empty_like(v)
    at = 0
    for c in cones:
        out[at : at + c.dim] = proj(v[at : at + c.dim], c)
        at += c.dim
    return out


def project_cone_product(v: np.ndarray, cones) -> np.ndarray:
    """Blockwise projection onto a product of cones (fixed block order)."""
    return _blockwise(v, cones, project_cone)


def project_dual_cone_product(v: np.ndarray, cones) -> np.ndarray:
    return _blockwise(v, cones, project_dual_cone)
