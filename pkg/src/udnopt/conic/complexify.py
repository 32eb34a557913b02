"""Real embedding of complex second-order cone programs.

Complex decision variables are stacked as interleaved (Re, Im) pairs; the
2-norm of a complex vector equals the 2-norm of its real embedding, so SOC
constraints survive the embedding unchanged.

A complex affine row is a . z + aw . w + const with plain (unconjugated) dot
products, z complex variables and w real variables. For constraints that need
Re(h^H z), pass a = conj(h).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cones import Cone
from .program import StandardConicProgram

ZERO_BLOCK = "zero"
NONNEG_BLOCK = "nonneg"
SOC_BLOCK = "soc"


@dataclass(frozen=True)
class AffineRow:
    """Complex affine expression a.z + aw.w + const (sparse coefficients)."""

    z_idx: np.ndarray  # indices of complex variables
    z_coef: np.ndarray  # complex coefficients
    w_idx: np.ndarray  # indices of real variables
    w_coef: np.ndarray  # real coefficients
    const: complex = 0.0


def row(z_idx=(), z_coef=(), w_idx=(), w_coef=(), const=0.0) -> AffineRow:
    return AffineRow(
        np.asarray(z_idx, dtype=int),
        np.asarray(z_coef, dtype=complex),
        np.asarray(w_idx, dtype=int),
        np.asarray(w_coef, dtype=float),
        complex(const),
    )


@dataclass(frozen=True)
class Block:
    """One cone block of a complex program.

    - zero: every row is a complex equality (= 0), two real rows each.
    - nonneg: Re(row) >= 0, one real row each (imaginary parts must vanish
      structurally; only the real part is used).
    - soc: rows[0] is the scalar bound whose real part tops the cone; the
      remaining rows contribute (Re, Im) pairs.
    """

    kind: str
    rows: tuple[AffineRow, ...]


@dataclass(frozen=True)
class ComplexConicProgram:
    n_complex: int
    n_real: int
    obj_z: np.ndarray  # complex; contributes Re(obj_z . z)
    obj_w: np.ndarray  # real
    blocks: tuple[Block, ...]

    def __post_init__(self):
        if len(self.obj_z) != self.n_complex or len(self.obj_w) != self.n_real:
            raise ValueError("objective length mismatch")


@dataclass(frozen=True)
class EmbeddedProgram:
    program: StandardConicProgram
    n_complex: int
    n_real: int

    def recover(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map a real solution vector back to (complex z, real w)."""
        nc = self.n_complex
        zpart = x[: 2 * nc]
        z = zpart[0::2] + 1j * zpart[1::2]
        return z, x[2 * nc :].copy()


def _re_coeffs(r: AffineRow, nc: int):
    """Real-part row of the embedding: indices and values over x."""
    idx, val = [], []
    for j, a in zip(r.z_idx, r.z_coef):
        if a.real != 0.0:
            idx.append(2 * j)
            val.append(a.real)
        if a.imag != 0.0:
            idx.append(2 * j + 1)
            val.append(-a.imag)
    for j, a in zip(r.w_idx, r.w_coef):
        if a != 0.0:
            idx.append(2 * nc + j)
            val.append(a)
    return idx, val, r.const.real


def _im_coeffs(r: AffineRow, nc: int):
    idx, val = [], []
    for j, a in zip(r.z_idx, r.z_coef):
        if a.real != 0.0:
            idx.append(2 * j + 1)
            val.append(a.real)
        if a.imag != 0.0:
            idx.append(2 * j)
            val.append(a.imag)
    return idx, val, r.const.imag


def embed_complex(cprog: ComplexConicProgram) -> EmbeddedProgram:
    """Standard (Re, Im) stacking into a real standard-form cone program."""
    nc, nw = cprog.n_complex, cprog.n_real
    n = 2 * nc + nw
    c = np.zeros(n)
    # Re(obj_z . z) = sum Re(a) Re(z) - Im(a) Im(z)
    c[0 : 2 * nc : 2] = cprog.obj_z.real
    c[1 : 2 * nc : 2] = -cprog.obj_z.imag
    c[2 * nc :] = cprog.obj_w

    rows_i, cols_i, vals = [], [], []
    b_list: list[float] = []
    cones: list[Cone] = []
    at = 0

    def push(idx, val, const):
        nonlocal at
        for j, a in zip(idx, val):
            rows_i.append(at)
            cols_i.append(j)
            vals.append(-a)  # b - Ax convention: A = -coeffs, b = const
        b_list.append(const)
        at += 1

    for blk in cprog.blocks:
        if blk.kind == ZERO_BLOCK:
            for r in blk.rows:
                push(*_re_coeffs(r, nc))
                push(*_im_coeffs(r, nc))
            cones.append(Cone.zero(2 * len(blk.rows)))
        elif blk.kind == NONNEG_BLOCK:
            for r in blk.rows:
                push(*_re_coeffs(r, nc))
            cones.append(Cone.nonneg(len(blk.rows)))
        elif blk.kind == SOC_BLOCK:
            push(*_re_coeffs(blk.rows[0], nc))
            for r in blk.rows[1:]:
                push(*_re_coeffs(r, nc))
                push(*_im_coeffs(r, nc))
            cones.append(Cone.soc(1 + 2 * (len(blk.rows) - 1)))
        else:
            raise ValueError(f"unknown block kind {blk.kind!r}")

    A = sp.csc_matrix((vals, (rows_i, cols_i)), shape=(at, n))
    prog = StandardConicProgram(c, A, np.asarray(b_list), tuple(cones))
    return EmbeddedProgram(prog, nc, nw)
