"""Standard-form cone programs and their plain-text serialization.

A program is  minimize c'x  subject to  b - Ax in K,  where K is an ordered
product of cones whose dimensions sum to the row count of A.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cones import NONNEG, SOC, ZERO, Cone

_KIND_CODE = {ZERO: "Z", NONNEG: "N", SOC: "Q"}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


@dataclass(frozen=True)
class StandardConicProgram:
    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    cones: tuple[Cone, ...]

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        b = np.asarray(self.b, dtype=float).ravel()
        A = sp.csc_matrix(self.A, dtype=float)
        A.sort_indices()
        m, n = A.shape
        if c.size != n:
            raise ValueError(f"c has length {c.size}, A has {n} columns")
        if b.size != m:
            raise ValueError(f"b has length {b.size}, A has {m} rows")
        total = sum(k.dim for k in self.cones)
        if total != m:
            raise ValueError(f"cone dimensions sum to {total}, A has {m} rows")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "cones", tuple(self.cones))

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def pattern(self) -> tuple[np.ndarray, np.ndarray]:
        """Sparsity pattern of A as (indices, indptr) of its CSC storage."""
        return self.A.indices.copy(), self.A.indptr.copy()

    def with_values(self, a_data: np.ndarray, b: np.ndarray, c: np.ndarray) -> "StandardConicProgram":
        """New program with identical pattern and cones, different values."""
        if a_data.size != self.A.data.size:
            raise ValueError("value array does not match sparsity pattern")
        A = sp.csc_matrix(
            (np.asarray(a_data, dtype=float), self.A.indices.copy(), self.A.indptr.copy()),
            shape=self.A.shape,
        )
        return StandardConicProgram(np.asarray(c, float), A, np.asarray(b, float), self.cones)


def dump_program(prog: StandardConicProgram) -> str:
    """Serialize in the plain text format: `n m k`, c, A triplets, b, cones."""
    lines = [f"{prog.n} {prog.m} {len(prog.cones)}"]
    lines += [f"{v:.17g}" for v in prog.c]
    coo = prog.A.tocoo()
    lines += [f"{i} {j} {v:.17g}" for i, j, v in zip(coo.row, coo.col, coo.data)]
    lines += [f"{v:.17g}" for v in prog.b]
    lines += [f"{_KIND_CODE[k.kind]} {k.dim}" for k in prog.cones]
    return "\n".join(lines) + "\n"


def load_program(text: str) -> StandardConicProgram:
    tokens = text.split()
    if len(tokens) < 3:
        raise ValueError("truncated program text")
    n, m, k = int(tokens[0]), int(tokens[1]), int(tokens[2])
    rest = tokens[3:]
    # token budget determines the triplet count
    nnz3 = len(rest) - n - m - 2 * k
    if nnz3 < 0 or nnz3 % 3 != 0:
        raise ValueError("token count inconsistent with header")
    nnz = nnz3 // 3
    pos = 0
    c = np.array([float(t) for t in rest[pos : pos + n]])
    pos += n
    rows = np.empty(nnz, dtype=int)
    cols = np.empty(nnz, dtype=int)
    vals = np.empty(nnz)
    for i in range(nnz):
        rows[i] = int(rest[pos])
        cols[i] = int(rest[pos + 1])
        vals[i] = float(rest[pos + 2])
        pos += 3
    b = np.array([float(t) for t in rest[pos : pos + m]])
    pos += m
    cones = []
    for _ in range(k):
        kind, dim = rest[pos], int(rest[pos + 1])
        pos += 2
        if kind not in _CODE_KIND:
            raise ValueError(f"unknown cone code {kind!r}")
        cones.append(Cone(_CODE_KIND[kind], dim))
    A = sp.csc_matrix((vals, (rows, cols)), shape=(m, n))
    return StandardConicProgram(c, A, b, tuple(cones))
