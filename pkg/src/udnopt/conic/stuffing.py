"""Matrix stuffing: update numeric values of a pre-analyzed cone program.

A template fixes the sparsity pattern of A and the cone layout once; stuffing
writes new parameter values into designated slots without touching the
pattern, so a solver bound to the pattern can reuse its structural setup.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .cones import Cone
from .program import StandardConicProgram

#: slot targets
A_DATA = "A"  # index into the CSC data array of A
B_VEC = "b"
C_VEC = "c"


@dataclass(frozen=True)
class Slot:
    """Positions a named parameter occupies inside (A.data, b, c)."""

    entries: tuple[tuple[str, int], ...]

    def __post_init__(self):
        for target, _ in self.entries:
            if target not in (A_DATA, B_VEC, C_VEC):
                raise ValueError(f"unknown slot target {target!r}")


@dataclass(frozen=True)
class StuffingTemplate:
    skeleton: StandardConicProgram
    slots: dict[str, Slot]

    def __post_init__(self):
        nnz = self.skeleton.A.data.size
        for name, slot in self.slots.items():
            for target, idx in slot.entries:
                bound = {A_DATA: nnz, B_VEC: self.skeleton.m, C_VEC: self.skeleton.n}[target]
                if not 0 <= idx < bound:
                    raise ValueError(f"slot {name!r} index {idx} outside {target} of size {bound}")


def stuff(template: StuffingTemplate, params: dict[str, np.ndarray | float]) -> StandardConicProgram:
    """Write parameter values into the template's slots.

    ``params`` must cover every slot exactly; each value is a scalar or an
    array matching the slot's position count. Stuffing never adds or removes
    nonzeros, and identical params produce bitwise-identical programs.
    """
    missing = set(template.slots) - set(params)
    extra = set(params) - set(template.slots)
    if missing:
        raise ValueError(f"missing parameters: {sorted(missing)}")
    if extra:
        raise ValueError(f"unknown parameters: {sorted(extra)}")

    skel = template.skeleton
    a_data = skel.A.data.copy()
    b = skel.b.copy()
    c = skel.c.copy()
    for name, slot in template.slots.items():
        vals = np.atleast_1d(np.asarray(params[name], dtype=float)).ravel()
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"parameter {name!r} contains non-finite values")
        if vals.size == 1:
            vals = np.full(len(slot.entries), vals[0])
        if vals.size != len(slot.entries):
            raise ValueError(
                f"parameter {name!r} has {vals.size} values for {len(slot.entries)} slot positions"
            )
        for (target, idx), v in zip(slot.entries, vals):
            if target == A_DATA:
                a_data[idx] = v
            elif target == B_VEC:
                b[idx] = v
            else:
                c[idx] = v
    return skel.with_values(a_data, b, c)


def a_data_index(prog: StandardConicProgram, row: int, col: int) -> int:
    """Index into A.data holding entry (row, col); the entry must exist."""
    A = prog.A
    start, end = A.indptr[col], A.indptr[col + 1]
    for k in range(start, end):
        if A.indices[k] == row:
            return k
    raise ValueError(f"({row}, {col}) is not in the sparsity pattern")


def single_user_power_min_template() -> StuffingTemplate:
    """Template for the scalar single-link power minimization model.

    Variables x = (t, v): minimize t subject to |v| <= t and
    g*v >= sigma where g = sqrt(1 + 1/gamma) * h / sqrt(gamma)... the QoS
    slot stores the combined gain sqrt(1/gamma) * h directly, so the
    constraint reads  (h/sqrt(gamma)) * v - sigma >= 0  and the optimum is
    t* = |v*| = sigma * sqrt(gamma) / h, i.e. power gamma*sigma^2/h^2 = t*^2
    and objective value t* itself for unit parameters.

    Slots: ``qos_gain`` (value h/sqrt(gamma) inside A) and ``noise``
    (value sigma inside b).
    """
    # rows: SOC(2) for (t, v); NonNeg(1) for qos_gain*v - sigma >= 0
    # b - Ax in K with x = (t, v)
    A = sp.csc_matrix(
        (np.array([-1.0, -1.0, -1.0]), (np.array([0, 1, 2]), np.array([0, 1, 1]))),
        shape=(3, 2),
    )
    b = np.array([0.0, 0.0, -1.0])
    c = np.array([1.0, 0.0])
    skel = StandardConicProgram(c, A, b, (Cone.soc(2), Cone.nonneg(1)))
    slots = {
        "qos_gain": Slot(((A_DATA, a_data_index(skel, 2, 1)),)),
        "noise": Slot(((B_VEC, 2),)),
    }
    return StuffingTemplate(skel, slots)


def stuff_single_user(template: StuffingTemplate, gamma: float, sigma2: float, h: float) -> StandardConicProgram:
    """Stuff the single-link template from physical parameters."""
    if gamma <= 0 or sigma2 <= 0 or h == 0:
        raise ValueError("gamma, sigma2 must be positive and h nonzero")
    # A holds -gain, b holds -sigma (standard form b - Ax in K)
    return stuff(
        template,
        {"qos_gain": -abs(h) / np.sqrt(gamma), "noise": -np.sqrt(sigma2)},
    )
