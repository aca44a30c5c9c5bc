"""Bounded-variable linear programming.

Problems have the form::

    minimize    c . y
    subject to  M y = b,   lower <= y <= upper

with possibly infinite bounds (free variables). The solver is a dense
tableau primal simplex with explicit bound handling (no slack columns for
the box), a Phase I on artificial variables, Dantzig pricing, and a switch
to Bland's rule after ``10 * (m + r)`` pivots so that it always terminates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend
from ._core_py import AT_LOWER, AT_UPPER, BASIC, FREE_ZERO  # noqa: F401
from .errors import LpError

FEAS_TOL = 1e-9
BOUND_TOL = 1e-12
PIVOT_TOL = 1e-9
OPT_TOL = 1e-11

_STATUS = {0: "optimal", 1: "infeasible", 2: "unbounded", 3: "iteration_limit"}


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    M: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        M = np.ascontiguousarray(self.M, dtype=np.float64)
        if M.ndim != 2:
            raise ValueError("M must be 2-D")
        r, m = M.shape
        vecs = {}
        for name, size in (("c", m), ("b", r), ("lower", m), ("upper", m)):
            v = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if v.shape != (size,):
                raise ValueError(f"{name} has shape {v.shape}, expected ({size},)")
            vecs[name] = v
        if np.any(vecs["lower"] > vecs["upper"]):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(np.isnan(M)) or any(np.any(np.isnan(v)) for v in vecs.values()):
            raise ValueError("NaN in linear program data")
        object.__setattr__(self, "M", M)
        for name, v in vecs.items():
            object.__setattr__(self, name, v)

    @property
    def n_rows(self) -> int:
        return self.M.shape[0]

    @property
    def n_vars(self) -> int:
        return self.M.shape[1]

    @classmethod
    def box(cls, c, M, b) -> "LinearProgram":
        """Program with ``0 <= y <= 1`` on every variable."""
        m = np.shape(M)[1]
        return cls(c, M, b, np.zeros(m), np.ones(m))


@dataclass(frozen=True)
class WarmStart:
    """Previous basis used to skip Phase I when still primal feasible.

    ``basis`` lists the ``r`` basic variables; ``status`` gives
    ``AT_LOWER``/``AT_UPPER``/``FREE_ZERO`` for the others (entries for basic
    variables are ignored).
    """

    basis: np.ndarray
    status: np.ndarray


@dataclass(frozen=True)
class LpSolution:
    status: str
    y: np.ndarray
    objective: float
    var_status: np.ndarray
    basis: np.ndarray
    reduced_costs: np.ndarray
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def warm_start(self) -> WarmStart:
        return WarmStart(self.basis.copy(), self.var_status.copy())


def _run(lp: LinearProgram, phase1_only: bool, warm: Optional[WarmStart],
         verbose: bool, max_iter: Optional[int]) -> LpSolution:
    r, m = lp.M.shape
    kern = _backend.core_py if verbose else _backend.core
    y = np.zeros(m)
    st = np.zeros(m, dtype=np.int8)
    bs = np.zeros(r, dtype=np.int64)
    d = np.zeros(m)
    bland_after = 10 * (m + r)
    limit = max_iter if max_iter is not None else bland_after + 200 * (m + r) + 1000
    code, obj, it = kern.simplex_solve(
        lp.M, lp.b, lp.c, lp.lower, lp.upper, phase1_only,
        None if warm is None else np.asarray(warm.basis, dtype=np.int64),
        None if warm is None else np.asarray(warm.status, dtype=np.int8),
        bland_after, limit, FEAS_TOL, PIVOT_TOL, OPT_TOL, y, st, bs, d,
        verbose)
    if code == 3:
        raise LpError(f"simplex exceeded {limit} pivots")
    return LpSolution(_STATUS[code], y, obj, st, bs, d, it)


def solve(lp: LinearProgram, warm_start: Optional[WarmStart] = None,
          verbose: bool = False, max_iter: Optional[int] = None) -> LpSolution:
    """Solve ``lp`` to an optimal vertex, or report infeasible/unbounded.

    Deterministic for a given program and warm start. ``verbose=True``
    routes through the pure-Python kernel and logs every pivot on the
    ``zonodpp.lp`` logger at DEBUG level.
    """
    if verbose:
        logging.getLogger("zonodpp.lp").debug(
            "solve: %d rows, %d vars, warm=%s", lp.n_rows, lp.n_vars, warm_start is not None)
    return _run(lp, False, warm_start, verbose, max_iter)


def feasibility(lp: LinearProgram) -> bool:
    """Phase I only: does ``M y = b`` have a solution inside the bounds?"""
    return _run(lp, True, None, False, None).status == "optimal"


def fractional_mask(y: np.ndarray, lower: float = 0.0, upper: float = 1.0) -> np.ndarray:
    """Coordinates strictly inside ``(lower, upper)`` beyond ``BOUND_TOL``."""
    return (y > lower + BOUND_TOL) & (y < upper - BOUND_TOL)
