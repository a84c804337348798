"""Explicit SSP time integrators with per-stage limiting.

All schemes are written in Shu-Osher form: every stage is a convex
combination of forward-Euler pieces, so bounds proved for a single Euler
step (for instance the piecewise-constant TVD bound) carry over.  The step
size is dt = courant * h with h the regular background element width; it is
never reduced by the cut size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .limiter import LimiterConfig, apply_tvb, modified_cut_euler_step
from .operator import SpatialOperator

_LD = np.longdouble

def _complete(*alphas):
    """Last convex weight as the exact complement, so each row sums to one.

    The published five-stage coefficients are decimal roundings whose row
    sums miss one by ~1e-15; used verbatim they leak mass at that rate
    every step, which dominates conservation and the finest refinement
    levels over long marches.
    """
    head = [_LD(a) for a in alphas]
    return head + [_LD(1) - sum(head)]


_A_2 = _complete("0.444370493651235")
_A_3 = _complete("0.620101851488403")
_A_4 = _complete("0.178079954393132")
_A_5 = _complete("0.517231671970585", "0.096059710526147")

# rows of (source stage, alpha, beta) with stage value
#   sum_j alpha_j u_j + beta_j dt L(u_j);  beta/alpha is the embedded Euler
#   step fraction used by the modified cut limiting.
_TABLEAUS = {
    "euler": ([[(0, _LD(1), _LD(1))]], [0.0]),
    "ssprk3": (
        [
            [(0, _LD(1), _LD(1))],
            [(0, _LD(0.75), _LD(0)), (1, _LD(0.25), _LD(0.25))],
            [(0, _LD(1) / 3, _LD(0)), (2, _LD(1) - _LD(1) / 3, _LD(2) / 3)],
        ],
        [0.0, 1.0, 0.5],
    ),
    "rk4_5stage": (
        [
            [(0, _LD(1), _LD("0.391752226571890"))],
            [(0, _A_2[0], _LD(0)), (1, _A_2[1], _LD("0.368410593050371"))],
            [(0, _A_3[0], _LD(0)), (2, _A_3[1], _LD("0.251891774271694"))],
            [(0, _A_4[0], _LD(0)), (3, _A_4[1], _LD("0.544974750228521"))],
            [
                (2, _A_5[0], _LD(0)),
                (3, _A_5[1], _LD("0.063692468666290")),
                (4, _A_5[2], _LD("0.226007483236906")),
            ],
        ],
        [0.0, 0.391752226571890, 0.586079689311540, 0.474542363121400, 0.935010630967653],
    ),
}


@dataclass(frozen=True)
class TimeScheme:
    kind: str  # "euler" | "ssprk3" | "rk4_5stage"
    courant: float
    t_final: float

    def __post_init__(self):
        if self.kind not in _TABLEAUS:
            raise ValueError(f"unknown time scheme {self.kind!r}")
        if self.courant <= 0:
            raise ValueError(f"Courant number must be positive, got {self.courant}")


def default_scheme_kind(degree: int) -> str:
    """Third-order SSP for degree <= 2, five-stage fourth order above."""
    return "ssprk3" if degree <= 2 else "rk4_5stage"


def tvd_timestep_bound(alpha: float, gamma_mass: float) -> float:
    """Courant bound alpha + gamma_mass/(gamma_mass+1) for the piecewise-
    constant scheme on a boundary-cut mesh."""
    return alpha + gamma_mass / (gamma_mass + 1.0)


def step(
    op: SpatialOperator,
    u: np.ndarray,
    t: float,
    dt: float,
    kind: str,
    limiter: Optional[LimiterConfig] = None,
) -> np.ndarray:
    """One full time step from t to t + dt."""
    tableau, stage_times = _TABLEAUS[kind]
    limiter = limiter or LimiterConfig.none()
    stages = [np.asarray(u)]
    rhs_cache: dict[int, np.ndarray] = {}

    def rhs_of(j: int) -> np.ndarray:
        # the spatial pipeline runs in double precision
        if j not in rhs_cache:
            rhs_cache[j] = op.rhs(
                np.asarray(stages[j], dtype=float), t + stage_times[j] * dt
            )
        return rhs_cache[j]

    for row in tableau:
        # stage states and their convex combinations are held in extended
        # precision: rounding the state to double once per stage leaks a
        # coherent O(eps) mass bias per step that dominates fine-level
        # errors over long marches
        acc = np.zeros(stages[0].shape, dtype=np.longdouble)
        for j, a, b in row:
            if limiter.mode == "modified_cut" and b > 0.0:
                acc += a * modified_cut_euler_step(
                    op,
                    np.asarray(stages[j], dtype=float),
                    t + stage_times[j] * dt,
                    float(b / a) * dt,
                    limiter.m,
                )
            else:
                acc += a * np.asarray(stages[j], dtype=np.longdouble)
                if b > 0.0:
                    acc += (b * np.longdouble(dt)) * rhs_of(j)
        if limiter.mode == "tvb":
            value, _ = apply_tvb(
                np.asarray(acc, dtype=float),
                op.mesh,
                op.degree,
                limiter.m,
                periodic=op.bc.is_periodic,
                left_value=op.bc.left(t + dt) if op.bc.left else None,
                right_value=op.bc.right(t + dt) if op.bc.right else None,
            )
            stages.append(value)
        else:
            stages.append(acc)
    return stages[-1]


def advance(
    op: SpatialOperator,
    u0: np.ndarray,
    scheme: TimeScheme,
    limiter: Optional[LimiterConfig] = None,
    observer: Optional[Callable] = None,
) -> np.ndarray:
    """March to scheme.t_final; the last step is shortened to land exactly.

    observer(step_index, t, U), when given, is called on the initial state
    and after every completed step.
    """
    # the state marches in extended precision (exact for float64 inputs);
    # observers and the returned array see double-precision views
    state = np.asarray(u0, dtype=np.longdouble).copy()
    dt_nominal = scheme.courant * op.mesh.h
    t = 0.0
    k = 0
    if observer is not None:
        observer(0, 0.0, np.asarray(state, dtype=float))
    while t < scheme.t_final - 1e-12 * max(1.0, scheme.t_final):
        dt = min(dt_nominal, scheme.t_final - t)
        state = np.asarray(step(op, state, t, dt, scheme.kind, limiter), np.longdouble)
        if not np.isfinite(state).all():
            raise FloatingPointError(f"non-finite solution after step {k + 1}")
        t += dt
        k += 1
        if observer is not None:
            observer(k, t, np.asarray(state, dtype=float))
    return np.asarray(state, dtype=float)
