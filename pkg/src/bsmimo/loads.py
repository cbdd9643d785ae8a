"""Reactive-load synthesis for PSK multiplexing on the three-port radiator.

For a symbol-combination ratio ``xbar = x2 / x1`` the passive ports are
terminated by ``j*X1`` and ``j*X2``.  With ``X1`` at ``xbar = -1`` chosen as
the free parameter ``f``, every other reactance follows from a bilinear map

    X(xbar) = -z0 * (c1 f + c2) / (d1 f + d2),   X2(xbar) = X1(-xbar)

whose coefficients depend on ``arg(xbar)/2`` and on the scalar
``delta = S_pp[0,0] - S_pp[1,0]`` of the passive-port block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NonPSKRatio, PoleAtFreeParameter
from .network import LoadTermination, ScatteringMatrix3

#: Denominators smaller than this fraction of z0 are treated as poles.
POLE_RTOL = 1e-6


def delta(s: ScatteringMatrix3, ports: str = "passive") -> complex:
    """Reflection-minus-coupling scalar entering the reactance formula.

    ``ports="passive"`` (default) numbers the two loaded ports first, i.e.
    uses ``S[1,1] - S[2,1]`` in this package's (active, p1, p2) order.
    ``ports="active"`` takes ``S[0,0] - S[1,0]`` literally.
    """
    if ports == "passive":
        return complex(s.entries[1, 1] - s.entries[2, 1])
    if ports == "active":
        return complex(s.entries[0, 0] - s.entries[1, 0])
    raise ValueError(f"ports must be 'passive' or 'active', got {ports!r}")


def _check_psk(xbar: complex) -> complex:
    xbar = complex(xbar)
    if abs(abs(xbar) - 1.0) >= 1e-9:
        raise NonPSKRatio(f"combination ratio {xbar} does not have unit modulus")
    # -0.0 + 0.0 == +0.0: keeps atan2 on one branch so X(-xbar) is bit-stable
    return complex(xbar.real + 0.0, xbar.imag + 0.0)


def _coefficients(d: complex, z0: float, xbar: complex):
    half = math.atan2(xbar.imag, xbar.real) / 2.0
    c, s = math.cos(half), math.sin(half)
    dd = abs(d) ** 2
    c1 = 2.0 * d.imag * c + (1.0 - dd) * s
    c2 = z0 * abs(1.0 + d) ** 2 * c
    d1 = abs(1.0 - d) ** 2 * c
    d2 = 2.0 * z0 * d.imag * c - z0 * (1.0 - dd) * s
    return c1, c2, d1, d2


def _reactance(d: complex, z0: float, xbar: complex, f: float) -> float:
    c1, c2, d1, d2 = _coefficients(d, z0, xbar)
    den = d1 * f + d2
    if abs(den) < POLE_RTOL * abs(z0):
        raise PoleAtFreeParameter(f"free parameter {f} ohm is a pole for xbar={xbar}")
    return -z0 * (c1 * f + c2) / den


def reactance_for_ratio(
    s_amended: ScatteringMatrix3, xbar: complex, x1_free: float, ports: str = "passive"
) -> tuple[float, float]:
    """Reactances ``(X1, X2)`` in ohms realizing ratio ``xbar``."""
    xbar = _check_psk(xbar)
    d = delta(s_amended, ports)
    z0 = s_amended.z0
    return _reactance(d, z0, xbar, x1_free), _reactance(d, z0, _check_psk(-xbar), x1_free)


def ratio_set(order: int) -> tuple[complex, ...]:
    """The ``order`` PSK combination ratios in state order.

    The first two states are ``-1`` and ``+1``; the rest follow by
    increasing angle in (0, pi), each immediately followed by its negation.
    For QPSK this gives ``(-1, +1, +j, -j)``.
    """
    if order < 2 or order & (order - 1):
        raise ValueError(f"modulation order must be a power of two >= 2, got {order}")
    out: list[complex] = [complex(-1.0, 0.0), complex(1.0, 0.0)]
    for k in range(1, order // 2):
        ang = 2.0 * math.pi * k / order
        re, im = math.cos(ang), math.sin(ang)
        # snap exact zeros so that e.g. +j is exactly (0, 1)
        re = 0.0 if abs(re) < 1e-15 else re
        im = 0.0 if abs(im) < 1e-15 else im
        r = complex(re, im)
        out += [r, -r]
    return tuple(out)


@dataclass(frozen=True)
class LoadState:
    xbar: complex
    x1: float
    x2: float


@dataclass(frozen=True)
class LoadSchedule:
    """Per-ratio reactance pairs for one free-parameter choice."""

    states: tuple[LoadState, ...]
    free_param: float
    s_matrix_ref: str = ""

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def index_of(self, xbar: complex, tol: float = 1e-9) -> int:
        for i, st in enumerate(self.states):
            if abs(st.xbar - xbar) < tol:
                return i
        raise KeyError(f"ratio {xbar} not in schedule")

    def reactances(self, xbar: complex) -> tuple[float, float]:
        st = self.states[self.index_of(xbar)]
        return st.x1, st.x2

    def terminations(self, r1: float = 0.0, r2: float = 0.0) -> list[LoadTermination]:
        return [LoadTermination(st.x1, st.x2, r1, r2) for st in self.states]

    def check_symmetry(self) -> bool:
        """Every ratio's negation is present with swapped reactances (exactly)."""
        for st in self.states:
            others = [o for o in self.states if o.xbar == -st.xbar]
            if len(others) != 1:
                return False
            other = others[0]
            if other.x1 != st.x2 or other.x2 != st.x1:
                return False
        return all(math.isfinite(st.x1) and math.isfinite(st.x2) for st in self.states)

    def all_reactances(self) -> np.ndarray:
        return np.array([[st.x1, st.x2] for st in self.states])


def build_schedule(
    s_amended: ScatteringMatrix3,
    modulation_order: int,
    x1_free: float,
    ports: str = "passive",
    s_matrix_ref: str = "",
) -> LoadSchedule:
    states = []
    for xbar in ratio_set(modulation_order):
        x1, x2 = reactance_for_ratio(s_amended, xbar, x1_free, ports)
        states.append(LoadState(_check_psk(xbar), x1, x2))
    return LoadSchedule(tuple(states), float(x1_free), s_matrix_ref)


@dataclass(frozen=True)
class TuningRange:
    min: float
    max: float

    def __post_init__(self):
        if not self.min < self.max:
            raise ValueError(f"tuning range needs min < max, got [{self.min}, {self.max}]")

    def contains(self, x: float) -> bool:
        return self.min <= x <= self.max


UNBOUNDED = TuningRange(-math.inf, math.inf)


@dataclass(frozen=True)
class SweepPoint:
    x1_free: float
    schedule: LoadSchedule | None
    feasible: bool
    pole: bool = False


def default_grid() -> np.ndarray:
    """1 ohm steps over [-500, 500] ohm."""
    return np.arange(-500.0, 501.0, 1.0)


def sweep_free_parameter(
    s_amended: ScatteringMatrix3,
    modulation_order: int,
    grid: Iterable[float],
    tuning: TuningRange = UNBOUNDED,
    ports: str = "passive",
) -> list[SweepPoint]:
    """Evaluate the schedule at every grid point and flag feasibility.

    Grid points at a pole of any state's formula are kept, flagged
    ``pole=True`` and infeasible.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("free-parameter grid is empty")
    out = []
    for f in grid:
        try:
            sched = build_schedule(s_amended, modulation_order, float(f), ports)
        except PoleAtFreeParameter:
            out.append(SweepPoint(float(f), None, False, True))
            continue
        ok = all(tuning.contains(x) for x in sched.all_reactances().ravel())
        out.append(SweepPoint(float(f), sched, ok))
    return out


def feasible_intervals(points: Sequence[SweepPoint]) -> list[tuple[float, float]]:
    """Contiguous runs of feasible grid points as (first, last) pairs."""
    runs, start, prev = [], None, None
    for p in points:
        if p.feasible and start is None:
            start = p.x1_free
        if not p.feasible and start is not None:
            runs.append((start, prev))
            start = None
        prev = p.x1_free
    if start is not None:
        runs.append((start, prev))
    return runs
