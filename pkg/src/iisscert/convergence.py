"""Observed-order studies for the integrator against closed-form solutions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrator import GenericSystem, check_grid, simulate
from .system import BilinearSystem, ImpulseSchedule, InitialFunction, InputSignal

DEFAULT_STEPS = (1e-2, 5e-3, 2.5e-3, 1.25e-3)
ROUNDOFF_FLOOR = 1e-13


@dataclass(frozen=True)
class OrderStudy:
    name: str
    steps: tuple
    errors: tuple
    exact: float

    @property
    def orders(self) -> tuple:
        return tuple(math.log(e0 / e1) / math.log(h0 / h1) if e0 > 0 and e1 > 0 else math.nan
                     for (h0, e0), (h1, e1) in zip(zip(self.steps, self.errors), zip(self.steps[1:], self.errors[1:])))

    @property
    def observed_order(self) -> float:
        """Smallest order over consecutive step pairs (nan if any pair is undefined)."""
        return min(self.orders)

    @property
    def monotone(self) -> bool:
        return bool(all(b < a for a, b in zip(self.errors, self.errors[1:])))

    @property
    def at_roundoff(self) -> bool:
        """All errors sit at the rounding floor, so no order can be observed."""
        return bool(max(self.errors) <= ROUNDOFF_FLOOR * max(1.0, abs(self.exact)))

    def meets(self, threshold: float) -> bool:
        return self.monotone and self.observed_order >= threshold

    def to_dict(self) -> dict:
        def clean(v):
            return None if math.isnan(v) else float(v)
        return {"name": self.name, "steps": list(self.steps), "errors": [float(e) for e in self.errors],
                "orders": [clean(o) for o in self.orders], "observed_order": clean(self.observed_order),
                "monotone": self.monotone, "at_roundoff": self.at_roundoff, "exact": self.exact}


def _no_impulses(t0: float) -> ImpulseSchedule:
    return ImpulseSchedule((), t0)


def _delay_system(a: float, b: float) -> GenericSystem:
    """Scalar ``x' = a x(t) + b x(t - 1)``."""
    return GenericSystem(rhs=lambda t, hist, w: a * hist(t) + b * hist(t - 1.0),
                         jump=lambda t, hist, w: np.zeros(1), n=1, max_delay=1.0, delays=(1.0,))


def exponential_study(steps=DEFAULT_STEPS) -> OrderStudy:
    """``x' = 2x``, ``x(0) = 1`` on ``[0, 2]``; exact endpoint ``e^4``."""
    zero = [[0.0]]
    sys = BilinearSystem(A=[[2.0]], A_list=(zero,), B_list=(zero,), C=zero, D=zero, E=zero, F=zero, r=0.0, d=0.0)
    exact = math.exp(4.0)
    errs = []
    for h in steps:
        traj = simulate(sys, InitialFunction.constant([1.0]), InputSignal.zero(1), _no_impulses(0.0), 0.0, 2.0, h)
        errs.append(float(abs(traj.states[-1, 0] - exact)))
    return OrderStudy("delay_free_exponential", tuple(steps), tuple(errs), exact)


def pure_delay_study(steps=DEFAULT_STEPS) -> OrderStudy:
    """``x' = x(t - 1)``, history 1, on ``[0, 2]``; method of steps gives ``x(2) = 3.5``."""
    return _delay_study("pure_delay", _delay_system(0.0, 1.0), 3.5, steps)


def damped_delay_exact() -> float:
    """``x(2)`` for ``x' = -2x + x(t - 1)`` with history 1, by the method of steps."""
    x1 = 0.5 + 0.5 * math.exp(-2.0)
    return 0.25 + 0.5 * math.exp(-2.0) + (x1 - 0.25) * math.exp(-2.0)


def damped_delay_study(steps=DEFAULT_STEPS) -> OrderStudy:
    """``x' = -2x + x(t - 1)``: a delayed problem whose solution is not polynomial."""
    return _delay_study("damped_delay", _delay_system(-2.0, 1.0), damped_delay_exact(), steps)


def _delay_study(name, sys, exact, steps) -> OrderStudy:
    errs = []
    for h in steps:
        traj = simulate(sys, InitialFunction.constant([1.0]), InputSignal.zero(1), _no_impulses(0.0), 0.0, 2.0, h)
        errs.append(float(abs(traj.states[-1, 0] - exact)))
    return OrderStudy(name, tuple(steps), tuple(errs), exact)


def validate_steps(steps) -> None:
    """Raise ConfigurationError unless every step divides the unit test delay."""
    for h in steps:
        check_grid(h, 0.0, (1.0,), ())
