"""Fixed-step RK4 for delay differential equations with delay-dependent impulses.

Solutions are right-continuous.  Every impulse time and every delay offset
must land on the grid ``t0 + k*h``; at an impulse node the stored state is the
post-jump value and the pre-jump left limit is kept alongside it.  Delayed
states between nodes come from cubic Hermite interpolation of the stored
states and derivatives, never across a jump.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np

from .errors import ConfigurationError, DimensionError, DomainError, InputError, NumericalError
from .system import BilinearSystem, ImpulseSchedule, InitialFunction, InputSignal

BLOW_UP_NORM = 1e12
GRID_RTOL = 1e-9


def apply_impulse(x_minus, x_delayed, w_minus, D, E, F) -> np.ndarray:
    """Post-jump state ``(I + D) x_minus + E x_delayed + F w_minus``."""
    x_minus = np.asarray(x_minus, dtype=float)
    x_delayed = np.asarray(x_delayed, dtype=float)
    w_minus = np.asarray(w_minus, dtype=float)
    D, E, F = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (D, E, F))
    n = x_minus.shape[0]
    if x_delayed.shape != (n,) or D.shape != (n, n) or E.shape != (n, n) or F.shape != (n, w_minus.shape[0]):
        raise DimensionError(
            f"impulse dimensions disagree: x {x_minus.shape}, x_delayed {x_delayed.shape}, "
            f"w {w_minus.shape}, D {D.shape}, E {E.shape}, F {F.shape}")
    return x_minus + (D @ x_minus + E @ x_delayed + F @ w_minus)


@dataclass(frozen=True)
class GenericSystem:
    """Impulsive delay system given by callables.

    ``rhs(t, hist, w)`` returns ``x'(t)`` and ``jump(t, hist, w_minus)``
    returns the increment ``x(t_k) - x(t_k^-)``.  ``hist(s)`` gives the state
    at absolute time ``s``; ``hist(t)`` is the current state (the left limit
    inside ``jump``).  ``delays`` lists the offsets that must land on grid
    nodes.
    """

    rhs: Callable
    jump: Callable
    n: int
    max_delay: float = 0.0
    delays: tuple = ()


@dataclass(frozen=True)
class ImpulseRecord:
    time: float
    index: int
    x_minus: np.ndarray
    x_plus: np.ndarray
    x_delayed: np.ndarray | None
    w_minus: np.ndarray


def _hermite(x0, d0, x1, d1, h, theta):
    t2 = theta * theta
    t3 = t2 * theta
    return ((2 * t3 - 3 * t2 + 1) * x0 + (t3 - 2 * t2 + theta) * h * d0
            + (-2 * t3 + 3 * t2) * x1 + (t3 - t2) * h * d1)


class _History:
    """Node storage plus lookup rules shared by the integrator and Trajectory."""

    def __init__(self, t0, h, n_nodes, n, initial, max_delay):
        self.t0 = float(t0)
        self.h = float(h)
        self.initial = initial
        self.max_delay = float(max_delay)
        self.states = np.zeros((n_nodes, n))
        self.states_left = np.zeros((n_nodes, n))
        self.derivs = np.zeros((n_nodes, n))
        self.derivs_left = np.zeros((n_nodes, n))
        self.last = 0

    def node(self, j: int, side: str = "right") -> np.ndarray:
        if j < 0:
            return self.initial(j * self.h)[...]
        if j > self.last:
            raise DomainError(f"history node {j} not yet computed (last is {self.last})")
        return self.states[j] if side == "right" else self.states_left[j]

    def mid(self, j: int) -> np.ndarray:
        """Value at the midpoint of ``[t_j, t_j+1]``."""
        if j + 1 <= 0:
            return self.initial((j + 0.5) * self.h)
        if j + 1 > self.last:
            raise DomainError(f"history interval [{j}, {j + 1}] not yet computed")
        return (0.5 * (self.states[j] + self.states_left[j + 1])
                + 0.125 * self.h * (self.derivs[j] - self.derivs_left[j + 1]))

    def at(self, t: float, side: str = "right") -> np.ndarray:
        if side not in ("right", "left"):
            raise InputError(f"side must be 'right' or 'left', got {side!r}")
        h = self.h
        lower = self.t0 - self.max_delay
        if t < lower - GRID_RTOL * max(h, abs(lower)):
            raise DomainError(f"lookup at t={t} is below the history domain start {lower}")
        u = (t - self.t0) / h
        j = int(round(u))
        if abs(u - j) <= GRID_RTOL * max(1.0, abs(u)):
            if j <= 0:
                return self.initial(min(t - self.t0, 0.0)) if j < 0 else self.node(0, side).copy()
            return self.node(j, side).copy()
        if u < 0:
            return self.initial(t - self.t0)
        j = int(math.floor(u))
        if j + 1 > self.last:
            raise DomainError(f"lookup at t={t} is beyond the computed trajectory")
        return _hermite(self.states[j], self.derivs[j], self.states_left[j + 1], self.derivs_left[j + 1],
                        h, u - j)


@dataclass(frozen=True)
class Trajectory:
    """Right-continuous grid solution with left limits at impulse nodes.

    ``states[j]`` is ``x(t_j)``; ``states_left[j]`` is ``x(t_j^-)`` (identical
    except at impulse nodes).  ``derivs``/``derivs_left`` hold the matching
    one-sided derivatives used for Hermite interpolation.
    """

    t0: float
    h: float
    times: np.ndarray
    states: np.ndarray
    states_left: np.ndarray
    derivs: np.ndarray
    derivs_left: np.ndarray
    impulses: tuple
    initial: InitialFunction
    max_delay: float
    blow_up: bool = False
    blow_up_time: float | None = None

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def impulse_indices(self) -> tuple:
        return tuple(rec.index for rec in self.impulses)

    def _history(self) -> _History:
        hist = _History.__new__(_History)
        hist.t0, hist.h, hist.initial, hist.max_delay = self.t0, self.h, self.initial, self.max_delay
        hist.states, hist.states_left = self.states, self.states_left
        hist.derivs, hist.derivs_left = self.derivs, self.derivs_left
        hist.last = len(self.times) - 1
        return hist

    def lookup(self, t: float, side: str = "right") -> np.ndarray:
        """State at time ``t``; ``side='left'`` returns the pre-impulse value at impulse nodes."""
        return self._history().at(float(t), side)

    def node_index(self, t: float) -> int | None:
        u = (t - self.t0) / self.h
        j = int(round(u))
        if abs(u - j) <= GRID_RTOL * max(1.0, abs(u)) and 0 <= j < len(self.times):
            return j
        return None

    def summary(self) -> dict:
        norms = np.linalg.norm(self.states, axis=1)
        left_norms = np.linalg.norm(self.states_left, axis=1)
        return {
            "t0": self.t0, "T": self.T, "h": self.h,
            "n_nodes": int(len(self.times)),
            "n_impulses": len(self.impulses),
            "max_norm": float(max(norms.max(), left_norms.max())),
            "final_norm": float(norms[-1]),
            "initial_norm": float(self.initial.sup_norm()),
            "blow_up": self.blow_up,
            "blow_up_time": self.blow_up_time,
        }

    def rows(self) -> Iterable[tuple]:
        impulse_nodes = set(self.impulse_indices)
        for j, t in enumerate(self.times):
            if j in impulse_nodes:
                yield t, self.states_left[j], "pre"
                yield t, self.states[j], "post"
            else:
                yield t, self.states[j], "none"

    def to_csv(self, dest) -> None:
        """Write ``t,x1,...,xn,impulse_flag`` rows with 17 significant digits."""
        if isinstance(dest, (str, bytes)) or hasattr(dest, "__fspath__"):
            with open(dest, "w", newline="") as fh:
                self.to_csv(fh)
            return
        writer = csv.writer(dest, lineterminator="\n")
        writer.writerow(["t"] + [f"x{i + 1}" for i in range(self.n)] + ["impulse_flag"])
        for t, x, flag in self.rows():
            writer.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in x] + [flag])

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def history_lookup(traj: Trajectory, t: float, side: str = "right") -> np.ndarray:
    return traj.lookup(t, side)


# ---------------------------------------------------------------------------
# grid validation


def _as_fraction(x: float) -> Fraction:
    return Fraction(x).limit_denominator(10**6)


def suggest_step(h: float, quantities: Iterable[float]) -> float:
    """Largest step not above ``h`` that divides every positive quantity."""
    g = None
    for q in quantities:
        if q <= 0:
            continue
        fq = _as_fraction(q)
        g = fq if g is None else Fraction(math.gcd(g.numerator * fq.denominator, fq.numerator * g.denominator),
                                          g.denominator * fq.denominator)
    if g is None:
        return h
    return float(g / math.ceil(float(g) / h - 1e-12))


def check_grid(h: float, t0: float, delays: Iterable[float], times: Iterable[float]) -> None:
    """Raise ConfigurationError unless ``h`` divides every delay and impulse gap."""
    if not h > 0:
        raise ConfigurationError("step size h must be positive")
    times = list(times)
    gaps = list(np.diff([t0] + times)) if times else []
    quantities = [("delay", x) for x in delays if x > 0] + [("impulse gap", g) for g in gaps]
    for label, x in quantities:
        ratio = x / h
        if abs(ratio - round(ratio)) > GRID_RTOL * max(1.0, ratio) or round(ratio) < 1:
            alt = suggest_step(h, [x for _, x in quantities])
            raise ConfigurationError(
                f"step h={h:g} does not divide {label} {x:.12g}; try h={alt:.12g}")


# ---------------------------------------------------------------------------
# right-hand-side models


class _BilinearModel:
    def __init__(self, sys: BilinearSystem, w: InputSignal, hist: _History, n_steps: int, impulse_nodes):
        self.sys = sys
        self.hist = hist
        h = hist.h
        self.m = int(round(sys.r / h))
        self.md = int(round(sys.d / h))
        half = hist.t0 + 0.5 * h * np.arange(2 * n_steps + 1)
        with np.errstate(all="ignore"):
            self.W = w.evaluate(half, "right")
            self.W_left = w.evaluate(half, "left")
        self.A_eff, self.B_eff, self.Cw = self._coefficients(self.W)
        if w.breakpoints():
            self.A_eff_left, self.B_eff_left, self.Cw_left = self._coefficients(self.W_left)
        else:
            self.A_eff_left, self.B_eff_left, self.Cw_left = self.A_eff, self.B_eff, self.Cw
        special = set(impulse_nodes) | {j + self.m for j in impulse_nodes}
        for b in w.breakpoints():
            u = (b - hist.t0) / h
            if abs(u - round(u)) <= GRID_RTOL * max(1.0, abs(u)):
                special.add(int(round(u)))
        self.special = special

    def _coefficients(self, W):
        sys = self.sys
        with np.errstate(all="ignore"):
            A_eff = sys.A + np.einsum("kq,qij->kij", W, np.stack(sys.A_list))
            B_eff = np.einsum("kq,qij->kij", W, np.stack(sys.B_list))
            Cw = W @ sys.C.T
        return A_eff, B_eff, Cw

    def _f(self, k, x, xd, left):
        if left:
            return self.A_eff_left[k] @ x + self.B_eff_left[k] @ xd + self.Cw_left[k]
        return self.A_eff[k] @ x + self.B_eff[k] @ xd + self.Cw[k]

    def deriv(self, j, x, side):
        xd = self.hist.node(j - self.m, side) if self.m else x
        return self._f(2 * j, x, xd, side == "left")

    def needs_left_deriv(self, j):
        return j in self.special

    def stage(self, n, c, x):
        if c == 1:
            xd = self.hist.node(n + 1 - self.m, "left") if self.m else x
            return self._f(2 * n + 2, x, xd, True)
        xd = self.hist.mid(n - self.m) if self.m else x
        return self._f(2 * n + 1, x, xd, False)

    def jump(self, j, x_minus):
        xd = self.hist.node(j - self.md, "right").copy() if self.md else x_minus.copy()
        w_minus = self.W_left[2 * j]
        s = self.sys
        return apply_impulse(x_minus, xd, w_minus, s.D, s.E, s.F), xd, w_minus.copy()


class _GenericModel:
    def __init__(self, sys: GenericSystem, w: InputSignal, hist: _History, n_steps: int):
        self.sys = sys
        self.hist = hist
        half = hist.t0 + 0.5 * hist.h * np.arange(2 * n_steps + 1)
        with np.errstate(all="ignore"):
            self.W = w.evaluate(half, "right")
            self.W_left = w.evaluate(half, "left")

    def _accessor(self, t_now, x_now, valid_until, default_side):
        hist = self.hist
        tol = GRID_RTOL * max(hist.h, abs(t_now))

        def lookup(s, side=None):
            if s >= t_now - tol:
                if s > t_now + tol:
                    raise DomainError(f"state requested at future time {s} (now {t_now})")
                return x_now
            if s <= valid_until + tol:
                return hist.at(s, side or default_side)
            raise DomainError(f"state at {s} falls inside the current step; delays must be 0 or >= h")
        return lookup

    def _eval(self, t, acc, w):
        return np.asarray(self.sys.rhs(t, acc, w), dtype=float).reshape(-1)

    def deriv(self, j, x, side):
        h = self.hist
        t = h.t0 + j * h.h
        acc = self._accessor(t, x, h.t0 + (j - 1) * h.h, side)
        return self._eval(t, acc, (self.W if side == "right" else self.W_left)[2 * j])

    def needs_left_deriv(self, j):
        return True

    def stage(self, n, c, x):
        h = self.hist
        t = h.t0 + (n + c) * h.h
        side = "left" if c == 1 else "right"
        acc = self._accessor(t, x, h.t0 + n * h.h, side)
        k = 2 * n + (2 if c == 1 else 1)
        return self._eval(t, acc, (self.W_left if c == 1 else self.W)[k])

    def jump(self, j, x_minus):
        h = self.hist
        t = h.t0 + j * h.h
        acc = self._accessor(t, x_minus, h.t0 + (j - 1) * h.h, "right")
        w_minus = self.W_left[2 * j]
        delta = np.asarray(self.sys.jump(t, acc, w_minus), dtype=float).reshape(-1)
        return x_minus + delta, None, w_minus.copy()


# ---------------------------------------------------------------------------


def simulate(system, phi: InitialFunction, w: InputSignal, sched: ImpulseSchedule,
             t0: float, T: float, h: float, blow_up_norm: float = BLOW_UP_NORM) -> Trajectory:
    """Integrate the impulsive delay system from ``t0`` to ``T`` with step ``h``.

    ``system`` is a BilinearSystem or a GenericSystem.  Raises
    ConfigurationError when ``h`` does not divide the delays and impulse
    gaps, and NumericalError (with the time stamp) on non-finite dynamics.
    A state norm above ``blow_up_norm`` stops the run with ``blow_up`` set.
    """
    t0, T, h = float(t0), float(T), float(h)
    if not T > t0:
        raise InputError(f"T={T} must exceed t0={t0}")
    if isinstance(system, BilinearSystem):
        n, max_delay, delays = system.n, system.max_delay, (system.r, system.d)
        if w.dimension != system.q:
            raise DimensionError(f"input has {w.dimension} components, system expects q={system.q}")
    elif isinstance(system, GenericSystem):
        n, max_delay, delays = system.n, float(system.max_delay), tuple(system.delays)
    else:
        raise InputError("system must be a BilinearSystem or GenericSystem")
    if phi.n != n:
        raise DimensionError(f"initial function has dimension {phi.n}, system has n={n}")
    if not phi.covers(max_delay):
        raise DomainError(f"initial function does not cover [-{max_delay}, 0]")
    if abs(sched.t0 - t0) > GRID_RTOL * max(1.0, abs(t0)):
        raise ConfigurationError(f"schedule starts at t0={sched.t0}, run starts at {t0}")

    n_steps = int(math.floor((T - t0) / h + GRID_RTOL * max(1.0, (T - t0) / h)))
    if n_steps < 1:
        raise ConfigurationError(f"h={h} is larger than the horizon {T - t0}")
    t_end = t0 + n_steps * h
    times_in_run = sched.up_to(t_end)
    check_grid(h, t0, delays, times_in_run)
    impulse_nodes = {int(round((tk - t0) / h)): tk for tk in times_in_run}

    hist = _History(t0, h, n_steps + 1, n, phi, max_delay)
    if isinstance(system, BilinearSystem):
        model = _BilinearModel(system, w, hist, n_steps, impulse_nodes)
    else:
        model = _GenericModel(system, w, hist, n_steps)

    def finite_or_raise(vec, j, what):
        if not np.all(np.isfinite(vec)):
            raise NumericalError(f"non-finite {what} at t={t0 + j * h:.12g}")

    x0 = np.asarray(phi(0.0), dtype=float).reshape(n)
    hist.states[0] = hist.states_left[0] = x0
    hist.derivs[0] = model.deriv(0, x0, "right")
    finite_or_raise(hist.derivs[0], 0, "derivative")
    hist.derivs_left[0] = hist.derivs[0]

    records = []
    blow_up, blow_up_time = False, None
    last = n_steps
    half = 0.5 * h
    for step in range(n_steps):
        j = step + 1
        x = hist.states[step]
        k1 = hist.derivs[step]
        k2 = model.stage(step, 0.5, x + half * k1)
        k3 = model.stage(step, 0.5, x + half * k2)
        k4 = model.stage(step, 1, x + h * k3)
        x_new = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        finite_or_raise(x_new, j, "state")

        hist.states_left[j] = x_new
        hist.last = j
        left_needed = model.needs_left_deriv(j)
        if left_needed:
            hist.states[j] = x_new
            hist.derivs_left[j] = model.deriv(j, x_new, "left")
            finite_or_raise(hist.derivs_left[j], j, "derivative")
        if j in impulse_nodes:
            x_plus, x_delayed, w_minus = model.jump(j, x_new)
            finite_or_raise(x_plus, j, "impulse")
            records.append(ImpulseRecord(impulse_nodes[j], j, x_new.copy(), x_plus.copy(), x_delayed, w_minus))
        else:
            x_plus = x_new
        hist.states[j] = x_plus
        hist.derivs[j] = model.deriv(j, x_plus, "right")
        finite_or_raise(hist.derivs[j], j, "derivative")
        if not left_needed:
            hist.derivs_left[j] = hist.derivs[j]

        if max(np.linalg.norm(x_plus), np.linalg.norm(x_new)) > blow_up_norm:
            blow_up, blow_up_time, last = True, t0 + j * h, j
            break

    size = last + 1
    arrays = []
    for arr in (hist.states[:size], hist.states_left[:size], hist.derivs[:size], hist.derivs_left[:size]):
        arr = arr.copy()
        arr.setflags(write=False)
        arrays.append(arr)
    times = t0 + h * np.arange(size)
    times.setflags(write=False)
    return Trajectory(t0, h, times, *arrays, impulses=tuple(records), initial=phi, max_delay=max_delay,
                      blow_up=blow_up, blow_up_time=blow_up_time)
