"""Data model for bilinear impulsive delay systems, inputs, initial data and impulse schedules.

The continuous dynamics are

    x'(t) = A x(t) + sum_i w_i(t) (A_i x(t) + B_i x(t - r)) + C w(t),   t != t_k

and at every impulse time the state jumps by

    x(t_k) - x(t_k^-) = D x(t_k^-) + E x(t_k - d) + F w(t_k^-).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError, DomainError, InputError
from .linalg import as_matrix


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BilinearSystem:
    A: np.ndarray
    A_list: tuple
    B_list: tuple
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    r: float
    d: float

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got shape {A.shape}")
        C = as_matrix(self.C, "C")
        if C.shape[0] != n:
            raise DimensionError(f"C must have {n} rows, got shape {C.shape}")
        q = C.shape[1]
        A_list = tuple(as_matrix(M, f"A_list[{i}]") for i, M in enumerate(self.A_list))
        B_list = tuple(as_matrix(M, f"B_list[{i}]") for i, M in enumerate(self.B_list))
        for label, mats in (("A_list", A_list), ("B_list", B_list)):
            if len(mats) != q:
                raise DimensionError(f"{label} must hold q={q} matrices, got {len(mats)}")
            for i, M in enumerate(mats):
                if M.shape != (n, n):
                    raise DimensionError(f"{label}[{i}] must be {n}x{n}, got shape {M.shape}")
        mats = {}
        for label in ("D", "E"):
            M = as_matrix(getattr(self, label), label)
            if M.shape != (n, n):
                raise DimensionError(f"{label} must be {n}x{n}, got shape {M.shape}")
            mats[label] = M
        F = as_matrix(self.F, "F")
        if F.shape != (n, q):
            raise DimensionError(f"F must be {n}x{q}, got shape {F.shape}")
        for label in ("r", "d"):
            val = float(getattr(self, label))
            if not math.isfinite(val) or val < 0:
                raise InputError(f"delay {label} must be finite and >= 0, got {val}")
            object.__setattr__(self, label, val)
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "A_list", tuple(_frozen(M) for M in A_list))
        object.__setattr__(self, "B_list", tuple(_frozen(M) for M in B_list))
        object.__setattr__(self, "C", _frozen(C))
        object.__setattr__(self, "D", _frozen(mats["D"]))
        object.__setattr__(self, "E", _frozen(mats["E"]))
        object.__setattr__(self, "F", _frozen(F))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def q(self) -> int:
        return self.C.shape[1]

    @property
    def max_delay(self) -> float:
        return max(self.r, self.d)

    def replace(self, **changes) -> "BilinearSystem":
        kwargs = {k: getattr(self, k) for k in ("A", "A_list", "B_list", "C", "D", "E", "F", "r", "d")}
        kwargs.update(changes)
        return BilinearSystem(**kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "BilinearSystem":
        missing = [k for k in ("A", "A_list", "B_list", "C", "D", "E", "F", "r", "d") if k not in data]
        if missing:
            raise InputError(f"system description is missing keys: {', '.join(missing)}")
        sys = cls(
            A=data["A"], A_list=tuple(data["A_list"]), B_list=tuple(data["B_list"]),
            C=data["C"], D=data["D"], E=data["E"], F=data["F"], r=data["r"], d=data["d"],
        )
        for key, actual in (("n", sys.n), ("q", sys.q)):
            if key in data and int(data[key]) != actual:
                raise DimensionError(f"declared {key}={data[key]} but matrices imply {key}={actual}")
        return sys

    def to_dict(self) -> dict:
        return {
            "n": self.n, "q": self.q,
            "A": self.A.tolist(),
            "A_list": [M.tolist() for M in self.A_list],
            "B_list": [M.tolist() for M in self.B_list],
            "C": self.C.tolist(), "D": self.D.tolist(), "E": self.E.tolist(), "F": self.F.tolist(),
            "r": self.r, "d": self.d,
        }


# ---------------------------------------------------------------------------
# input signals

_SCALAR_KINDS = ("zero", "constant", "inverse_square", "exp_decay", "piecewise_constant", "tabulated")


@dataclass(frozen=True)
class ScalarSignal:
    """One component of an input signal.

    kinds and their params:
      zero                -
      constant            value
      inverse_square      scale (default 1): scale * t**-2
      exp_decay           rate, scale (default 1): scale * exp(-rate * t)
      piecewise_constant  breakpoints (increasing), values (one more than breakpoints)
      tabulated           times (increasing), values; linear in between, flat outside
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _SCALAR_KINDS:
            raise InputError(f"unknown signal kind {self.kind!r}; expected one of {_SCALAR_KINDS}")
        p = dict(self.params)
        if self.kind == "constant":
            p.setdefault("value", 0.0)
        elif self.kind == "inverse_square":
            p.setdefault("scale", 1.0)
        elif self.kind == "exp_decay":
            if "rate" not in p:
                raise InputError("exp_decay needs a 'rate'")
            p.setdefault("scale", 1.0)
        elif self.kind == "piecewise_constant":
            bps = np.asarray(p.get("breakpoints", ()), dtype=float).ravel()
            vals = np.asarray(p.get("values", ()), dtype=float).ravel()
            if len(vals) != len(bps) + 1:
                raise InputError("piecewise_constant needs len(values) == len(breakpoints) + 1")
            if np.any(np.diff(bps) <= 0):
                raise InputError("piecewise_constant breakpoints must be strictly increasing")
            p["breakpoints"], p["values"] = tuple(bps), tuple(vals)
        elif self.kind == "tabulated":
            ts = np.asarray(p.get("times", ()), dtype=float).ravel()
            vals = np.asarray(p.get("values", ()), dtype=float).ravel()
            if len(ts) == 0 or len(ts) != len(vals):
                raise InputError("tabulated needs equally long, non-empty 'times' and 'values'")
            if np.any(np.diff(ts) <= 0):
                raise InputError("tabulated times must be strictly increasing")
            p["times"], p["values"] = tuple(ts), tuple(vals)
        for key, val in p.items():
            if not np.all(np.isfinite(np.asarray(val, dtype=float))):
                raise InputError(f"signal parameter {key!r} must be finite")
        object.__setattr__(self, "params", p)

    def breakpoints(self) -> tuple:
        if self.kind == "piecewise_constant":
            return self.params["breakpoints"]
        return ()

    def evaluate(self, t: np.ndarray, side: str = "right") -> np.ndarray:
        p = self.params
        t = np.asarray(t, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(t)
        if self.kind == "constant":
            return np.full_like(t, float(p["value"]))
        if self.kind == "inverse_square":
            with np.errstate(divide="ignore"):
                return p["scale"] / t**2
        if self.kind == "exp_decay":
            return p["scale"] * np.exp(-p["rate"] * t)
        if self.kind == "piecewise_constant":
            idx = np.searchsorted(p["breakpoints"], t, side="right" if side == "right" else "left")
            return np.asarray(p["values"])[idx]
        return np.interp(t, p["times"], p["values"])

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        out.update({k: list(v) if isinstance(v, tuple) else v for k, v in self.params.items()})
        return out


@dataclass(frozen=True)
class InputSignal:
    """Vector input ``w(t)`` built from one scalar signal per component."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise InputError("an input signal needs at least one component")
        object.__setattr__(self, "components", comps)

    @property
    def dimension(self) -> int:
        return len(self.components)

    @classmethod
    def zero(cls, q: int) -> "InputSignal":
        return cls(tuple(ScalarSignal("zero") for _ in range(q)))

    @classmethod
    def from_dict(cls, data: dict, q: int) -> "InputSignal":
        data = dict(data)
        kind = data.pop("kind", "zero")
        if kind == "components":
            comps = []
            for spec in data.get("components", ()):
                spec = dict(spec)
                comps.append(ScalarSignal(spec.pop("kind"), spec))
            sig = cls(tuple(comps))
        elif kind == "constant" and np.ndim(data.get("value", 0.0)) == 1:
            sig = cls(tuple(ScalarSignal("constant", {"value": v}) for v in data["value"]))
        else:
            sig = cls(tuple(ScalarSignal(kind, data) for _ in range(q)))
        if sig.dimension != q:
            raise DimensionError(f"input has {sig.dimension} components but the system has q={q}")
        return sig

    def to_dict(self) -> dict:
        return {"kind": "components", "components": [c.to_dict() for c in self.components]}

    def breakpoints(self) -> tuple:
        return tuple(sorted({b for c in self.components for b in c.breakpoints()}))

    def evaluate(self, t, side: str = "right") -> np.ndarray:
        """Vectorized evaluation: returns shape ``t.shape + (q,)``."""
        return np.stack([c.evaluate(t, side) for c in self.components], axis=-1)


def eval_input(sig: InputSignal, t: float, side: str = "right", start: float | None = None) -> np.ndarray:
    """Evaluate ``w(t)`` (``side='right'``) or the left limit ``w(t^-)``."""
    if side not in ("right", "left"):
        raise InputError(f"side must be 'right' or 'left', got {side!r}")
    if start is not None:
        if t < start or (side == "left" and t <= start):
            raise DomainError(f"input evaluated at t={t} ({side}) before its start {start}")
    return sig.evaluate(np.asarray(float(t)), side)


# ---------------------------------------------------------------------------
# initial functions


@dataclass(frozen=True)
class InitialFunction:
    """History on ``[-max_delay, 0]`` (time measured relative to ``t0``).

    ``constant`` holds one state vector; ``tabulated`` holds offsets ``s``
    (covering the domain) with a state per offset, interpolated linearly.
    """

    kind: str
    values: np.ndarray
    offsets: np.ndarray | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if self.kind == "constant":
            vals = vals.ravel()
            if self.offsets is not None:
                raise InputError("constant initial function takes no offsets")
        elif self.kind == "tabulated":
            if vals.ndim == 1:
                vals = vals.reshape(-1, 1)
            offs = np.asarray(self.offsets, dtype=float).ravel()
            if offs.shape[0] != vals.shape[0] or offs.shape[0] < 1:
                raise InputError("tabulated initial function needs one state per offset")
            if np.any(np.diff(offs) <= 0):
                raise InputError("initial-function offsets must be strictly increasing")
            if offs[-1] != 0.0:
                raise InputError("initial-function offsets must end at 0")
            object.__setattr__(self, "offsets", _frozen(offs))
        else:
            raise InputError(f"unknown initial function kind {self.kind!r}")
        if not np.all(np.isfinite(vals)):
            raise InputError("initial function values must be finite")
        object.__setattr__(self, "values", _frozen(vals))

    @classmethod
    def constant(cls, value) -> "InitialFunction":
        return cls("constant", np.atleast_1d(np.asarray(value, dtype=float)))

    @classmethod
    def from_dict(cls, data: dict, n: int) -> "InitialFunction":
        kind = data.get("kind", "constant")
        if kind == "constant":
            phi = cls.constant(data["values"] if "values" in data else data["value"])
        else:
            phi = cls("tabulated", data["values"], data["offsets"])
        if phi.n != n:
            raise DimensionError(f"initial function has dimension {phi.n}, system has n={n}")
        return phi

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "values": self.values.tolist()}
        return {"kind": "tabulated", "offsets": self.offsets.tolist(), "values": self.values.tolist()}

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    def covers(self, max_delay: float) -> bool:
        return self.kind == "constant" or self.offsets[0] <= -max_delay + 1e-12

    def __call__(self, s) -> np.ndarray:
        """History value at offset(s) ``s <= 0``; returns shape ``s.shape + (n,)``."""
        s = np.asarray(s, dtype=float)
        if np.any(s > 1e-12):
            raise DomainError("initial function queried at a positive offset")
        if self.kind == "constant":
            return np.broadcast_to(self.values, s.shape + (self.n,)).copy()
        if np.any(s < self.offsets[0] - 1e-12):
            raise DomainError(f"initial function queried below its domain start {self.offsets[0]}")
        return np.stack([np.interp(s, self.offsets, self.values[:, j]) for j in range(self.n)], axis=-1)

    def sup_norm(self) -> float:
        """``||phi||_r``: the sup of the Euclidean norm over the domain."""
        if self.kind == "constant":
            return float(np.linalg.norm(self.values))
        # linear interpolation never exceeds the largest nodal norm
        return float(np.max(np.linalg.norm(self.values, axis=1)))


# ---------------------------------------------------------------------------
# impulse schedules


@dataclass(frozen=True)
class ImpulseSchedule:
    """Strictly increasing impulse times after ``t0`` with declared dwell constraints.

    ``inf_dwell`` (if set) requires every gap, including ``t_1 - t0``, to be at
    least that long; ``sup_dwell`` requires every gap to be at most that long.
    Neither set means the arbitrary class.
    """

    times: tuple
    t0: float
    inf_dwell: float | None = None
    sup_dwell: float | None = None

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", times)
        if not all(math.isfinite(t) for t in times):
            raise InputError("impulse times must be finite")
        if times and times[0] <= self.t0:
            raise InputError(f"first impulse time {times[0]} must exceed t0={self.t0}")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InputError("impulse times must be strictly increasing")
        if times:
            gaps = classify_schedule(self)
            tol = 1e-9 * max(1.0, abs(times[-1]))
            if self.inf_dwell is not None and gaps.inf_gap < self.inf_dwell - tol:
                raise ConfigurationError(
                    f"schedule violates its declared inf-dwell {self.inf_dwell}: smallest gap {gaps.inf_gap}")
            if self.sup_dwell is not None and gaps.sup_gap > self.sup_dwell + tol:
                raise ConfigurationError(
                    f"schedule violates its declared sup-dwell {self.sup_dwell}: largest gap {gaps.sup_gap}")

    @property
    def declared_class(self) -> str:
        kinds = [k for k, v in (("inf_dwell", self.inf_dwell), ("sup_dwell", self.sup_dwell)) if v is not None]
        return "+".join(kinds) if kinds else "arbitrary"

    def __len__(self) -> int:
        return len(self.times)

    def up_to(self, T: float) -> tuple:
        return tuple(t for t in self.times if t <= T + 1e-12 * max(1.0, abs(T)))

    @classmethod
    def from_dict(cls, data: dict, t0: float, horizon: float, quantum: float | None = None) -> "ImpulseSchedule":
        kind = data.get("kind", "explicit")
        if kind == "uniform":
            return make_schedule_uniform(t0, data["delta"], horizon)
        if kind == "random":
            return make_schedule_random(t0, data["delta_min"], data["delta_max"], horizon,
                                        data.get("seed", 0), quantum=quantum)
        if kind == "explicit":
            return cls(tuple(data.get("times", ())), t0, data.get("inf_dwell"), data.get("sup_dwell"))
        if kind == "none":
            return cls((), t0)
        raise InputError(f"unknown schedule kind {kind!r}")


class GapSummary(NamedTuple):
    inf_gap: float
    sup_gap: float
    degenerate: bool = False


def classify_schedule(s: ImpulseSchedule, t0: float | None = None) -> GapSummary:
    """Smallest and largest gap between consecutive impulses, counting ``t_1 - t0``."""
    t0 = s.t0 if t0 is None else t0
    if not s.times:
        return GapSummary(math.inf, 0.0, True)
    pts = np.concatenate(([t0], s.times))
    gaps = np.diff(pts)
    if np.any(gaps <= 0):
        raise InputError("impulse times must be strictly increasing and exceed t0")
    return GapSummary(float(gaps.min()), float(gaps.max()))


def make_schedule_uniform(t0: float, delta: float, horizon: float) -> ImpulseSchedule:
    """Impulses at ``t0 + k*delta`` for every ``k >= 1`` not past ``t0 + horizon``."""
    if not delta > 0 or not horizon > 0:
        raise InputError("delta and horizon must be positive")
    count = int(math.floor(horizon / delta + 1e-9))
    times = tuple(t0 + k * delta for k in range(1, count + 1))
    return ImpulseSchedule(times, t0, inf_dwell=delta, sup_dwell=delta)


def make_schedule_random(t0: float, delta_min: float, delta_max: float, horizon: float,
                         seed: int = 0, quantum: float | None = None) -> ImpulseSchedule:
    """Gaps drawn uniformly from ``[delta_min, delta_max]`` with a seeded generator.

    With ``quantum`` set, gaps are drawn uniformly from the multiples of
    ``quantum`` inside the interval, so the times land on an integration grid.
    """
    if not (0 < delta_min <= delta_max) or not horizon > 0:
        raise InputError("need 0 < delta_min <= delta_max and horizon > 0")
    if delta_min == delta_max:
        return make_schedule_uniform(t0, delta_min, horizon)
    rng = np.random.default_rng(seed)
    end = t0 + horizon
    if quantum is not None:
        lo = math.ceil(delta_min / quantum - 1e-9)
        hi = math.floor(delta_max / quantum + 1e-9)
        if lo > hi:
            raise InputError(f"no multiple of {quantum} lies in [{delta_min}, {delta_max}]")
    steps = 0
    t = t0
    times = []
    while True:
        if quantum is None:
            t = t + rng.uniform(delta_min, delta_max)
        else:
            steps += int(rng.integers(lo, hi + 1))
            t = t0 + steps * quantum
        if t > end + 1e-9 * max(1.0, abs(end)):
            break
        times.append(t)
    return ImpulseSchedule(tuple(times), t0, inf_dwell=delta_min, sup_dwell=delta_max)


def schedule_from_times(times: Sequence[float], t0: float) -> ImpulseSchedule:
    return ImpulseSchedule(tuple(times), t0)
