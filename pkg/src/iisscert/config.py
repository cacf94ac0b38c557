"""JSON run configurations: a bilinear system plus input, history, horizon and schedule."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .errors import InputError
from .system import BilinearSystem, ImpulseSchedule, InitialFunction, InputSignal


@dataclass(frozen=True)
class RunConfig:
    system: BilinearSystem
    input: InputSignal
    initial: InitialFunction
    t0: float
    T: float
    h: float
    schedule_spec: dict
    eps: float = 0.01
    xi: float = 0.01

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        sys = BilinearSystem.from_dict(data)
        try:
            t0 = float(data.get("t0", 0.0))
            T = float(data["T"])
            h = float(data["h"])
        except KeyError as exc:
            raise InputError(f"config is missing key {exc.args[0]!r}") from None
        return cls(
            system=sys,
            input=InputSignal.from_dict(data.get("input", {"kind": "zero"}), sys.q),
            initial=InitialFunction.from_dict(data.get("initial", {"kind": "constant", "values": [0.0] * sys.n}),
                                              sys.n),
            t0=t0, T=T, h=h,
            schedule_spec=dict(data.get("schedule", {"kind": "none"})),
            eps=float(data.get("eps", 0.01)), xi=float(data.get("xi", 0.01)),
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = self.system.to_dict()
        out.update({
            "input": self.input.to_dict(), "initial": self.initial.to_dict(),
            "t0": self.t0, "T": self.T, "h": self.h,
            "schedule": dict(self.schedule_spec), "eps": self.eps, "xi": self.xi,
        })
        return out

    def schedule(self) -> ImpulseSchedule:
        return ImpulseSchedule.from_dict(self.schedule_spec, self.t0, self.T - self.t0, quantum=self.h)

    def with_overrides(self, **changes) -> "RunConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)

    def dwell_hint(self) -> float | None:
        """The dwell parameter an envelope construction should use for this schedule."""
        spec = self.schedule_spec
        kind = spec.get("kind", "explicit")
        if kind == "uniform":
            return float(spec["delta"])
        if kind == "random":
            return None
        sched = self.schedule()
        return sched.inf_dwell if sched.inf_dwell is not None else sched.sup_dwell
