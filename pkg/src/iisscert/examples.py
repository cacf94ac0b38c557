"""Built-in scalar and planar bilinear examples with their impulse regimes."""
from __future__ import annotations

import copy

from .errors import InputError

# t^-2 and e^{-2t}
EXAMPLE_INPUT = {
    "kind": "components",
    "components": [{"kind": "inverse_square", "scale": 1.0}, {"kind": "exp_decay", "rate": 2.0, "scale": 1.0}],
}

_SCALAR = {
    "n": 1, "q": 2,
    "A": [[-0.5]],
    "A_list": [[[0.5]], [[0.25]]],
    "B_list": [[[1 / 3]], [[0.2]]],
    "C": [[0.5, 0.5]],
    "F": [[1 / 3, 1 / 3]],
    "r": 0.4, "d": 0.4,
    "input": EXAMPLE_INPUT,
    "initial": {"kind": "constant", "values": [2.0]},
    "t0": 1.0, "h": 1e-3, "eps": 0.01, "xi": 0.01,
}

_PLANAR = {
    "n": 2, "q": 2,
    "A": [[1.5, 1.0], [0.5, 2.0]],
    "A_list": [[[0.5, 0.0], [0.0, 0.5]], [[0.25, 0.0], [0.0, 0.25]]],
    "B_list": [[[1 / 3, 0.0], [0.0, 1 / 3]], [[0.2, 0.0], [0.0, 0.2]]],
    # each state row receives (w1 + w2)/2 and (w1 + w2)/3
    "C": [[0.5, 0.5], [0.5, 0.5]],
    "F": [[1 / 3, 1 / 3], [1 / 3, 1 / 3]],
    "D": [[-0.65, 0.0], [0.0, -0.65]],
    "E": [[0.2, 0.0], [0.0, 0.2]],
    "r": 0.4, "d": 0.4,
    "input": EXAMPLE_INPUT,
    "initial": {"kind": "constant", "values": [0.6, -1.4]},
    # t^-2 is singular at 0, so the run starts at 1
    "t0": 1.0, "h": 1e-3, "eps": 0.01, "xi": 0.01,
}


def _scalar(D: float, E: float, delta: float, horizon: float) -> dict:
    cfg = copy.deepcopy(_SCALAR)
    cfg.update({"D": [[D]], "E": [[E]], "T": cfg["t0"] + horizon,
                "schedule": {"kind": "uniform", "delta": delta}})
    return cfg


def _planar(delta: float, horizon: float) -> dict:
    cfg = copy.deepcopy(_PLANAR)
    cfg.update({"T": cfg["t0"] + horizon, "schedule": {"kind": "uniform", "delta": delta}})
    return cfg


_BUILDERS = {
    "ex1a": lambda: _scalar(0.25, 0.2, 1.0, 20.0),
    "ex1b": lambda: _scalar(-1.0, 0.6, 1.0, 20.0),
    "ex1c": lambda: _scalar(-1.0, 0.8, 0.39, 10.0),
    "ex2": lambda: _planar(0.2, 6.0),
}

EXAMPLE_NAMES = tuple(_BUILDERS)


def builtin_config(name: str) -> dict:
    """A fresh JSON-ready config dict for a built-in example."""
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise InputError(f"unknown example {name!r}; valid names: {', '.join(EXAMPLE_NAMES)}") from None
