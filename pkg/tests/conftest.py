import pytest

from iisscert.config import RunConfig
from iisscert.examples import builtin_config
from iisscert.integrator import simulate

# filled by tests/test_acceptance.py: (criterion, passed, detail)
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")


_RUNS = {}


def example_run(name: str, zero_input: bool = False, T: float | None = None):
    """Cached (config, schedule, trajectory) for a built-in example."""
    key = (name, zero_input, T)
    if key not in _RUNS:
        cfg = RunConfig.from_dict(builtin_config(name))
        if zero_input:
            from iisscert.system import InputSignal
            cfg = cfg.with_overrides(input=InputSignal.zero(cfg.system.q))
        if T is not None:
            cfg = cfg.with_overrides(T=T)
        sched = cfg.schedule()
        traj = simulate(cfg.system, cfg.initial, cfg.input, sched, cfg.t0, cfg.T, cfg.h)
        _RUNS[key] = (cfg, sched, traj)
    return _RUNS[key]


@pytest.fixture
def run_example():
    return example_run
