"""Simulation and stability certificates for bilinear impulsive delay systems."""
from .errors import (ConfigurationError, DimensionError, DomainError, IISSError, InputError,
                     NumericalError, PreconditionError)
from .system import (BilinearSystem, ImpulseSchedule, InitialFunction, InputSignal, ScalarSignal,
                     classify_schedule, eval_input, make_schedule_random, make_schedule_uniform,
                     schedule_from_times)
from .integrator import GenericSystem, Trajectory, apply_impulse, history_lookup, simulate

__version__ = "0.1.0"
