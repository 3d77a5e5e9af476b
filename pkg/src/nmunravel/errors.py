"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class NmunravelError(Exception):
    exit_code = 4


class ConfigurationError(NmunravelError, ValueError):
    exit_code = 2


class UnsupportedConfigurationError(ConfigurationError):
    pass


class OutputError(NmunravelError, OSError):
    exit_code = 3


class NumericalError(NmunravelError, ArithmeticError):
    exit_code = 4


class DegenerateStateError(NumericalError):
    pass


class SingularOperatorError(NumericalError):
    pass


class InvertibilityError(ConfigurationError):
    pass


class BathSolverDivergence(NumericalError):
    pass


class IntegratorToleranceError(NumericalError):
    pass


class ScheduleRangeError(NumericalError, IndexError):
    pass


class TrajectoryOverflowError(NumericalError):
    def __init__(self, step, trajectory, message=None):
        self.step = step
        self.trajectory = trajectory
        super().__init__(message or f"trajectory {trajectory} overflowed at step {step}")
