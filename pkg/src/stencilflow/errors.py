"""Exception hierarchy shared by every stencilflow module."""


class StencilFlowError(Exception):
    """Base class for all errors raised by stencilflow."""


class OrderError(StencilFlowError):
    """An FD order is invalid (odd, too large for the halo, ...)."""


class ArityError(StencilFlowError):
    """Not enough stencil offsets for the requested derivative."""


class NotLinearError(StencilFlowError):
    pass


class SingularError(StencilFlowError):
    pass


class LocationError(StencilFlowError):
    """A sparse coordinate falls outside the physical domain."""


class BindingError(StencilFlowError):
    """A symbol or field required at run time is missing or mismatched."""


class LoweringError(StencilFlowError):
    pass


class SchedulingError(StencilFlowError):
    pass


class ParameterError(StencilFlowError):
    pass


class StabilityError(StencilFlowError):
    """A CFL-type stability bound is violated before execution."""


class InstabilityError(StencilFlowError):
    """NaN or Inf detected while executing an operator."""


class CapabilityError(StencilFlowError):
    """An optional capability (e.g. a C toolchain) is unavailable."""


class StateError(StencilFlowError):
    pass


class ConfigError(StencilFlowError):
    pass


class FitError(StencilFlowError):
    pass
