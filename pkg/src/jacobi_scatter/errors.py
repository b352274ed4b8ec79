"""Exception types shared across the package."""


class ModelError(ValueError):
    """Invalid model parameters or model data (a configuration problem)."""


class ComputationError(RuntimeError):
    """A numerical procedure could not deliver a trustworthy answer."""


class EdgeProximityError(ComputationError):
    """The spectral parameter is too close to one of the edges z = +-1."""


class ConvergenceError(ComputationError):
    """An iterative or summation procedure did not reach its tolerance."""


class DecayError(ComputationError):
    """The model's declared decay class is too weak for the requested quantity."""
