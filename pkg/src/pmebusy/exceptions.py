class NumericalError(RuntimeError):
    """Raised when a quadrature or inversion fails to reach its tolerance."""
