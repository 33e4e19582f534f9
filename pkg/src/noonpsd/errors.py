"""Exception and warning types shared across the package."""


class NoonPsdError(Exception):
    """Base class for all package errors."""


class ConfigError(NoonPsdError, ValueError):
    """Invalid or unparseable run configuration."""


class DataError(NoonPsdError, ValueError):
    """Input data that cannot be analysed (bad counts file, zero floor, ...)."""


class GridMismatchError(DataError):
    """Spectra defined on different frequency grids."""


class NoCrossoverError(NoonPsdError):
    """A detectability crossover does not lie inside the swept range."""


class LinearRegimeWarning(UserWarning):
    """Modulation is too strong (or badly biased) for the first-order fringe model."""
